//! Control-flow temporal logic (CFTL) over a small imperative language.
//!
//! The pipeline: parse a MiniLang program ([`lang`]), build its symbolic
//! control flow graph ([`scfg`]), parse a property ([`cftl`]), compute the
//! static binding space and instrumentation plan ([`instrument`]), then run the
//! program under a simulated clock while the online engine ([`runtime`]) feeds
//! formula-tree monitors ([`monitor`]). [`cli`] wires it together.

pub mod cftl;
pub mod cli;

pub mod instrument;
pub mod lang;
pub mod monitor;
pub mod rational;
pub mod runtime;
pub mod scfg;

pub use rational::Rat;
