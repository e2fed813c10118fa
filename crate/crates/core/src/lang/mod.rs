//! MiniLang: parser, canonical printer and simulated-time interpreter.

pub mod ast;
mod interp;
mod parser;
mod value;

pub use ast::Program;
pub use interp::{execute, execute_with_scfg, ExecError, ExitReport, SimClock};
pub use parser::{parse_named, parse_program, SyntaxError};
pub use value::Value;
