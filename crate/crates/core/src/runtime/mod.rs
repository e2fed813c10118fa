//! Observations of a running program and the online monitoring engine.

pub mod engine;
pub mod model;
pub mod oracle;

pub use engine::{run_async, run_sync, BindingVerdict, Engine, Run, RunError, LiveMonitor, MonitorPool, RuntimeError, TimingClass, TimingPoint, VerdictReport};
pub use model::{ConcreteState, EventSink, Kind, ObservationEvent, Payload, RtElem, SymbolValue, Tee, TransitionRecord};
pub use oracle::{evaluate_binding, evaluate_observations, generated_bindings, oracle_evaluate};
