//! Executable semantics: a sequential CDFG interpreter used as the reference,
//! and a token-driven interpreter for the dataflow form.

mod cdfg;
mod dataflow;
mod eval;
mod graph;
mod machine;
mod memory;
mod value;

pub use cdfg::interpret_cdfg;
pub use dataflow::{interpret_dataflow, DataflowConfig, DataflowRun};
pub(crate) use dataflow::normalize_args;
pub use eval::eval_op;
pub use graph::{DfGraph, Src, Sink};
pub use machine::{Machine, OpState};
pub use memory::{parse_args, Memory};
pub use value::{Payload, PredValue};

use crate::ir::OpId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("memory access at {addr} out of bounds (size {size})")]
    OutOfBounds { addr: i64, size: usize },
    #[error("division by zero in {0}")]
    DivByZero(OpId),
    #[error("phi uniqueness violated at {0}")]
    PhiUniqueness(OpId),
    #[error("token queue overflow at {0}")]
    QueueOverflow(OpId),
    #[error("deadlock: no op can fire and no return has fired")]
    Deadlock,
    #[error("type error: {0}")]
    Type(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("wrong form: {0}")]
    WrongForm(String),
}

/// Observable outcome of a kernel run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub ret: Option<Payload>,
    pub memory: Memory,
}
