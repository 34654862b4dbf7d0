//! Transformation passes: CDFG preprocessing, lowering to dataflow form and
//! hardware-specific fusion.

mod cast;
mod dce;
mod edges;
mod flatten;
mod fold;
mod fuse;
mod live_in;
mod loop_control;
mod predicate;
mod promote;

pub use cast::canonicalize_cast;
pub use dce::dce;
pub use edges::{classify_cfg_edges, category_counts, Direction, EdgeClass};
pub use flatten::{flatten_to_dataflow, RewriteRecord};
pub use fold::fold_constant;
pub use fuse::{fuse_load_indexed, fuse_muladd};
pub use live_in::{
    canonicalize_live_in, canonicalize_live_in_traced, compute_live_ins, LiveInRewrite, LiveInTable,
};
pub use loop_control::fuse_loop_control;
pub use predicate::apply_data_predication;
pub use promote::promote_function_arguments;

use crate::ir::Violation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PassError {
    #[error("irreducible control flow: edge {from} -> {to}")]
    Irreducible { from: String, to: String },
    #[error("dead code: {0}")]
    DeadCode(String),
    #[error("preprocessing incomplete: {0}")]
    PreprocessingIncomplete(String),
    #[error("index width must be 32 or 64, got {0}")]
    IndexWidth(u32),
    #[error("wrong form: {0}")]
    WrongForm(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{pass} produced invalid IR: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Verify { pass: String, violations: Vec<Violation> },
}
