//! Compiler toolkit lowering control-data-flow-graph kernels into a predicated
//! dataflow IR, with an interpreter, a CGRA mapper and a cycle-accurate simulator.

pub mod arch;
pub mod corpus;
pub mod interp;
pub mod ir;
pub mod mapper;
pub mod passes;
pub mod pipeline;
pub mod sim;
pub mod text;
