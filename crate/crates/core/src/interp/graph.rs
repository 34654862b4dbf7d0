use std::collections::HashMap;

use super::InterpError;
use crate::ir::{Form, Function, OpId, Opcode, Operation, ValueId};

/// Where a port's tokens come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    Op { node: usize, result: usize },
    Param(usize),
}

/// A consumer port. `back` marks a loop-carried edge that went through a
/// `reserve`/`ctrl_mov` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sink {
    pub node: usize,
    pub port: usize,
    pub back: bool,
}

/// Token-level view of a dataflow function. Nodes are ops in textual order;
/// `reserve` and `ctrl_mov` stay in the list but are bypassed: readers of a
/// reserve are wired straight to the value its `ctrl_mov` forwards.
#[derive(Clone, Debug)]
pub struct DfGraph {
    pub ops: Vec<Operation>,
    pub inputs: Vec<Vec<(Src, bool)>>,
    pub outs: Vec<Vec<Vec<Sink>>>,
    pub param_outs: Vec<Vec<Sink>>,
    pub index: HashMap<OpId, usize>,
}

impl DfGraph {
    pub fn new(f: &Function) -> Result<Self, InterpError> {
        if f.form != Form::Dataflow || f.blocks.len() != 1 {
            return Err(InterpError::WrongForm("expected a single-block dataflow function".into()));
        }
        let ops: Vec<Operation> = f.blocks[0].ops.clone();
        let mut def: HashMap<ValueId, Src> = HashMap::new();
        for (k, (v, _)) in f.params.iter().enumerate() {
            def.insert(*v, Src::Param(k));
        }
        for (n, op) in ops.iter().enumerate() {
            for (r, (v, _)) in op.results.iter().enumerate() {
                def.insert(*v, Src::Op { node: n, result: r });
            }
        }
        // reserve value -> value forwarded into it
        let mut fed: HashMap<ValueId, ValueId> = HashMap::new();
        for op in &ops {
            if op.opcode == Opcode::CtrlMov && op.operands.len() == 2 {
                fed.insert(op.operands[1], op.operands[0]);
            }
        }
        let resolve = |mut v: ValueId| -> Result<(Src, bool), InterpError> {
            let mut back = false;
            for _ in 0..=fed.len() {
                match fed.get(&v) {
                    Some(&src) => {
                        v = src;
                        back = true;
                    }
                    None => {
                        let s = def.get(&v).copied().ok_or_else(|| InterpError::Type(format!("undefined {}", v)))?;
                        return Ok((s, back));
                    }
                }
            }
            Err(InterpError::Type("ctrl_mov cycle".into()))
        };
        let mut inputs = Vec::with_capacity(ops.len());
        let mut outs: Vec<Vec<Vec<Sink>>> = ops.iter().map(|o| vec![Vec::new(); o.results.len()]).collect();
        let mut param_outs = vec![Vec::new(); f.params.len()];
        for (n, op) in ops.iter().enumerate() {
            let mut ins = Vec::new();
            if !matches!(op.opcode, Opcode::Reserve | Opcode::CtrlMov) {
                for (port, &v) in op.operands.iter().enumerate() {
                    let (src, back) = resolve(v)?;
                    let sink = Sink { node: n, port, back };
                    match src {
                        Src::Op { node, result } => outs[node][result].push(sink),
                        Src::Param(k) => param_outs[k].push(sink),
                    }
                    ins.push((src, back));
                }
            }
            inputs.push(ins);
        }
        let index = ops.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
        Ok(DfGraph { ops, inputs, outs, param_outs, index })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Structural nodes never fire.
    pub fn is_structural(&self, n: usize) -> bool {
        matches!(self.ops[n].opcode, Opcode::Reserve | Opcode::CtrlMov)
    }

    /// All sinks fed by node `n`, over every result.
    pub fn sinks(&self, n: usize) -> impl Iterator<Item = (usize, &Sink)> {
        self.outs[n].iter().enumerate().flat_map(|(r, s)| s.iter().map(move |k| (r, k)))
    }

    /// Producer-to-consumer edges between nodes, with the loop-carried flag.
    pub fn edges(&self) -> Vec<(usize, usize, bool)> {
        let mut e = Vec::new();
        for n in 0..self.len() {
            for (_, s) in self.sinks(n) {
                e.push((n, s.node, s.back));
            }
        }
        e
    }
}
