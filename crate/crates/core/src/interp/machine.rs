use std::collections::VecDeque;

use super::cdfg::{attr_payload, constant_value};
use super::{eval_op, DfGraph, InterpError, Memory, Payload, PredValue, Sink};
use crate::ir::{CmpKind, Input, Opcode, ScalarType};

/// Per-op internal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpState {
    Plain,
    /// Source ops (trigger-less constants) and grant_once fire a single time.
    Fresh,
    Consumed,
    /// loop_control between activations.
    Idle,
    /// loop_control emitting; holds the next index.
    Active(i64),
}

/// Firing engine shared by the dataflow interpreter and the simulator: input
/// queues, op state, memory and the recorded return value. Callers decide
/// when ops are examined and when produced tokens reach their sinks.
#[derive(Clone, Debug)]
pub struct Machine {
    pub graph: DfGraph,
    pub queues: Vec<Vec<VecDeque<PredValue>>>,
    pub state: Vec<OpState>,
    pub memory: Memory,
    pub args: Vec<Payload>,
    pub ret: Option<Payload>,
    pub returned: bool,
    pub depth: usize,
}

struct LoopSpec {
    start: i64,
    step: i64,
    bound: i64,
    cmp: CmpKind,
}

impl Machine {
    pub fn new(graph: DfGraph, args: Vec<Payload>, memory: Memory, depth: usize) -> Result<Self, InterpError> {
        let queues = graph.ops.iter().map(|o| vec![VecDeque::new(); o.operands.len()]).collect();
        let state = graph
            .ops
            .iter()
            .map(|o| match o.opcode {
                Opcode::GrantOnce => OpState::Fresh,
                Opcode::Constant if o.operands.is_empty() => OpState::Fresh,
                Opcode::LoopControl => OpState::Idle,
                _ => OpState::Plain,
            })
            .collect();
        let m = Machine { graph, queues, state, memory, args, ret: None, returned: false, depth };
        if m.args.len() != m.graph.param_outs.len() {
            return Err(InterpError::BadInput(format!(
                "expected {} arguments, got {}",
                m.graph.param_outs.len(),
                m.args.len()
            )));
        }
        Ok(m)
    }

    /// Tokens each parameter delivers once at start: (param index, sink, value).
    pub fn param_tokens(&self) -> Vec<(Sink, PredValue)> {
        let mut out = Vec::new();
        for (k, sinks) in self.graph.param_outs.iter().enumerate() {
            for s in sinks {
                out.push((*s, PredValue::valid(self.args[k])));
            }
        }
        out
    }

    pub fn deliver(&mut self, sink: Sink, v: PredValue) -> Result<(), InterpError> {
        let q = &mut self.queues[sink.node][sink.port];
        if q.len() >= self.depth {
            return Err(InterpError::QueueOverflow(self.graph.ops[sink.node].id));
        }
        q.push_back(v);
        Ok(())
    }

    /// Whether every sink of `n` can take one more token, counting `extra`
    /// tokens already on their way to each sink.
    pub fn has_room(&self, n: usize, extra: impl Fn(&Sink) -> usize) -> bool {
        self.graph.sinks(n).all(|(_, s)| self.queues[s.node][s.port].len() + extra(s) < self.depth)
    }

    /// Drops false tokens queued at a phi. Returns whether anything was dropped.
    pub fn purge_phi(&mut self, n: usize) -> bool {
        if self.graph.ops[n].opcode != Opcode::Phi {
            return false;
        }
        let mut dropped = false;
        for q in &mut self.queues[n] {
            let before = q.len();
            q.retain(|t| t.pred);
            dropped |= q.len() != before;
        }
        dropped
    }

    /// Whether `n`'s firing rule is satisfied by the queued tokens. Phi must
    /// be purged first.
    pub fn ready(&self, n: usize) -> bool {
        let op = &self.graph.ops[n];
        let q = &self.queues[n];
        let all = || q.iter().all(|p| !p.is_empty());
        match op.opcode {
            Opcode::Reserve | Opcode::CtrlMov => false,
            Opcode::Phi => q.iter().any(|p| !p.is_empty()),
            Opcode::GrantOnce => self.state[n] == OpState::Fresh && all(),
            Opcode::Constant if op.operands.is_empty() => self.state[n] == OpState::Fresh,
            Opcode::LoopControl => match self.state[n] {
                OpState::Active(_) => true,
                _ => all(),
            },
            _ => all(),
        }
    }

    fn loop_spec(&self, n: usize) -> Result<LoopSpec, InterpError> {
        let op = &self.graph.ops[n];
        let get = |k: &str| op.attr_int(k).ok_or_else(|| InterpError::Type(format!("loop_control {} lacks {}", op.id, k)));
        Ok(LoopSpec {
            start: get("start")?,
            step: get("step")?,
            bound: get("bound")?,
            cmp: op.cmp_kind().unwrap_or(CmpKind::Slt),
        })
    }

    /// Fires `n` (which must be ready), returning the produced tokens as
    /// (result index, value). An empty list means the op fired without output.
    pub fn fire(&mut self, n: usize) -> Result<Vec<(usize, PredValue)>, InterpError> {
        let op = self.graph.ops[n].clone();
        let rty = op.results.first().map(|r| r.1.scalar).unwrap_or(ScalarType::I64);
        match op.opcode {
            Opcode::Phi => {
                let ports: Vec<usize> = (0..self.queues[n].len()).filter(|&p| !self.queues[n][p].is_empty()).collect();
                if ports.len() > 1 {
                    return Err(InterpError::PhiUniqueness(op.id));
                }
                let t = self.queues[n][ports[0]].pop_front().unwrap();
                return Ok(vec![(0, PredValue::valid(t.data.normalize(rty)))]);
            }
            Opcode::LoopControl => {
                let spec = self.loop_spec(n)?;
                let i = match self.state[n] {
                    OpState::Active(i) => i,
                    _ => {
                        let trig = self.pop_all(n);
                        if !trig.iter().all(|t| t.pred) {
                            return Ok(vec![]);
                        }
                        spec.start
                    }
                };
                let go = spec.cmp.eval(i, spec.bound);
                self.state[n] = if go { OpState::Active(i.wrapping_add(spec.step)) } else { OpState::Idle };
                let vty = op.results.get(1).map(|r| r.1.scalar).unwrap_or(ScalarType::I1);
                return Ok(vec![
                    (0, PredValue::valid(Payload::Int(i).normalize(rty))),
                    (1, PredValue::valid(Payload::Int(go as i64).normalize(vty))),
                ]);
            }
            _ => {}
        }
        let toks = self.pop_all(n);
        let pred = toks.iter().all(|t| t.pred);
        // Slot values in order, with immediates spliced in; trigger tokens are
        // only used for their predicate.
        let mut x = Vec::new();
        let mut it = toks.iter();
        for input in op.inputs() {
            match input {
                Input::Value(_) => x.push(it.next().map(|t| t.data).unwrap_or(Payload::Int(0))),
                Input::Imm(a) => x.push(attr_payload(&a)?),
            }
        }
        let out = match op.opcode {
            Opcode::Constant => {
                if op.operands.is_empty() {
                    self.state[n] = OpState::Consumed;
                }
                vec![(0, PredValue::new(constant_value(&op, &self.args)?, pred))]
            }
            Opcode::GrantOnce => {
                self.state[n] = OpState::Consumed;
                vec![(0, PredValue::valid(x[0].normalize(rty)))]
            }
            Opcode::GrantPredicate => {
                let (v, c) = (toks[0], toks[1]);
                vec![(0, PredValue::new(v.data.normalize(rty), c.data.as_bool() && c.pred))]
            }
            Opcode::Load | Opcode::LoadIndexed => {
                let v = if pred {
                    let addr = x.iter().fold(0i64, |s, p| s.wrapping_add(p.as_int()));
                    self.memory.load(addr, rty)?
                } else {
                    Payload::zero(rty)
                };
                vec![(0, PredValue::new(v, pred))]
            }
            Opcode::Store => {
                if pred {
                    self.memory.store(x[1].as_int(), x[0])?;
                }
                vec![]
            }
            Opcode::Return => {
                if pred && !self.returned {
                    self.returned = true;
                    self.ret = x.first().copied();
                }
                vec![]
            }
            _ => {
                let v = match eval_op(&op, &x, rty) {
                    Ok(v) => v,
                    Err(InterpError::DivByZero(_)) if !pred => Payload::zero(rty),
                    Err(e) => return Err(e),
                };
                vec![(0, PredValue::new(v, pred))]
            }
        };
        Ok(out)
    }

    fn pop_all(&mut self, n: usize) -> Vec<PredValue> {
        self.queues[n].iter_mut().map(|q| q.pop_front().expect("ready")).collect()
    }

    /// Whether any token is still queued anywhere.
    pub fn has_tokens(&self) -> bool {
        self.queues.iter().flatten().any(|q| !q.is_empty())
    }
}
