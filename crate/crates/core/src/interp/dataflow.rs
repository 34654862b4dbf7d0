use super::{DfGraph, InterpError, Machine, Memory, Outcome, Payload};
use crate::ir::{Function, OpId, Opcode};

#[derive(Clone, Copy, Debug)]
pub struct DataflowConfig {
    /// Maximum number of op firings.
    pub fuel: u64,
    /// Capacity of every input port queue.
    pub queue_depth: usize,
}

impl Default for DataflowConfig {
    fn default() -> Self {
        DataflowConfig { fuel: 1_000_000, queue_depth: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataflowRun {
    pub outcome: Outcome,
    /// Fired ops in firing order.
    pub trace: Vec<OpId>,
    /// Round-robin sweeps over the op list until quiescence.
    pub macro_steps: u64,
}

/// Token-driven interpretation of a dataflow function.
///
/// Each macro-step visits ops in textual order and fires every op whose
/// inputs are available, at most once per step; tokens become visible to later
/// ops in the same sweep. Execution continues after a true `return` until no
/// op can fire, so trailing stores land in memory. Quiescence without a true
/// return is a deadlock.
pub fn interpret_dataflow(
    f: &Function,
    args: &[Payload],
    mem: Memory,
    cfg: DataflowConfig,
) -> Result<DataflowRun, InterpError> {
    let graph = DfGraph::new(f)?;
    let mut m = Machine::new(graph, normalize_args(f, args), mem, cfg.queue_depth)?;
    for (sink, v) in m.param_tokens() {
        m.deliver(sink, v)?;
    }
    let mut trace = Vec::new();
    let mut steps = 0u64;
    loop {
        steps += 1;
        let mut progress = false;
        for n in 0..m.graph.len() {
            progress |= m.purge_phi(n);
            if !m.ready(n) {
                continue;
            }
            if m.graph.ops[n].opcode == Opcode::LoopControl && !m.has_room(n, |_| 0) {
                continue;
            }
            if trace.len() as u64 >= cfg.fuel {
                return Err(InterpError::FuelExhausted(cfg.fuel));
            }
            let out = m.fire(n)?;
            trace.push(m.graph.ops[n].id);
            progress = true;
            for (r, v) in out {
                for s in m.graph.outs[n][r].clone() {
                    m.deliver(s, v)?;
                }
            }
        }
        if !progress {
            break;
        }
    }
    if !m.returned {
        return Err(InterpError::Deadlock);
    }
    Ok(DataflowRun { outcome: Outcome { ret: m.ret, memory: m.memory }, trace, macro_steps: steps })
}

/// Coerces arguments to their parameter types; extra arguments pass through
/// so the arity check can report them.
pub(crate) fn normalize_args(f: &Function, args: &[Payload]) -> Vec<Payload> {
    args.iter()
        .zip(&f.params)
        .map(|(a, p)| a.normalize(p.1.scalar))
        .chain(args.iter().skip(f.params.len()).copied())
        .collect()
}
