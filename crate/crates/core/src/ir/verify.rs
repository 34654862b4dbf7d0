use std::collections::{HashMap, HashSet};
use std::fmt;

use super::cfg::Cfg;
use super::{Arity, DefSite, Form, Function, Opcode, ScalarType, ValueId};

/// One broken rule, naming the offending op or value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

struct Report<'a> {
    f: &'a Function,
    out: Vec<Violation>,
}

impl Report<'_> {
    fn push(&mut self, rule: &'static str, message: String) {
        self.out.push(Violation { rule, message });
    }

    fn name(&self, v: ValueId) -> String {
        match self.f.value_names.get(&v) {
            Some(n) => format!("%{}", n),
            None => v.to_string(),
        }
    }
}

/// Checks every invariant that applies to `f.form`. An empty result means the
/// function is well formed.
pub fn verify(f: &Function) -> Vec<Violation> {
    let mut r = Report { f, out: Vec::new() };
    if f.blocks.is_empty() {
        r.push("empty", format!("function @{} has no blocks", f.name));
        return r.out;
    }
    check_ssa(&mut r);
    check_ops(&mut r);
    match f.form {
        Form::Cdfg => check_cdfg(&mut r),
        Form::Dataflow => check_dataflow(&mut r),
    }
    r.out
}

fn check_ssa(r: &mut Report) {
    let f = r.f;
    let mut seen = HashSet::new();
    let mut defs: Vec<ValueId> = f.params.iter().map(|p| p.0).collect();
    for b in &f.blocks {
        defs.extend(b.args.iter().map(|a| a.0));
        for op in &b.ops {
            defs.extend(op.results.iter().map(|res| res.0));
        }
    }
    for v in defs {
        if !seen.insert(v) {
            let msg = format!("duplicate definition {}", r.name(v));
            r.push("ssa", msg);
        }
    }
    for b in &f.blocks {
        for op in &b.ops {
            for v in op.all_uses() {
                if !seen.contains(&v) {
                    let msg = format!("use of undefined value {} in {}", r.name(v), op.opcode);
                    r.push("ssa", msg);
                }
            }
        }
    }
}

fn check_ops(r: &mut Report) {
    let f = r.f;
    for b in &f.blocks {
        for op in &b.ops {
            let filled = op.operands.len() + op.immediate_count();
            let ok = match op.opcode.arity() {
                Arity::Fixed(n) => {
                    filled == n
                        || (f.form == Form::Dataflow
                            && filled == n + 1
                            && (op.opcode == Opcode::Constant || op.opcode.accepts_immediates()))
                }
                Arity::AtLeast(n) => op.operands.len() >= n,
            };
            if !ok {
                r.push(
                    "arity",
                    format!("{} ({}) has {} inputs, arity is {:?}", op.opcode, op.id, filled, op.opcode.arity()),
                );
            }
            if op.results.len() != op.opcode.result_count() {
                r.push(
                    "arity",
                    format!("{} ({}) defines {} results, expected {}", op.opcode, op.id, op.results.len(), op.opcode.result_count()),
                );
            }
        }
    }
}

fn check_cdfg(r: &mut Report) {
    let f = r.f;
    let types = f.value_types();
    let sites = f.def_sites();
    for (bi, b) in f.blocks.iter().enumerate() {
        match b.ops.last() {
            Some(last) if last.opcode.is_terminator() => {}
            _ => r.push("terminator", format!("block {} does not end with a terminator", b.id)),
        }
        for (oi, op) in b.ops.iter().enumerate() {
            if op.opcode.is_terminator() && oi + 1 != b.ops.len() {
                r.push("terminator", format!("terminator {} in the middle of block {}", op.opcode, b.id));
            }
            if op.opcode.is_dataflow_only() {
                r.push("form", format!("dataflow op {} in cdfg form", op.opcode));
            }
            let expected_succs = match op.opcode {
                Opcode::Br => 1,
                Opcode::CondBr => 2,
                _ => 0,
            };
            if op.successors.len() != expected_succs {
                r.push("successors", format!("{} ({}) has {} successors", op.opcode, op.id, op.successors.len()));
            }
            for s in &op.successors {
                let Some(ti) = f.block_index(s.block) else {
                    r.push("successors", format!("branch to unknown block {}", s.block));
                    continue;
                };
                if ti == 0 {
                    r.push("successors", format!("branch to entry block from {}", b.id));
                }
                let target = &f.blocks[ti];
                if target.args.len() != s.args.len() {
                    r.push(
                        "successors",
                        format!("edge {} -> {} passes {} values, block takes {}", b.id, s.block, s.args.len(), target.args.len()),
                    );
                    continue;
                }
                for (a, &(_, pt)) in s.args.iter().zip(&target.args) {
                    if let Some(&at) = types.get(a) {
                        if at != pt {
                            let msg = format!("edge {} -> {} passes {} of type {}, expected {}", b.id, s.block, r.name(*a), at, pt);
                            r.push("type", msg);
                        }
                    }
                }
            }
        }
        let _ = bi;
    }
    if !f.blocks[0].args.is_empty() {
        r.push("entry", "entry block takes arguments".into());
    }
    // Dominance of definitions over uses.
    let cfg = Cfg::new(f);
    for (bi, b) in f.blocks.iter().enumerate() {
        if !cfg.reachable(bi) {
            continue;
        }
        for (oi, op) in b.ops.iter().enumerate() {
            for v in op.all_uses() {
                let Some(site) = sites.get(&v) else { continue };
                let ok = match *site {
                    DefSite::Param(_) => true,
                    DefSite::BlockArg { block, .. } => cfg.dominates(block, bi),
                    DefSite::OpResult { block, op: def_op, .. } => {
                        if block == bi {
                            def_op < oi
                        } else {
                            cfg.dominates(block, bi)
                        }
                    }
                };
                if !ok {
                    let msg = format!("use of {} in {} is not dominated by its definition", r.name(v), b.id);
                    r.push("dominance", msg);
                }
            }
        }
    }
    for (v, t) in &types {
        if t.predicated && t.scalar == ScalarType::Index {
            let msg = format!("predicated index type on {}", r.name(*v));
            r.push("type", msg);
        }
    }
}

fn check_dataflow(r: &mut Report) {
    let f = r.f;
    if f.blocks.len() != 1 {
        r.push("form", format!("dataflow form has {} blocks", f.blocks.len()));
    }
    let types = f.value_types();
    for (v, t) in &types {
        if !t.predicated {
            let msg = format!("unpredicated value {} in dataflow form", r.name(*v));
            r.push("type", msg);
        }
        if t.scalar == ScalarType::Index {
            let msg = format!("index-typed value {} in dataflow form", r.name(*v));
            r.push("type", msg);
        }
    }
    let mut defined: HashSet<ValueId> = f.params.iter().map(|p| p.0).collect();
    let mut reserves: HashMap<ValueId, usize> = HashMap::new();
    for b in &f.blocks {
        defined.extend(b.args.iter().map(|a| a.0));
        for op in &b.ops {
            if op.opcode.is_branch() {
                r.push("form", format!("branch op in dataflow form ({} {})", op.opcode, op.id));
            }
            for v in op.all_uses() {
                if types.contains_key(&v) && !defined.contains(&v) {
                    let msg = format!("{} uses {} before its definition", op.opcode, r.name(v));
                    r.push("order", msg);
                }
            }
            if op.opcode == Opcode::Reserve {
                reserves.entry(op.result()).or_insert(0);
            }
            defined.extend(op.results.iter().map(|res| res.0));
        }
    }
    let defs = f.defining_ops();
    for op in f.ops() {
        if op.opcode != Opcode::CtrlMov || op.operands.len() != 2 {
            continue;
        }
        let target = op.operands[1];
        match defs.get(&target) {
            Some(d) if d.opcode == Opcode::Reserve => {
                *reserves.entry(target).or_insert(0) += 1;
                if types.get(&op.operands[0]) != types.get(&target) {
                    let msg = format!("ctrl_mov {} -> {} changes type", r.name(op.operands[0]), r.name(target));
                    r.push("type", msg);
                }
            }
            _ => {
                let msg = format!("ctrl_mov target {} is not a reserve", r.name(target));
                r.push("reserve", msg);
            }
        }
    }
    let mut rs: Vec<_> = reserves.into_iter().collect();
    rs.sort();
    for (v, n) in rs {
        if n != 1 {
            let msg = format!("reserve {} has {} ctrl_mov writers", r.name(v), n);
            r.push("reserve", msg);
        }
    }
}
