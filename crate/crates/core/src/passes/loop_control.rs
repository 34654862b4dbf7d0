use std::collections::HashMap;

use crate::ir::{Attr, Function, Opcode, Operation, ScalarType, ValueId};

/// A recognised counted loop.
struct Counter {
    phi: ValueId,
    cmp: ValueId,
    trigger: ValueId,
    start: i64,
    step: i64,
    bound: i64,
    kind: String,
}

/// Replaces the induction recurrence of a counted loop with a single
/// `loop_control` op. The recurrence must look like
///
/// ```text
/// %i  = phi %init, %r          // %init traces to a constant through grant_once
/// %c  = icmp %i {rhs_const = bound, cmp = ...}
/// %n  = add %x {rhs_const = step}   // %x is %i or grant_predicate %i, %c
/// ctrl_mov %n, %r
/// ```
///
/// Only functions holding one innermost loop qualify: every phi must be a
/// two-input loop header and every `grant_predicate` must test the loop
/// condition or its negation. Anything else is left untouched, because the
/// streamed index could then run ahead of merges it does not control.
pub fn fuse_loop_control(f: &mut Function) {
    let Some(c) = find_counter(f) else { return };
    let types = f.value_types();
    let mut op = f.make_op(Opcode::LoopControl, vec![c.trigger], &[types[&c.phi], types[&c.cmp]]);
    op.attrs.insert("start".into(), Attr::Int(c.start, ScalarType::I64));
    op.attrs.insert("step".into(), Attr::Int(c.step, ScalarType::I64));
    op.attrs.insert("bound".into(), Attr::Int(c.bound, ScalarType::I64));
    op.attrs.insert("cmp".into(), Attr::Str(c.kind.clone()));
    let (idx, valid) = (op.results[0].0, op.results[1].0);
    for b in &mut f.blocks {
        if let Some(pos) = b.ops.iter().position(|o| o.results.first().map(|r| r.0) == Some(c.phi)) {
            b.ops[pos] = op;
            break;
        }
    }
    f.rename_uses_unchecked(c.phi, idx);
    f.rename_uses_unchecked(c.cmp, valid);
    super::dce::remove_unused_pure(f);
}

fn find_counter(f: &Function) -> Option<Counter> {
    let defs = f.defining_ops();
    let ctrl_src: HashMap<ValueId, ValueId> = f
        .ops()
        .filter(|o| o.opcode == Opcode::CtrlMov && o.operands.len() == 2)
        .map(|o| (o.operands[1], o.operands[0]))
        .collect();
    let is_header = |o: &Operation| {
        o.opcode == Opcode::Phi
            && o.operands.len() == 2
            && defs.get(&o.operands[1]).is_some_and(|r| r.opcode == Opcode::Reserve)
            && ctrl_src.contains_key(&o.operands[1])
    };
    if !f.ops().filter(|o| o.opcode == Opcode::Phi).all(is_header) {
        return None;
    }

    let mut found = None;
    for phi in f.ops().filter(|o| o.opcode == Opcode::Phi) {
        if let Some(c) = match_counter(f, &defs, &ctrl_src, phi) {
            if found.is_some() {
                return None;
            }
            found = Some(c);
        }
    }
    let c = found?;

    let negated = |v: ValueId| defs.get(&v).is_some_and(|d| d.opcode == Opcode::Not && d.operands == [c.cmp]);
    let guarded = f
        .ops()
        .filter(|o| o.opcode == Opcode::GrantPredicate)
        .all(|o| o.operands.len() == 2 && (o.operands[1] == c.cmp || negated(o.operands[1])));
    guarded.then_some(c)
}

fn match_counter(
    f: &Function,
    defs: &HashMap<ValueId, &Operation>,
    ctrl_src: &HashMap<ValueId, ValueId>,
    phi: &Operation,
) -> Option<Counter> {
    let i = phi.result();
    let (init, reserve) = (phi.operands[0], phi.operands[1]);
    let start = trace_constant(defs, init)?;

    let next = defs.get(ctrl_src.get(&reserve)?)?;
    if next.opcode != Opcode::Add || next.operands.len() != 1 || !next.triggers().is_empty() {
        return None;
    }
    let step = next.attr_int("rhs_const").filter(|&s| s != 0)?;

    let cmp = f.ops().find(|o| {
        o.opcode == Opcode::Icmp
            && o.operands == [i]
            && o.attrs.contains_key("rhs_const")
            && o.cmp_kind().is_some()
    })?;
    let bound = cmp.attr_int("rhs_const")?;

    let x = next.operands[0];
    let gated = defs
        .get(&x)
        .is_some_and(|g| g.opcode == Opcode::GrantPredicate && g.operands == [i, cmp.result()]);
    if x != i && !gated {
        return None;
    }
    Some(Counter {
        phi: i,
        cmp: cmp.result(),
        trigger: init,
        start,
        step,
        bound,
        kind: cmp.attr_str("cmp")?.to_string(),
    })
}

fn trace_constant(defs: &HashMap<ValueId, &Operation>, mut v: ValueId) -> Option<i64> {
    loop {
        let d = defs.get(&v)?;
        match d.opcode {
            Opcode::GrantOnce if d.operands.len() == 1 => v = d.operands[0],
            Opcode::Constant if !d.attrs.contains_key("arg") => return d.attr_int("value"),
            _ => return None,
        }
    }
}
