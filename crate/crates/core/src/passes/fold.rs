use std::collections::HashMap;

use crate::ir::{slot_attr, Arity, Attr, Form, Function, Input, Opcode, Operation, ValueId};

/// Embeds constant operands into consumer attributes (`lhs_const`,
/// `rhs_const`, ...) and erases constants left without users. Constants
/// created by argument promotion carry `arg` and are left alone.
///
/// In dataflow form a consumer always keeps at least one value operand so it
/// still has a token to fire on.
pub fn fold_constant(f: &mut Function) {
    let mut consts: HashMap<ValueId, Attr> = HashMap::new();
    for op in f.ops() {
        if op.opcode == Opcode::Constant && !op.attrs.contains_key("arg") {
            if let Some(v) = op.attrs.get("value") {
                consts.insert(op.result(), v.clone());
            }
        }
    }
    if consts.is_empty() {
        return;
    }
    let dataflow = f.form == Form::Dataflow;
    for b in &mut f.blocks {
        for op in &mut b.ops {
            fold_into(op, &consts, dataflow);
        }
    }
    super::dce::remove_unused_pure(f);
}

fn fold_into(op: &mut Operation, consts: &HashMap<ValueId, Attr>, dataflow: bool) {
    if !op.opcode.accepts_immediates() || !matches!(op.opcode.arity(), Arity::Fixed(_)) {
        return;
    }
    loop {
        let inputs = op.inputs();
        let value_slots: Vec<(usize, ValueId)> = inputs
            .iter()
            .enumerate()
            .filter_map(|(s, i)| match i {
                Input::Value(v) => Some((s, *v)),
                Input::Imm(_) => None,
            })
            .collect();
        if dataflow && value_slots.len() <= 1 {
            return;
        }
        let Some((pos, &(slot, v))) =
            value_slots.iter().enumerate().find(|(_, (_, v))| consts.contains_key(v))
        else {
            return;
        };
        op.operands.remove(pos);
        op.attrs.insert(slot_attr(slot).to_string(), consts[&v].clone());
    }
}
