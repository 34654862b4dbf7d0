use std::collections::HashMap;

use crate::ir::{slot_attr, Function, Input, Opcode, Operation, ValueId};

/// Position of the op defining each value: (block index, op index).
fn locate(f: &Function) -> HashMap<ValueId, (usize, usize)> {
    let mut m = HashMap::new();
    for (bi, b) in f.blocks.iter().enumerate() {
        for (oi, op) in b.ops.iter().enumerate() {
            for r in &op.results {
                m.insert(r.0, (bi, oi));
            }
        }
    }
    m
}

fn plain(op: &Operation) -> bool {
    op.immediate_count() == 0 && op.triggers().is_empty() && op.results.len() == 1
}

/// Replaces `load(add(base, idx...))` with `load_indexed(base, idx...)` when
/// every add in the address tree has the load as its only user. Nested adds
/// are flattened left to right.
pub fn fuse_load_indexed(f: &mut Function) {
    while let Some((bi, oi, leaves, dead)) = find_load(f) {
        let op = &mut f.blocks[bi].ops[oi];
        op.opcode = Opcode::LoadIndexed;
        op.operands = leaves;
        f.blocks[bi].ops.retain(|o| o.results.first().is_none_or(|r| !dead.contains(&r.0)));
    }
}

type LoadMatch = (usize, usize, Vec<ValueId>, Vec<ValueId>);

fn find_load(f: &Function) -> Option<LoadMatch> {
    let uses = f.use_counts();
    let at = locate(f);
    for (bi, b) in f.blocks.iter().enumerate() {
        for (oi, op) in b.ops.iter().enumerate().rev() {
            if op.opcode != Opcode::Load || !plain(op) || op.operands.len() != 1 {
                continue;
            }
            let mut leaves = Vec::new();
            let mut dead = Vec::new();
            expand_add(f, &at, &uses, bi, op.operands[0], &mut leaves, &mut dead);
            if !dead.is_empty() {
                return Some((bi, oi, leaves, dead));
            }
        }
    }
    None
}

fn expand_add(
    f: &Function,
    at: &HashMap<ValueId, (usize, usize)>,
    uses: &HashMap<ValueId, usize>,
    block: usize,
    v: ValueId,
    leaves: &mut Vec<ValueId>,
    dead: &mut Vec<ValueId>,
) {
    let fusable = match at.get(&v) {
        Some(&(bi, oi)) if bi == block => {
            let d = &f.blocks[bi].ops[oi];
            (d.opcode == Opcode::Add && plain(d) && uses.get(&v) == Some(&1)).then_some(d)
        }
        _ => None,
    };
    match fusable {
        Some(d) => {
            dead.push(v);
            for &o in &d.operands {
                expand_add(f, at, uses, block, o, leaves, dead);
            }
        }
        None => leaves.push(v),
    }
}

/// Replaces `add(mul(a, b), c)` (either operand order) with `muladd(a, b, c)`
/// when the mul has no other user. Ops are visited last to first so chains
/// of multiply-accumulates fuse from the outermost add inward.
pub fn fuse_muladd(f: &mut Function) {
    while let Some((bi, oi, mul_at, fused)) = find_muladd(f) {
        let op = &mut f.blocks[bi].ops[oi];
        op.opcode = Opcode::MulAdd;
        op.operands.clear();
        op.attrs.retain(|k, _| !k.ends_with("_const"));
        for (slot, input) in fused.into_iter().enumerate() {
            match input {
                Input::Value(v) => op.operands.push(v),
                Input::Imm(a) => {
                    op.attrs.insert(slot_attr(slot).to_string(), a);
                }
            }
        }
        f.blocks[bi].ops.remove(mul_at);
    }
}

fn find_muladd(f: &Function) -> Option<(usize, usize, usize, Vec<Input>)> {
    let uses = f.use_counts();
    let at = locate(f);
    for (bi, b) in f.blocks.iter().enumerate() {
        for (oi, op) in b.ops.iter().enumerate().rev() {
            if op.opcode != Opcode::Add || !op.triggers().is_empty() {
                continue;
            }
            let inputs = op.inputs();
            if inputs.len() != 2 {
                continue;
            }
            for k in 0..2 {
                let Input::Value(m) = inputs[k] else { continue };
                let Some(&(mb, mo)) = at.get(&m) else { continue };
                let mul = &f.blocks[mb].ops[mo];
                if mb != bi
                    || mul.opcode != Opcode::Mul
                    || !mul.triggers().is_empty()
                    || uses.get(&m) != Some(&1)
                    || mul.result_type() != op.result_type()
                {
                    continue;
                }
                let mut fused = mul.inputs();
                if fused.len() != 2 {
                    continue;
                }
                fused.push(inputs[1 - k].clone());
                if !fused.iter().any(|i| matches!(i, Input::Value(_))) {
                    continue;
                }
                return Some((bi, oi, mo, fused));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{interpret_dataflow, DataflowConfig, Memory, Payload};
    use crate::text::{parse_module, print_function};

    fn one(src: &str) -> Function {
        parse_module(src).unwrap().functions.remove(0)
    }

    #[test]
    fn load_of_single_use_add_fuses() {
        let mut f = one(
            "dataflow func @k(%b: !pred<i64>, %i: !pred<i64>) {\nbb0:\n  %a = neura.add %b, %i : !pred<i64>\n  %v = neura.load %a : !pred<i64>\n  neura.return %v\n}\n",
        );
        let before = f.materialized_op_count();
        fuse_load_indexed(&mut f);
        assert_eq!(f.count_opcode(Opcode::LoadIndexed), 1);
        assert!(f.materialized_op_count() < before);
        assert!(crate::ir::verify(&f).is_empty());
    }

    #[test]
    fn shared_address_blocks_load_fusion() {
        let src = "dataflow func @k(%b: !pred<i64>, %i: !pred<i64>) {\nbb0:\n  %a = neura.add %b, %i : !pred<i64>\n  %v = neura.load %a : !pred<i64>\n  neura.store %v, %a\n  neura.return %v\n}\n";
        let mut f = one(src);
        let before = print_function(&f);
        fuse_load_indexed(&mut f);
        assert_eq!(print_function(&f), before);
    }

    #[test]
    fn nested_address_flattens() {
        let mut f = one(
            "dataflow func @k(%b: !pred<i64>, %i: !pred<i64>, %j: !pred<i64>) {\nbb0:\n  %a = neura.add %b, %i : !pred<i64>\n  %c = neura.add %a, %j : !pred<i64>\n  %v = neura.load %c : !pred<i64>\n  neura.return %v\n}\n",
        );
        fuse_load_indexed(&mut f);
        let li = f.ops().find(|o| o.opcode == Opcode::LoadIndexed).unwrap();
        assert_eq!(li.operands.len(), 3);
        assert_eq!(f.count_opcode(Opcode::Add), 0);
    }

    #[test]
    fn mul_add_fuses_and_shared_mul_does_not() {
        let mut f = one(
            "dataflow func @k(%a: !pred<i64>, %b: !pred<i64>, %c: !pred<i64>) {\nbb0:\n  %m = neura.mul %a, %b : !pred<i64>\n  %s = neura.add %c, %m : !pred<i64>\n  neura.return %s\n}\n",
        );
        fuse_muladd(&mut f);
        assert_eq!(f.count_opcode(Opcode::MulAdd), 1);
        assert_eq!(f.count_opcode(Opcode::Mul), 0);

        let mut g = one(
            "dataflow func @k(%a: !pred<i64>, %b: !pred<i64>, %c: !pred<i64>) {\nbb0:\n  %m = neura.mul %a, %b : !pred<i64>\n  %s = neura.add %m, %c : !pred<i64>\n  %t = neura.add %s, %m : !pred<i64>\n  neura.return %t\n}\n",
        );
        fuse_muladd(&mut g);
        assert_eq!(g.count_opcode(Opcode::MulAdd), 0);
    }

    fn run(f: &Function, args: &[i64], mem: usize) -> Result<crate::interp::DataflowRun, crate::interp::InterpError> {
        let args: Vec<Payload> = args.iter().map(|&v| Payload::Int(v)).collect();
        interpret_dataflow(f, &args, Memory::new(mem), DataflowConfig::default())
    }

    #[test]
    fn muladd_keeps_immediates() {
        let mut f = one(
            "dataflow func @k(%a: !pred<i64>, %c: !pred<i64>) {\nbb0:\n  %m = neura.mul %a {rhs_const = 3 : i64} : !pred<i64>\n  %s = neura.add %m {rhs_const = 5 : i64} : !pred<i64>\n  neura.return %s\n}\n",
        );
        fuse_muladd(&mut f);
        assert_eq!(f.count_opcode(Opcode::MulAdd), 1);
        let out = run(&f, &[7, 0], 4).unwrap();
        assert_eq!(out.outcome.ret, Some(Payload::Int(26)));
    }

    #[test]
    fn muladd_predicate_is_conjunction() {
        let mut src = String::from("dataflow func @k(%a: !pred<i64>, %b: !pred<i64>, %c: !pred<i64>, %pa: !pred<i64>, %pb: !pred<i64>, %pc: !pred<i64>) {\nbb0:\n");
        for x in ["a", "b", "c"] {
            src += &format!("  %k{x} = neura.icmp %p{x} {{cmp = \"ne\", rhs_const = 0 : i64}} : !pred<i1>\n");
            src += &format!("  %g{x} = neura.grant_predicate %{x}, %k{x} : !pred<i64>\n");
        }
        src += "  %m = neura.mul %ga, %gb : !pred<i64>\n  %s = neura.add %m, %gc : !pred<i64>\n  neura.store %s {rhs_const = 0 : i64}\n  neura.return %a\n}\n";
        let mut f = one(&src);
        fuse_muladd(&mut f);
        assert_eq!(f.count_opcode(Opcode::MulAdd), 1);
        for bits in 0..8i64 {
            let p = |k: i64| (bits >> k) & 1;
            let out = run(&f, &[2, 3, 4, p(0), p(1), p(2)], 1).unwrap();
            let expect = if bits == 7 { 2 * 3 + 4 } else { 0 };
            assert_eq!(out.outcome.memory.cells[0], expect, "bits {bits:03b}");
        }
    }
}
