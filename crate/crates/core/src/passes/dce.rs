use std::collections::HashSet;

use crate::ir::{Function, Opcode};

fn removable(opcode: Opcode) -> bool {
    !opcode.has_side_effects() && !opcode.is_terminator()
}

/// Removes ops whose results are never used and that have no side effects,
/// repeating until nothing changes. Reserves whose only user is their
/// `ctrl_mov` are removed together with it. Returns the number of ops removed.
pub fn remove_unused_pure(f: &mut Function) -> usize {
    let mut removed = 0;
    loop {
        let uses = f.use_counts();
        let defs = f.defining_ops();
        let mut dead: HashSet<crate::ir::OpId> = HashSet::new();
        for op in f.ops() {
            if removable(op.opcode)
                && op.opcode != Opcode::Reserve
                && op.results.iter().all(|r| uses.get(&r.0).copied().unwrap_or(0) == 0)
            {
                dead.insert(op.id);
            }
            // A ctrl_mov is dead when the reserve it feeds is read by nothing else.
            if op.opcode == Opcode::CtrlMov && op.operands.len() == 2 {
                let r = op.operands[1];
                if uses.get(&r).copied().unwrap_or(0) == 1 {
                    if let Some(d) = defs.get(&r) {
                        dead.insert(op.id);
                        dead.insert(d.id);
                    }
                }
            }
        }
        if dead.is_empty() {
            return removed;
        }
        removed += dead.len();
        for b in &mut f.blocks {
            b.ops.retain(|o| !dead.contains(&o.id));
        }
    }
}

/// Trivial dead code elimination: unused pure ops and blocks unreachable from
/// the entry.
pub fn dce(f: &mut Function) -> usize {
    let mut removed = 0;
    if f.blocks.len() > 1 {
        let cfg = crate::ir::cfg::Cfg::new(f);
        let keep: Vec<bool> = (0..f.blocks.len()).map(|i| cfg.reachable(i)).collect();
        let mut i = 0;
        f.blocks.retain(|b| {
            let k = keep[i];
            if !k {
                removed += b.ops.len();
            }
            i += 1;
            k
        });
    }
    removed + remove_unused_pure(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_module;

    #[test]
    fn removes_dead_chain_and_unreachable_block() {
        let mut f = parse_module(
            "func @f(%x: i64) {
bb0:
  %a = neura.add %x, %x : i64
  %b = neura.mul %a, %a : i64
  neura.return %x
bb1:
  %c = neura.add %x, %x : i64
  neura.return %c
}
",
        )
        .unwrap()
        .functions
        .remove(0);
        assert_eq!(dce(&mut f), 4);
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.op_count(), 1);
    }
}
