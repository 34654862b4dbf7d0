use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::PassError;
use crate::ir::cfg::Cfg;
use crate::ir::{BlockId, Function, ValueId};

/// Live-in set of every block. The entry block's set is always empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LiveInTable {
    pub sets: BTreeMap<BlockId, BTreeSet<ValueId>>,
}

impl LiveInTable {
    pub fn get(&self, b: BlockId) -> &BTreeSet<ValueId> {
        static EMPTY: BTreeSet<ValueId> = BTreeSet::new();
        self.sets.get(&b).unwrap_or(&EMPTY)
    }
}

fn defined_in(f: &Function, bi: usize) -> HashSet<ValueId> {
    let b = &f.blocks[bi];
    b.args
        .iter()
        .map(|a| a.0)
        .chain(b.ops.iter().flat_map(|o| o.results.iter().map(|r| r.0)))
        .collect()
}

/// Values used in the block (successor arguments included) but not defined there.
fn direct_live_ins(f: &Function, bi: usize, defined: &HashSet<ValueId>) -> BTreeSet<ValueId> {
    f.blocks[bi]
        .ops
        .iter()
        .flat_map(|o| o.all_uses())
        .filter(|v| !defined.contains(v))
        .collect()
}

/// Fixed-point live-in analysis:
/// `L[B] = DirectLiveIns(B) ∪ ⋃_{S ∈ succ(B)} (L[S] \ DefinedIn(B))`, entry excluded.
pub fn compute_live_ins(f: &Function) -> LiveInTable {
    let n = f.blocks.len();
    let defined: Vec<HashSet<ValueId>> = (0..n).map(|i| defined_in(f, i)).collect();
    let direct: Vec<BTreeSet<ValueId>> = (0..n).map(|i| direct_live_ins(f, i, &defined[i])).collect();
    let succs: Vec<Vec<usize>> = (0..n).map(|i| f.successor_indices(i)).collect();
    let mut live: Vec<BTreeSet<ValueId>> = vec![BTreeSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in (1..n).rev() {
            let mut set = direct[b].clone();
            for &s in &succs[b] {
                set.extend(live[s].iter().filter(|v| !defined[b].contains(v)));
            }
            if set != live[b] {
                live[b] = set;
                changed = true;
            }
        }
    }
    LiveInTable { sets: f.blocks.iter().zip(live).map(|(b, s)| (b.id, s)).collect() }
}

/// Result of [`canonicalize_live_in_traced`]: the live-in table of the input and
/// the block argument that now carries each live-in value inside its block.
#[derive(Clone, Debug, Default)]
pub struct LiveInRewrite {
    pub table: LiveInTable,
    pub args: HashMap<(BlockId, ValueId), ValueId>,
}

/// Makes every live-in explicit: each non-entry block gains one argument per
/// live-in value (ascending by value id), uses inside the block are redirected
/// to it, and every predecessor passes the value along the edge.
pub fn canonicalize_live_in(f: &mut Function) -> Result<(), PassError> {
    canonicalize_live_in_traced(f).map(|_| ())
}

pub fn canonicalize_live_in_traced(f: &mut Function) -> Result<LiveInRewrite, PassError> {
    super::dce::remove_unused_pure(f);
    let cfg = Cfg::new(f);
    if let Some(bi) = (0..f.blocks.len()).find(|&i| !cfg.reachable(i)) {
        return Err(PassError::DeadCode(format!("block bb{} is unreachable", bi)));
    }
    let table = compute_live_ins(f);
    let types = f.value_types();
    let mut args = HashMap::new();

    // Phase 2a: new block arguments, uses inside each block redirected.
    for bi in 1..f.blocks.len() {
        let id = f.blocks[bi].id;
        for &v in table.get(id) {
            let ty = types[&v];
            let a = f.add_block_arg(id, ty);
            args.insert((id, v), a);
            f.replace_all_uses(v, a, Some(id)).expect("same type");
        }
    }
    // Phase 2b: every edge passes the successor's complete live-in set.
    for bi in 0..f.blocks.len() {
        let pid = f.blocks[bi].id;
        let Some(term) = f.blocks[bi].terminator() else { continue };
        let mut new_succs = term.successors.clone();
        for s in &mut new_succs {
            for &v in table.get(s.block) {
                s.args.push(*args.get(&(pid, v)).unwrap_or(&v));
            }
        }
        f.blocks[bi].terminator_mut().unwrap().successors = new_succs;
    }
    Ok(LiveInRewrite { table, args })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::verify;
    use crate::passes::classify_cfg_edges;
    use crate::text::{parse_module, print_function};

    fn parse(src: &str) -> Function {
        parse_module(src).unwrap().functions.remove(0)
    }

    const PASS_THROUGH: &str = "func @f(%x: i64) {
bb0:
  %v = neura.add %x, %x : i64
  neura.br bb1
bb1:
  neura.br bb2
bb2:
  neura.return %v
}
";

    #[test]
    fn value_is_live_through_intermediate_block() {
        let f = parse(PASS_THROUGH);
        let t = compute_live_ins(&f);
        let v = f.blocks[0].ops[0].result();
        assert!(t.get(f.blocks[1].id).contains(&v));
        assert!(t.get(f.blocks[2].id).contains(&v));
        assert!(t.get(f.blocks[0].id).is_empty());
    }

    #[test]
    fn single_block_has_no_live_ins() {
        let f = parse("func @f(%x: i64) {\nbb0:\n  neura.return %x\n}\n");
        assert!(compute_live_ins(&f).sets.values().all(|s| s.is_empty()));
    }

    #[test]
    fn canonicalization_makes_every_edge_carry_values() {
        let mut f = parse(PASS_THROUGH);
        canonicalize_live_in(&mut f).unwrap();
        assert!(verify(&f).is_empty(), "{:?}", verify(&f));
        let edges = classify_cfg_edges(&f).unwrap();
        assert!(edges.iter().all(|e| e.2.category() >= 5));
        assert!(compute_live_ins(&f).sets.values().all(|s| s.is_empty()));
    }

    #[test]
    fn idempotent() {
        let mut f = parse(PASS_THROUGH);
        canonicalize_live_in(&mut f).unwrap();
        let once = print_function(&f);
        canonicalize_live_in(&mut f).unwrap();
        assert_eq!(print_function(&f), once);
    }

    #[test]
    fn diamond_passes_value_on_both_branches() {
        let mut f = parse(
            "func @f(%c: i1, %x: i64) {
bb0:
  %v = neura.mul %x, %x : i64
  neura.cond_br %c, bb1, bb2
bb1:
  neura.br bb3
bb2:
  neura.br bb3
bb3:
  neura.return %v
}
",
        );
        let v = f.blocks[0].ops[0].result();
        canonicalize_live_in(&mut f).unwrap();
        let cond_br = f.blocks[0].terminator().unwrap();
        assert!(cond_br.successors.iter().all(|s| s.args == vec![v]));
        assert_eq!(f.blocks[3].args.len(), 1);
    }

    #[test]
    fn unreachable_block_is_dead_code() {
        let mut f = parse(
            "func @f(%x: i64) {
bb0:
  neura.return %x
bb1:
  neura.return %x
}
",
        );
        assert!(matches!(canonicalize_live_in(&mut f), Err(PassError::DeadCode(_))));
    }
}
