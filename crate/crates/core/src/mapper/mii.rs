use crate::arch::ArchSpec;
use crate::interp::{DfGraph, Src};
use crate::ir::{Function, Input, Opcode};

use super::MapError;

/// A latency edge `from -> to` with iteration distance `dist`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LatEdge {
    pub from: usize,
    pub to: usize,
    pub lat: i64,
    pub dist: i64,
}

/// Whether some cycle has positive total weight `lat - ii * dist`.
fn positive_cycle(n: usize, edges: &[LatEdge], ii: i64) -> bool {
    let mut best = vec![0i64; n];
    for _ in 0..=n {
        let mut changed = false;
        for e in edges {
            let w = best[e.from] + e.lat - ii * e.dist;
            if w > best[e.to] {
                best[e.to] = w;
                changed = true;
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Longest-path potentials for a cycle-free weighting: the earliest start
/// times satisfying `t[to] >= t[from] + lat - ii * dist`, all at least 0.
pub(crate) fn earliest_times(n: usize, edges: &[LatEdge], ii: i64) -> Option<Vec<i64>> {
    let mut t = vec![0i64; n];
    for _ in 0..=n {
        let mut changed = false;
        for e in edges {
            let w = t[e.from] + e.lat - ii * e.dist;
            if w > t[e.to] {
                t[e.to] = w;
                changed = true;
            }
        }
        if !changed {
            return Some(t);
        }
    }
    None
}

/// Smallest `ii >= 1` for which every cycle satisfies `lat <= ii * dist`,
/// i.e. the maximum over cycles of `ceil(lat / dist)`.
pub(crate) fn min_feasible_ii(n: usize, edges: &[LatEdge]) -> usize {
    let mut hi: i64 = edges.iter().map(|e| e.lat.max(0)).sum::<i64>().max(1);
    let mut lo: i64 = 1;
    if !positive_cycle(n, edges, lo) {
        return 1;
    }
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if positive_cycle(n, edges, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi as usize
}

/// Dependence edges of the token graph; every op has latency 1 and
/// loop-carried edges have distance 1.
pub(crate) fn dependence_edges(g: &DfGraph) -> Vec<LatEdge> {
    g.edges()
        .into_iter()
        .map(|(from, to, back)| LatEdge { from, to, lat: 1, dist: back as i64 })
        .collect()
}

/// Ordering between memory ops that no token edge enforces. For every pair
/// involving a store, the textually earlier op goes first within an
/// iteration. Across iterations only ops whose addresses are loop-invariant
/// are ordered; addresses that vary with the iteration are assumed not to
/// reach a location touched by another iteration.
pub(crate) fn memory_order_edges(g: &DfGraph) -> Vec<LatEdge> {
    let mem: Vec<(usize, bool)> = (0..g.len())
        .filter_map(|n| match g.ops[n].opcode {
            Opcode::Store => Some((n, true)),
            Opcode::Load | Opcode::LoadIndexed => Some((n, false)),
            _ => None,
        })
        .collect();
    let lp = loop_of(g);
    let carried = |a: usize, b: usize| lp[a].is_some() && lp[a] == lp[b] && invariant_address(g, a) && invariant_address(g, b);
    let mut out = Vec::new();
    for (i, &(a, sa)) in mem.iter().enumerate() {
        for &(b, sb) in &mem[i + 1..] {
            if sa || sb {
                out.push(LatEdge { from: a, to: b, lat: 1, dist: 0 });
                if carried(a, b) {
                    out.push(LatEdge { from: b, to: a, lat: 1, dist: 1 });
                }
            }
        }
    }
    for &(s, is_store) in &mem {
        if is_store && carried(s, s) {
            out.push(LatEdge { from: s, to: s, lat: 1, dist: 1 });
        }
    }
    out
}

/// The loop each op repeats with, named by the smallest node of its cyclic
/// strongly connected components. Ops outside every cycle take the nearest
/// cycle upstream; ops with none fire once.
fn loop_of(g: &DfGraph) -> Vec<Option<usize>> {
    let n = g.len();
    let preds = |v: usize| {
        g.inputs[v].iter().filter_map(|&(s, _)| match s {
            Src::Op { node, .. } => Some(node),
            Src::Param(_) => None,
        })
    };
    // reach[v] = nodes that reach v
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|v| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = preds(v).collect();
            while let Some(u) = stack.pop() {
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend(preds(u));
                }
            }
            seen
        })
        .collect();
    let mut own: Vec<Option<usize>> =
        (0..n).map(|v| (reach[v][v]).then(|| (0..n).find(|&u| reach[v][u] && reach[u][v]).unwrap_or(v))).collect();
    // A value merely forwarded around a loop forms its own cycle; join it to
    // the cycle computing the predicate that gates it.
    loop {
        let mut merged = false;
        for v in 0..n {
            let (Some(a), Some(&(Src::Op { node: u, .. }, _))) = (own[v], g.inputs[v].get(1)) else { continue };
            if g.ops[v].opcode != Opcode::GrantPredicate {
                continue;
            }
            if let Some(b) = own[u].filter(|&b| b != a) {
                let (keep, gone) = (a.min(b), a.max(b));
                for o in own.iter_mut().filter(|o| **o == Some(gone)) {
                    *o = Some(keep);
                }
                merged = true;
            }
        }
        if !merged {
            break;
        }
    }
    (0..n)
        .map(|v| {
            let mut seen = vec![false; n];
            let mut queue = std::collections::VecDeque::from([v]);
            while let Some(u) = queue.pop_front() {
                if own[u].is_some() {
                    return own[u];
                }
                for p in preds(u) {
                    if !std::mem::replace(&mut seen[p], true) {
                        queue.push_back(p);
                    }
                }
            }
            None
        })
        .collect()
}

/// Whether every address input of memory op `n` is built from parameters
/// and constants only.
fn invariant_address(g: &DfGraph, n: usize) -> bool {
    let op = &g.ops[n];
    let skip = usize::from(op.opcode == Opcode::Store);
    let mut port = 0;
    let mut ok = true;
    for (slot, input) in op.inputs().into_iter().enumerate() {
        if let Input::Value(_) = input {
            if slot >= skip {
                ok &= invariant_port(g, n, port, &mut Vec::new());
            }
            port += 1;
        }
    }
    ok
}

fn invariant_port(g: &DfGraph, n: usize, port: usize, seen: &mut Vec<usize>) -> bool {
    let Some(&(src, _)) = g.inputs[n].get(port) else { return false };
    let node = match pass_root(g, src, &mut Vec::new()) {
        Root::One(Src::Param(_)) => return true,
        Root::One(Src::Op { node, .. }) => node,
        Root::Cycle | Root::Many => return false,
    };
    if seen.contains(&node) {
        return false;
    }
    seen.push(node);
    let op = &g.ops[node];
    let ok = match op.opcode {
        Opcode::Constant => true,
        Opcode::Phi | Opcode::LoopControl | Opcode::Load | Opcode::LoadIndexed | Opcode::Reserve | Opcode::CtrlMov => false,
        _ => {
            let values = op.inputs().iter().filter(|i| matches!(i, Input::Value(_))).count();
            (0..values).all(|p| invariant_port(g, node, p, seen))
        }
    };
    seen.pop();
    ok
}

enum Root {
    One(Src),
    /// Only reaches back to a node already being followed.
    Cycle,
    Many,
}

/// The single value a chain of phis and grants forwards unchanged, if any.
/// A loop phi whose back input re-grants its own output forwards its init.
fn pass_root(g: &DfGraph, src: Src, stack: &mut Vec<usize>) -> Root {
    let Src::Op { node, .. } = src else { return Root::One(src) };
    if stack.contains(&node) {
        return Root::Cycle;
    }
    let ports: Vec<usize> = match g.ops[node].opcode {
        Opcode::GrantOnce | Opcode::GrantPredicate => vec![0],
        Opcode::Phi => (0..g.inputs[node].len()).collect(),
        _ => return Root::One(src),
    };
    stack.push(node);
    let mut root = Root::Cycle;
    for p in ports {
        let r = match g.inputs[node].get(p) {
            Some(&(s, _)) => pass_root(g, s, stack),
            None => Root::Many,
        };
        root = match (root, r) {
            (Root::Cycle, r) | (r, Root::Cycle) => r,
            (Root::One(a), Root::One(b)) if a == b => Root::One(a),
            _ => Root::Many,
        };
    }
    stack.pop();
    root
}

pub fn res_mii(f: &Function, arch: &ArchSpec) -> usize {
    f.materialized_op_count().div_ceil(arch.tiles()).max(1)
}

pub fn rec_mii(g: &DfGraph) -> usize {
    min_feasible_ii(g.len(), &dependence_edges(g))
}

/// Recurrence bound counting memory-order edges as well. Every valid
/// mapping respects both edge sets, so no ii below this can succeed.
pub(crate) fn ordered_rec_mii(g: &DfGraph) -> usize {
    let mut edges = dependence_edges(g);
    edges.extend(memory_order_edges(g));
    min_feasible_ii(g.len(), &edges)
}

/// Resource- and recurrence-constrained lower bounds on the initiation
/// interval.
pub fn compute_min_ii(f: &Function, arch: &ArchSpec) -> Result<(usize, usize), MapError> {
    let g = DfGraph::new(f)?;
    Ok((res_mii(f, arch), rec_mii(&g)))
}
