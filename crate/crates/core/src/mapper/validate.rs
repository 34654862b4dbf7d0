use std::collections::{BTreeMap, HashMap};

use super::mii::{memory_order_edges, rec_mii, res_mii};
use super::MappingResult;
use crate::arch::{ArchSpec, ExecutionModel};
use crate::interp::DfGraph;
use crate::ir::{Function, Opcode};

/// Checks a mapping against the function and fabric from scratch. Returns one
/// message per violation; each message starts with a short tag such as
/// `slot conflict` or `broken route`. A phi input may not wait a whole ii,
/// since the phi would then see tokens from two iterations.
pub fn validate_mapping(f: &Function, arch: &ArchSpec, m: &MappingResult) -> Vec<String> {
    let mut out = Vec::new();
    let g = match DfGraph::new(f) {
        Ok(g) => g,
        Err(e) => return vec![format!("bad function: {}", e)],
    };
    let spatial = arch.execution_model == ExecutionModel::SpatialOnly;
    if m.ii == 0 {
        return vec!["ii below bound: ii is 0".into()];
    }
    if m.rows != arch.rows || m.cols != arch.cols || m.model != arch.execution_model {
        out.push("fabric mismatch: mapping was made for a different fabric".into());
    }
    let bound = res_mii(f, arch).max(rec_mii(&g));
    if m.ii < bound {
        out.push(format!("ii below bound: ii {} < {}", m.ii, bound));
    }
    if !spatial && m.ii > arch.ctrl_mem_depth {
        out.push(format!("ii exceeds ctrl_mem_depth: {} > {}", m.ii, arch.ctrl_mem_depth));
    }
    for op in &g.ops {
        if let Some(tag) = op.opcode.capability_tag() {
            if !arch.supports(tag) {
                out.push(format!("unsupported op: {} on this fabric", op.opcode));
            }
        }
    }

    let ii = m.ii as i64;
    let lat = arch.link_latency as i64;
    for n in 0..g.len() {
        let placed = m.placements.get(&n);
        match (g.is_structural(n), placed) {
            (false, None) => out.push(format!("unplaced op: %{}", n)),
            (true, Some(_)) => out.push(format!("structural op placed: %{}", n)),
            _ => {}
        }
    }
    let mut slots: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&n, p) in &m.placements {
        if p.tile >= arch.tiles() {
            out.push(format!("bad tile: %{} on tile {}", n, p.tile));
            continue;
        }
        let expected_slot = if spatial { 0 } else { p.time.rem_euclid(ii) as usize };
        if p.slot != expected_slot || (!spatial && p.slot >= m.ii) {
            out.push(format!("bad slot: %{} slot {} at time {}", n, p.slot, p.time));
        }
        if let Some(other) = slots.insert((p.tile, p.slot), n) {
            out.push(format!("slot conflict: %{} and %{} share tile {} slot {}", other, n, p.tile, p.slot));
        }
    }

    let mut routes: HashMap<(usize, usize, usize, usize), &super::Route> = HashMap::new();
    for r in &m.routes {
        routes.insert((r.producer, r.result, r.consumer, r.port), r);
    }
    let mut links: HashMap<(usize, usize, usize), (usize, usize, i64)> = HashMap::new();
    let mut regs = vec![0i64; arch.tiles()];
    for n in 0..g.len() {
        for (result, s) in g.sinks(n) {
            let key = (n, result, s.node, s.port);
            let (Some(pp), Some(cp)) = (m.placements.get(&n), m.placements.get(&s.node)) else { continue };
            let Some(r) = routes.get(&key) else {
                out.push(format!("broken route: no route for %{}.{} -> %{}.{}", n, result, s.node, s.port));
                continue;
            };
            if r.back != s.back {
                out.push(format!("broken route: %{} -> %{} has the wrong loop-carried flag", n, s.node));
            }
            let mut at = pp.tile;
            let mut broken = false;
            for (j, h) in r.hops.iter().enumerate() {
                if h.from != at || !arch.adjacent(h.from, h.to) {
                    out.push(format!("broken route: %{} -> %{} hop {} from tile {} to tile {}", n, s.node, j, h.from, h.to));
                    broken = true;
                    break;
                }
                let dep = pp.time + 1 + j as i64 * lat;
                if h.cycle as i64 != dep.rem_euclid(ii) {
                    out.push(format!("route timing: %{} -> %{} hop {} departs at cycle {}", n, s.node, j, h.cycle));
                }
                let link = if spatial { (h.from, h.to, 0) } else { (h.from, h.to, h.cycle) };
                let user = (n, result, dep);
                match links.get(&link) {
                    Some(u) if (spatial && (u.0, u.1) != (n, result)) || (!spatial && *u != user) => {
                        out.push(format!("link conflict: tile {} -> tile {} at cycle {}", h.from, h.to, h.cycle))
                    }
                    Some(_) => {}
                    None => {
                        links.insert(link, user);
                    }
                }
                at = h.to;
            }
            if broken {
                continue;
            }
            if at != cp.tile {
                out.push(format!("broken route: %{} -> %{} ends at tile {} not {}", n, s.node, at, cp.tile));
                continue;
            }
            let arrival = pp.time + 1 + r.hops.len() as i64 * lat;
            let deadline = cp.time + if s.back { ii } else { 0 };
            if arrival > deadline {
                out.push(format!("timing violation: %{} -> %{} arrives at {} after {}", n, s.node, arrival, deadline));
            } else {
                regs[cp.tile] += (deadline - arrival) / ii;
                if g.ops[s.node].opcode == Opcode::Phi && s.node != n && deadline - arrival >= ii {
                    out.push(format!("phi window: %{} -> %{} waits {} cycles at ii {}", n, s.node, deadline - arrival, ii));
                }
            }
        }
    }
    for e in memory_order_edges(&g) {
        let (Some(a), Some(b)) = (m.placements.get(&e.from), m.placements.get(&e.to)) else { continue };
        if b.time < a.time + e.lat - ii * e.dist {
            out.push(format!("memory order: %{} must start after %{}", e.to, e.from));
        }
    }
    for (t, &k) in regs.iter().enumerate() {
        if k > arch.regs_per_tile as i64 {
            out.push(format!("register overflow: tile {} needs {} of {}", t, k, arch.regs_per_tile));
        }
    }
    out
}
