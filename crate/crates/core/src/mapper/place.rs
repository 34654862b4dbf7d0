use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mii::{earliest_times, memory_order_edges, min_feasible_ii, ordered_rec_mii, rec_mii, res_mii, LatEdge};
use super::{Hop, MapError, MappingResult, Placement, Route};
use crate::arch::{ArchSpec, ExecutionModel};
use crate::interp::DfGraph;
use crate::ir::{Function, Opcode};

/// Placement attempts per candidate ii.
pub const DEFAULT_BUDGET: usize = 16;

#[derive(Clone, Copy, Debug)]
struct Edge {
    producer: usize,
    result: usize,
    consumer: usize,
    port: usize,
    back: bool,
}

/// Link reservation: (from tile, to tile, cycle mod ii) -> (producer, result, absolute departure).
type LinkKey = (usize, usize, usize);
type LinkUse = (usize, usize, i64);

struct Problem<'a> {
    arch: &'a ArchSpec,
    spatial: bool,
    order: Vec<usize>,
    edges_in: Vec<Vec<Edge>>,
    edges_out: Vec<Vec<Edge>>,
    /// Phi ops merge eagerly, so their inputs may not be held for a whole ii.
    phi: Vec<bool>,
    /// Timing-only constraints between memory ops, indexed by both ends.
    order_in: Vec<Vec<LatEdge>>,
    order_out: Vec<Vec<LatEdge>>,
    neighbors: Vec<Vec<usize>>,
}

struct State {
    ii: usize,
    place: Vec<Option<Placement>>,
    tiles: usize,
    /// Indexed by `tile * ii + slot`.
    occupied: Vec<bool>,
    /// Reservation and the number of routes sharing it, indexed by `link_index`.
    links: Vec<Option<(LinkUse, usize)>>,
    regs: Vec<usize>,
    /// Route plus the registers it holds on the consumer tile.
    routes: BTreeMap<(usize, usize, usize, usize), (Route, usize)>,
}

/// A tentative placement of one op and the resources it would claim.
struct Candidate {
    time: i64,
    tile: usize,
    hops: usize,
    links: Vec<(LinkKey, LinkUse)>,
    routes: Vec<(Route, usize)>,
}

/// Places and routes a dataflow function, searching upward from the minimum
/// ii. Deterministic for a given seed.
pub fn map_dfg(f: &Function, arch: &ArchSpec, seed: u64, budget: usize) -> Result<MappingResult, MapError> {
    let g = DfGraph::new(f)?;
    for op in &g.ops {
        if let Some(tag) = op.opcode.capability_tag() {
            if !arch.supports(tag) {
                return Err(MapError::Unsupported(tag.to_string()));
            }
        }
    }
    let nodes: Vec<usize> = (0..g.len()).filter(|&n| !g.is_structural(n)).collect();
    let spatial = arch.execution_model == ExecutionModel::SpatialOnly;
    if spatial && nodes.len() > arch.tiles() {
        return Err(MapError::ExceedsFabric { ops: nodes.len(), tiles: arch.tiles() });
    }
    let res = res_mii(f, arch);
    let rec = rec_mii(&g);
    let mut edges_in = vec![Vec::new(); g.len()];
    let mut edges_out = vec![Vec::new(); g.len()];
    for n in 0..g.len() {
        for (result, s) in g.sinks(n) {
            let e = Edge { producer: n, result, consumer: s.node, port: s.port, back: s.back };
            edges_in[s.node].push(e);
            edges_out[n].push(e);
        }
    }
    let phi = g.ops.iter().map(|o| o.opcode == Opcode::Phi).collect();
    let mut order_in = vec![Vec::new(); g.len()];
    let mut order_out = vec![Vec::new(); g.len()];
    for e in memory_order_edges(&g) {
        order_in[e.to].push(e);
        order_out[e.from].push(e);
    }
    let order = topo_order(&g, &nodes, &edges_out);
    let neighbors = (0..arch.tiles()).map(|t| arch.neighbors(t)).collect();
    let p = Problem { arch, spatial, order, edges_in, edges_out, phi, order_in, order_out, neighbors };
    let budget = budget.max(1);

    if spatial {
        let mut best: Option<MappingResult> = None;
        for attempt in 0..budget {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            if let Some(m) = attempt_spatial(&p, res, rec, attempt, &mut rng) {
                if best.as_ref().is_none_or(|b| m.ii < b.ii) {
                    best = Some(m);
                }
            }
        }
        return best.ok_or(MapError::Failed(rec.max(res)));
    }

    let lo = res.max(ordered_rec_mii(&g));
    let depth = arch.ctrl_mem_depth;
    for ii in lo..=depth {
        for attempt in 0..budget {
            let mix = seed ^ ((ii as u64) << 32) ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(mix);
            if let Some(state) = attempt_temporal(&p, ii, attempt, &mut rng) {
                return Ok(finish(&p, state, res, rec));
            }
        }
    }
    Err(MapError::Failed(depth))
}

/// Topological order of the forward edges, lowest node index first among
/// ready nodes.
fn topo_order(g: &DfGraph, nodes: &[usize], edges_out: &[Vec<Edge>]) -> Vec<usize> {
    let mut indeg = vec![0usize; g.len()];
    for es in edges_out {
        for e in es.iter().filter(|e| !e.back) {
            indeg[e.consumer] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = nodes.iter().filter(|&&n| indeg[n] == 0).map(|&n| Reverse(n)).collect();
    let mut out = Vec::with_capacity(nodes.len());
    while let Some(Reverse(n)) = heap.pop() {
        out.push(n);
        for e in edges_out[n].iter().filter(|e| !e.back) {
            indeg[e.consumer] -= 1;
            if indeg[e.consumer] == 0 {
                heap.push(Reverse(e.consumer));
            }
        }
    }
    out
}

fn tile_keys(tiles: usize, attempt: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keys: Vec<usize> = (0..tiles).collect();
    if attempt > 0 {
        keys.shuffle(rng);
    }
    keys
}

impl State {
    fn busy(&self, tile: usize, slot: usize) -> bool {
        self.occupied[tile * self.ii.max(1) + slot]
    }

    fn link_index(&self, (from, to, cycle): LinkKey) -> usize {
        (from * self.tiles + to) * self.ii.max(1) + cycle
    }
}

fn new_state(p: &Problem, ii: usize, nodes: usize) -> State {
    State {
        ii,
        place: vec![None; nodes],
        tiles: p.arch.tiles(),
        occupied: vec![false; p.arch.tiles() * ii.max(1)],
        links: vec![None; p.arch.tiles() * p.arch.tiles() * ii.max(1)],
        regs: vec![0; p.arch.tiles()],
        routes: BTreeMap::new(),
    }
}

/// ASAP and ALAP start times on the dependence graph at `ii`, ignoring
/// routing. Returns `None` when `ii` is below the recurrence bound.
fn slack_bounds(p: &Problem, ii: usize) -> Option<(Vec<i64>, Vec<i64>)> {
    let n = p.edges_in.len();
    let edges: Vec<LatEdge> = p
        .edges_out
        .iter()
        .flatten()
        .map(|e| LatEdge { from: e.producer, to: e.consumer, lat: 1, dist: e.back as i64 })
        .chain(p.order_out.iter().flatten().copied())
        .collect();
    let asap = earliest_times(n, &edges, ii as i64)?;
    let horizon = asap.iter().copied().max().unwrap_or(0);
    let reversed: Vec<LatEdge> = edges.iter().map(|e| LatEdge { from: e.to, to: e.from, ..*e }).collect();
    let back = earliest_times(n, &reversed, ii as i64)?;
    let alap = back.iter().map(|b| horizon - b).collect();
    Some((asap, alap))
}

/// Ratio bound of the recurrence each node sits on (0 for nodes on no
/// cycle). Nodes on the tightest recurrences are placed first.
fn recurrence_weight(p: &Problem) -> Vec<usize> {
    let n = p.edges_in.len();
    let reach = |from: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for e in &p.edges_out[u] {
                if !seen[e.consumer] {
                    seen[e.consumer] = true;
                    stack.push(e.consumer);
                }
            }
        }
        seen
    };
    let reaches: Vec<Vec<bool>> = (0..n).map(reach).collect();
    let mut weight = vec![0usize; n];
    let mut done = vec![false; n];
    for u in 0..n {
        if done[u] || !reaches[u][u] {
            continue;
        }
        let scc: Vec<usize> = (0..n).filter(|&v| reaches[u][v] && reaches[v][u]).collect();
        let local: HashMap<usize, usize> = scc.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges: Vec<LatEdge> = scc
            .iter()
            .flat_map(|&v| p.edges_out[v].iter())
            .filter_map(|e| {
                let to = *local.get(&e.consumer)?;
                Some(LatEdge { from: local[&e.producer], to, lat: 1, dist: e.back as i64 })
            })
            .collect();
        let w = min_feasible_ii(scc.len(), &edges);
        for v in scc {
            weight[v] = w;
            done[v] = true;
        }
    }
    weight
}

/// Next op to place: recurrences first (tightest first), and within a class
/// ops already connected to placed ops, then least slack, ASAP and index.
///
/// With `topological` set, only ops whose forward producers are all placed
/// are eligible and recurrences merely win ties.
fn pick(p: &Problem, st: &State, topological: bool, weight: &[usize], asap: &[i64], alap: &[i64]) -> Option<usize> {
    let connected = |c: usize| {
        p.edges_in[c].iter().any(|e| st.place[e.producer].is_some())
            || p.edges_out[c].iter().any(|e| st.place[e.consumer].is_some())
    };
    let ready = |c: usize| p.edges_in[c].iter().all(|e| e.back || e.producer == c || st.place[e.producer].is_some());
    p.order
        .iter()
        .copied()
        .filter(|&c| st.place[c].is_none() && (!topological || ready(c)))
        .min_by_key(|&c| {
            let slack = if weight[c] > 0 { 0 } else { alap[c] - asap[c] };
            if topological {
                (Reverse(0), false, slack, Reverse(weight[c]), asap[c], c)
            } else {
                (Reverse(weight[c]), !connected(c), slack, Reverse(0), asap[c], c)
            }
        })
}

/// Start-time window for `c` on `tile` implied by placed neighbours, assuming
/// shortest routes: (lower, upper), either possibly unbounded.
fn window(p: &Problem, st: &State, c: usize, tile: usize) -> (Option<i64>, Option<i64>) {
    let ii = st.ii as i64;
    let lat = p.arch.link_latency as i64;
    let mut lower: Option<i64> = None;
    let mut upper: Option<i64> = None;
    for e in &p.edges_in[c] {
        if e.producer == c {
            continue;
        }
        if let Some(pp) = st.place[e.producer] {
            let t = pp.time + 1 + p.arch.distance(pp.tile, tile) as i64 * lat - if e.back { ii } else { 0 };
            lower = Some(lower.map_or(t, |l| l.max(t)));
        }
    }
    for e in &p.edges_out[c] {
        if e.consumer == c {
            continue;
        }
        if let Some(cp) = st.place[e.consumer] {
            let t = cp.time + if e.back { ii } else { 0 } - 1 - p.arch.distance(tile, cp.tile) as i64 * lat;
            upper = Some(upper.map_or(t, |u| u.min(t)));
        }
    }
    let (lo, hi) = order_window(p, st, c);
    lower = match (lower, lo) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    upper = match (upper, hi) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    (lower, upper)
}

/// Bounds on `c`'s start time from memory ordering against placed ops.
fn order_window(p: &Problem, st: &State, c: usize) -> (Option<i64>, Option<i64>) {
    let ii = st.ii as i64;
    let lower = p.order_in[c].iter().filter_map(|e| Some(st.place[e.from]?.time + e.lat - ii * e.dist)).max();
    let upper = p.order_out[c].iter().filter_map(|e| Some(st.place[e.to]?.time - e.lat + ii * e.dist)).min();
    (lower, upper)
}

fn attempt_temporal(p: &Problem, ii: usize, attempt: usize, rng: &mut ChaCha8Rng) -> Option<State> {
    let n_nodes = p.edges_in.len();
    let (asap, alap) = slack_bounds(p, ii)?;
    let mut st = new_state(p, ii, n_nodes);
    let keys = tile_keys(p.arch.tiles(), attempt, rng);
    let span = ii as i64 + 2;
    let weight = recurrence_weight(p);
    let mut prev: Vec<Option<i64>> = vec![None; n_nodes];
    let mut steps = p.order.len() * 12;
    while let Some(c) = pick(p, &st, attempt.is_multiple_of(2), &weight, &asap, &alap) {
        steps = steps.checked_sub(1)?;
        // (distance from anchor, hops, tile key)
        let mut best: Option<(Candidate, (i64, usize, usize))> = None;
        for tile in 0..p.arch.tiles() {
            let (lower, upper) = window(p, &st, c, tile);
            // ASAP still bounds ops whose producers are not placed yet.
            let lower = lower.map(|l| l.max(asap[c]));
            let times: Vec<i64> = match (lower, upper) {
                (Some(l), Some(u)) => (l..=u.min(l + span)).collect(),
                (Some(l), None) => (l..l + span).collect(),
                (None, Some(u)) => (u - span..=u).rev().collect(),
                (None, None) => (asap[c]..asap[c] + span).collect(),
            };
            let anchor = lower.or(upper).unwrap_or(asap[c]);
            for t in times {
                let score = ((t - anchor).abs(), 0, keys[tile]);
                if best.as_ref().is_some_and(|(_, b)| score.0 > b.0) {
                    break;
                }
                if st.busy(tile, t.rem_euclid(ii as i64) as usize) {
                    continue;
                }
                if let Some(cand) = try_place(p, &st, c, tile, t) {
                    let score = (score.0, cand.hops, score.2);
                    if best.as_ref().is_none_or(|(_, b)| score < *b) {
                        best = Some((cand, score));
                    }
                    break;
                }
            }
        }
        let cand = match best {
            Some((cand, _)) => cand,
            None => force(p, &mut st, c, &asap, prev[c], &keys)?,
        };
        prev[c] = Some(cand.time);
        commit(&mut st, c, cand);
    }
    Some(st)
}

/// No free spot exists for `c`: take its earliest start on the best tile
/// anyway and evict whatever is in the way, as in iterative modulo
/// scheduling. Evicted ops are picked again later.
fn force(p: &Problem, st: &mut State, c: usize, asap: &[i64], prev: Option<i64>, keys: &[usize]) -> Option<Candidate> {
    let ii = st.ii as i64;
    let lat = p.arch.link_latency as i64;
    let (tile, t) = (0..p.arch.tiles())
        .map(|tile| {
            let mut t = window(p, st, c, tile).0.unwrap_or(asap[c]).max(asap[c]);
            if prev.is_some_and(|pt| pt >= t) {
                t = prev.unwrap() + 1;
            }
            let busy = st.busy(tile, t.rem_euclid(ii) as usize);
            ((t, busy, keys[tile]), tile)
        })
        .min()
        .map(|((t, _, _), tile)| (tile, t))?;
    let slot = t.rem_euclid(ii) as usize;
    let mut evict: Vec<usize> = (0..st.place.len())
        .filter(|&n| st.place[n].is_some_and(|pl| pl.tile == tile && pl.slot == slot))
        .collect();
    for e in &p.edges_out[c] {
        if let Some(cp) = st.place[e.consumer].filter(|_| e.consumer != c) {
            let arrival = t + 1 + p.arch.distance(tile, cp.tile) as i64 * lat;
            if arrival > cp.time + if e.back { ii } else { 0 } {
                evict.push(e.consumer);
            }
        }
    }
    for e in &p.edges_in[c] {
        if let Some(pp) = st.place[e.producer].filter(|_| e.producer != c) {
            let arrival = pp.time + 1 + p.arch.distance(pp.tile, tile) as i64 * lat;
            if arrival > t + if e.back { ii } else { 0 } {
                evict.push(e.producer);
            }
        }
    }
    for e in &p.order_in[c] {
        if st.place[e.from].is_some_and(|pl| pl.time + e.lat - ii * e.dist > t) {
            evict.push(e.from);
        }
    }
    for e in &p.order_out[c] {
        if st.place[e.to].is_some_and(|pl| t + e.lat - ii * e.dist > pl.time) {
            evict.push(e.to);
        }
    }
    for n in evict {
        unplace(st, n);
    }
    if let Some(cand) = try_place(p, st, c, tile, t) {
        return Some(cand);
    }
    let neighbours: Vec<usize> = p.edges_in[c]
        .iter()
        .map(|e| e.producer)
        .chain(p.edges_out[c].iter().map(|e| e.consumer))
        .chain(p.order_in[c].iter().map(|e| e.from))
        .chain(p.order_out[c].iter().map(|e| e.to))
        .filter(|&n| n != c)
        .collect();
    for n in neighbours {
        unplace(st, n);
    }
    try_place(p, st, c, tile, t)
}

fn attempt_spatial(p: &Problem, res: usize, rec: usize, attempt: usize, rng: &mut ChaCha8Rng) -> Option<MappingResult> {
    let n_nodes = p.edges_in.len();
    let mut st = new_state(p, 1, n_nodes);
    let keys = tile_keys(p.arch.tiles(), attempt, rng);
    for &c in &p.order {
        let mut best: Option<(Candidate, usize)> = None;
        for tile in 0..p.arch.tiles() {
            if st.busy(tile, 0) {
                continue;
            }
            if let Some(cand) = try_place(p, &st, c, tile, 0) {
                let better = match &best {
                    None => true,
                    Some((b, bk)) => (cand.time, cand.hops, keys[tile]) < (b.time, b.hops, *bk),
                };
                if better {
                    best = Some((cand, keys[tile]));
                }
            }
        }
        let (cand, _) = best?;
        commit(&mut st, c, cand);
    }
    // Retime against the routed latencies: the worst routed recurrence bounds
    // ii, and each phi input must arrive less than one ii before it is used.
    let lat = p.arch.link_latency as i64;
    let mut routed: Vec<LatEdge> = Vec::new();
    for (r, _) in st.routes.values() {
        let l = 1 + r.hops.len() as i64 * lat;
        routed.push(LatEdge { from: r.producer, to: r.consumer, lat: l, dist: r.back as i64 });
        if p.phi[r.consumer] && r.producer != r.consumer {
            routed.push(LatEdge { from: r.consumer, to: r.producer, lat: 1 - l, dist: 1 - r.back as i64 });
        }
    }
    routed.extend(p.order_out.iter().flatten().copied());
    let lo = res.max(rec);
    let hi = lo + routed.iter().map(|e| e.lat.max(0) as usize).sum::<usize>();
    let (ii, times) = (lo..=hi).find_map(|ii| Some((ii, earliest_times(n_nodes, &routed, ii as i64)?)))?;
    st.ii = ii;
    for (n, pl) in st.place.iter_mut().enumerate() {
        if let Some(pl) = pl {
            pl.time = times[n];
        }
    }
    let mut regs = vec![0usize; p.arch.tiles()];
    for (r, _) in st.routes.values_mut() {
        let pt = times[r.producer];
        for (j, h) in r.hops.iter_mut().enumerate() {
            h.cycle = ((pt + 1 + j as i64 * lat).rem_euclid(ii as i64)) as usize;
        }
        let arrival = pt + 1 + r.hops.len() as i64 * lat;
        let wait = times[r.consumer] + if r.back { ii as i64 } else { 0 } - arrival;
        let tile = st.place[r.consumer].unwrap().tile;
        regs[tile] += (wait / ii as i64) as usize;
    }
    if regs.iter().any(|&k| k > p.arch.regs_per_tile) {
        return None;
    }
    Some(finish(p, st, res, rec))
}

/// Checks whether op `c` fits at (`tile`, `t`) given everything placed so
/// far, routing every edge to or from an already placed op. In spatial mode
/// `t` is ignored and the op starts when its last input arrives.
fn try_place(p: &Problem, st: &State, c: usize, tile: usize, t: i64) -> Option<Candidate> {
    let ii = st.ii as i64;
    let lat = p.arch.link_latency as i64;
    let mut cand = Candidate { time: t, tile, hops: 0, links: Vec::new(), routes: Vec::new() };
    if !p.spatial {
        let (lo, hi) = order_window(p, st, c);
        if lo.is_some_and(|l| t < l) || hi.is_some_and(|h| t > h) {
            return None;
        }
    }

    let mut incoming: Vec<(Edge, Placement)> =
        p.edges_in[c].iter().filter_map(|e| st.place[e.producer].map(|pp| (*e, pp))).collect();
    // Forward inputs first: in spatial mode they fix the start time.
    incoming.sort_by_key(|(e, _)| e.back);
    let mut start = if p.spatial { 0 } else { t };
    for (e, pp) in incoming {
        let deadline = if p.spatial { None } else { Some(t + if e.back { ii } else { 0 }) };
        let hops = route(p, st, &cand.links, &e, pp.tile, pp.time, tile, deadline)?;
        let arrival = pp.time + 1 + hops.len() as i64 * lat;
        if p.spatial && !e.back {
            start = start.max(arrival);
        }
        if p.phi[c] && deadline.is_some_and(|d| d - arrival >= ii) {
            return None;
        }
        let regs = deadline.map_or(0, |d| ((d - arrival) / ii) as usize);
        claim(&mut cand, &e, pp.time, &hops, ii, lat, regs);
    }
    cand.time = start;
    for e in &p.edges_out[c] {
        let Some(cp) = st.place[e.consumer] else { continue };
        if e.consumer == c {
            continue;
        }
        let deadline = if p.spatial { None } else { Some(cp.time + if e.back { ii } else { 0 }) };
        let hops = route(p, st, &cand.links, e, tile, cand.time, cp.tile, deadline)?;
        let arrival = cand.time + 1 + hops.len() as i64 * lat;
        if p.phi[e.consumer] && deadline.is_some_and(|d| d - arrival >= ii) {
            return None;
        }
        let regs = deadline.map_or(0, |d| ((d - arrival) / ii) as usize);
        let t0 = cand.time;
        claim(&mut cand, e, t0, &hops, ii, lat, regs);
    }
    // A self loop (op feeding itself around the back edge).
    for e in p.edges_in[c].iter().filter(|e| e.producer == c) {
        let arrival = cand.time + 1;
        if !p.spatial && arrival > cand.time + ii {
            return None;
        }
        let t0 = cand.time;
        claim(&mut cand, e, t0, &[], ii, lat, 0);
    }
    if !p.spatial {
        let mut need: HashMap<usize, usize> = HashMap::new();
        for (r, k) in &cand.routes {
            let at = if r.consumer == c { tile } else { st.place[r.consumer]?.tile };
            *need.entry(at).or_default() += k;
        }
        if need.iter().any(|(&tl, &k)| st.regs[tl] + k > p.arch.regs_per_tile) {
            return None;
        }
    }
    Some(cand)
}

fn claim(cand: &mut Candidate, e: &Edge, t_prod: i64, hops: &[(usize, usize)], ii: i64, lat: i64, regs: usize) {
    let mut out = Vec::with_capacity(hops.len());
    for (j, &(from, to)) in hops.iter().enumerate() {
        let dep = t_prod + 1 + j as i64 * lat;
        let cycle = dep.rem_euclid(ii) as usize;
        cand.links.push(((from, to, cycle), (e.producer, e.result, dep)));
        out.push(Hop { from, to, cycle });
    }
    cand.hops += hops.len();
    let r = Route { producer: e.producer, result: e.result, consumer: e.consumer, port: e.port, back: e.back, hops: out };
    cand.routes.push((r, regs));
}

fn link_free(p: &Problem, st: &State, pending: &[(LinkKey, LinkUse)], key: LinkKey, want: LinkUse) -> bool {
    let ok = |u: &LinkUse| {
        if p.spatial {
            (u.0, u.1) == (want.0, want.1)
        } else {
            *u == want
        }
    };
    // Spatial links are dedicated wires: one value per link at any cycle.
    let key = if p.spatial { (key.0, key.1, 0) } else { key };
    st.links[st.link_index(key)].as_ref().is_none_or(|(u, _)| ok(u)) && pending.iter().filter(|(k, _)| *k == key).all(|(_, u)| ok(u))
}

/// Shortest conflict-free path from `src` to `dst` whose arrival does not
/// exceed `deadline`. Hops are (from, to) tile pairs.
#[allow(clippy::too_many_arguments)]
fn route(
    p: &Problem,
    st: &State,
    pending: &[(LinkKey, LinkUse)],
    e: &Edge,
    src: usize,
    t_prod: i64,
    dst: usize,
    deadline: Option<i64>,
) -> Option<Vec<(usize, usize)>> {
    let lat = p.arch.link_latency as i64;
    let ii = st.ii as i64;
    let max_hops = match deadline {
        Some(d) => {
            let slack = d - t_prod - 1;
            if slack < 0 {
                return None;
            }
            (slack / lat) as usize
        }
        None => p.arch.tiles(),
    };
    if src == dst {
        return Some(Vec::new());
    }
    // Parent tile of (tile, hop count), indexed by `hops * tiles + tile`.
    let tiles = p.arch.tiles();
    let mut parent = vec![usize::MAX; tiles * (max_hops + 1)];
    let mut queue = VecDeque::from([(src, 0usize)]);
    while let Some((tile, j)) = queue.pop_front() {
        if j >= max_hops {
            continue;
        }
        let dep = t_prod + 1 + j as i64 * lat;
        for &nb in &p.neighbors[tile] {
            if j + 1 + p.arch.distance(nb, dst) > max_hops || parent[(j + 1) * tiles + nb] != usize::MAX {
                continue;
            }
            let key = (tile, nb, dep.rem_euclid(ii.max(1)) as usize);
            if !link_free(p, st, pending, key, (e.producer, e.result, dep)) {
                continue;
            }
            parent[(j + 1) * tiles + nb] = tile;
            if nb == dst {
                let mut path = Vec::with_capacity(j + 1);
                let (mut cur, mut k) = (nb, j + 1);
                while k > 0 {
                    let prev = parent[k * tiles + cur];
                    path.push((prev, cur));
                    cur = prev;
                    k -= 1;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back((nb, j + 1));
        }
    }
    None
}

fn commit(st: &mut State, c: usize, cand: Candidate) {
    let slot = if st.ii > 0 { (cand.time.rem_euclid(st.ii as i64)) as usize } else { 0 };
    let i = cand.tile * st.ii.max(1) + slot;
    st.occupied[i] = true;
    st.place[c] = Some(Placement { tile: cand.tile, slot, time: cand.time });
    for (r, k) in cand.routes {
        let tile = st.place[r.consumer].map_or(cand.tile, |pl| pl.tile);
        st.regs[tile] += k;
        st.routes.insert((r.producer, r.result, r.consumer, r.port), (r, k));
    }
    for (key, u) in cand.links {
        let i = st.link_index(key);
        st.links[i].get_or_insert((u, 0)).1 += 1;
    }
}

/// Removes `c` and every route touching it.
fn unplace(st: &mut State, c: usize) {
    let Some(pl) = st.place[c].take() else { return };
    let i = pl.tile * st.ii.max(1) + pl.slot;
    st.occupied[i] = false;
    let gone: Vec<_> = st.routes.keys().copied().filter(|k| k.0 == c || k.2 == c).collect();
    for key in gone {
        let (r, k) = st.routes.remove(&key).unwrap();
        let tile = if r.consumer == c { pl.tile } else { st.place[r.consumer].unwrap().tile };
        st.regs[tile] -= k;
        for h in &r.hops {
            let i = st.link_index((h.from, h.to, h.cycle));
            if let Some(entry) = st.links[i].as_mut() {
                entry.1 -= 1;
                if entry.1 == 0 {
                    st.links[i] = None;
                }
            }
        }
    }
}

fn finish(p: &Problem, st: State, res: usize, rec: usize) -> MappingResult {
    let spatial = p.spatial;
    let placements: BTreeMap<usize, Placement> = st
        .place
        .iter()
        .enumerate()
        .filter_map(|(n, pl)| pl.map(|pl| (n, Placement { slot: if spatial { 0 } else { pl.slot }, ..pl })))
        .collect();
    let first = placements.values().map(|pl| pl.time).min().unwrap_or(0);
    // Shift by whole iis so no start time is negative; slots and link cycles
    // are unchanged.
    let ii = st.ii as i64;
    let shift = if first < 0 { (-first + ii - 1) / ii * ii } else { 0 };
    let placements: BTreeMap<usize, Placement> =
        placements.into_iter().map(|(n, pl)| (n, Placement { time: pl.time + shift, ..pl })).collect();
    let first = first + shift;
    let last = placements.values().map(|pl| pl.time).max().unwrap_or(0);
    MappingResult {
        ii: st.ii,
        res_mii: res,
        rec_mii: rec,
        model: p.arch.execution_model,
        rows: p.arch.rows,
        cols: p.arch.cols,
        placements,
        routes: st.routes.into_values().map(|(r, _)| r).collect(),
        schedule_length: (last - first + 1) as usize,
    }
}
