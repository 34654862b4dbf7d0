//! Cycle-level execution of a mapped dataflow function.
//!
//! Every placed op repeats its schedule: it may fire at cycles
//! `time + k * ii` for `k >= 0`, provided its firing rule holds and every
//! consumer queue has room for the result (tokens still on the wire count).
//! A token produced at cycle `t` and routed over `h` links becomes visible at
//! `t + 1 + h * link_latency`. Parameters are available at cycle 0.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use num_rational::Ratio;

use crate::arch::ArchSpec;
use crate::interp::{normalize_args, DfGraph, InterpError, Machine, Memory, Outcome, Payload, PredValue, Sink};
use crate::ir::{Function, Opcode};
use crate::mapper::{validate_mapping, MappingResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid mapping: {}", .0.join("; "))]
    InvalidMapping(Vec<String>),
    #[error("structural hazard at cycle {cycle}: {what}")]
    Hazard { cycle: u64, what: String },
    #[error("fuel exhausted after {0} cycles")]
    FuelExhausted(u64),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    /// Maximum number of simulated cycles.
    pub fuel: u64,
    /// Constant host/offload overhead added to `total_cycles`.
    pub prologue: u64,
    /// Capacity of every input port queue.
    pub queue_depth: usize,
    /// Loads and stores that may issue in one cycle; `None` is unlimited.
    pub mem_ports: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { fuel: 1_000_000, prologue: 0, queue_depth: 16, mem_ports: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    pub total_cycles: u64,
    pub tile_executions: u64,
    /// `tile_executions / total_cycles`, kept exact.
    pub ipc: Ratio<u64>,
    /// Most common distance between consecutive firings of the busiest loop
    /// counter (loop_control or loop-header phi). `None` when the function
    /// has no loop or the counter fired fewer than three times.
    pub achieved_ii: Option<u64>,
    pub mapping_ii: usize,
    /// Fraction of `total_cycles` in which each tile fired.
    pub per_tile_utilization: Vec<f64>,
}

impl TraceReport {
    pub fn ipc_f64(&self) -> f64 {
        *self.ipc.numer() as f64 / *self.ipc.denom() as f64
    }

    /// `key=value` lines for scripts.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "total_cycles={}", self.total_cycles);
        let _ = writeln!(s, "tile_executions={}", self.tile_executions);
        let _ = writeln!(s, "ipc={}", self.ipc_f64());
        let _ = writeln!(s, "mapping_ii={}", self.mapping_ii);
        let achieved = self.achieved_ii.map_or("none".to_string(), |v| v.to_string());
        let _ = writeln!(s, "achieved_ii={}", achieved);
        let util: Vec<String> = self.per_tile_utilization.iter().map(|u| format!("{:.3}", u)).collect();
        let _ = writeln!(s, "per_tile_utilization={}", util.join(","));
        s
    }
}

impl fmt::Display for TraceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cycles          {}", self.total_cycles)?;
        writeln!(f, "tile executions {}", self.tile_executions)?;
        writeln!(f, "ipc             {:.3}", self.ipc_f64())?;
        match self.achieved_ii {
            Some(a) => writeln!(f, "ii              {} (mapped {})", a, self.mapping_ii)?,
            None => writeln!(f, "ii              - (mapped {})", self.mapping_ii)?,
        }
        let busy = self.per_tile_utilization.iter().filter(|&&u| u > 0.0).count();
        writeln!(f, "busy tiles      {}/{}", busy, self.per_tile_utilization.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub outcome: Outcome,
    pub report: TraceReport,
}

/// IPC from raw counts. Zero cycles gives zero.
pub fn ipc(tile_executions: u64, total_cycles: u64) -> Ratio<u64> {
    if total_cycles == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(tile_executions, total_cycles)
    }
}

/// Speedup of `a` over `b`: `b.total_cycles / a.total_cycles`.
pub fn compare_runs(a: &TraceReport, b: &TraceReport) -> f64 {
    b.total_cycles as f64 / a.total_cycles as f64
}

struct InFlight {
    sink: Sink,
    value: PredValue,
}

/// Runs `f` as mapped by `m`. Execution continues after `return` fires
/// until the fabric is quiet, so trailing stores land; `total_cycles` runs to
/// the last firing plus the prologue.
pub fn simulate(
    f: &Function,
    arch: &ArchSpec,
    m: &MappingResult,
    args: &[Payload],
    mem: Memory,
    cfg: SimConfig,
) -> Result<SimRun, SimError> {
    let problems = validate_mapping(f, arch, m);
    if !problems.is_empty() {
        return Err(SimError::InvalidMapping(problems));
    }
    let graph = DfGraph::new(f)?;
    let mut mach = Machine::new(graph, normalize_args(f, args), mem, cfg.queue_depth)?;
    let ii = m.ii as u64;
    let lat = arch.link_latency as u64;
    let hops: HashMap<(usize, usize, usize, usize), &[crate::mapper::Hop]> =
        m.routes.iter().map(|r| ((r.producer, r.result, r.consumer, r.port), r.hops.as_slice())).collect();
    // Ops in tile order; within a cycle order is irrelevant because nothing
    // produced in cycle t is visible before t + 1.
    let mut ops: Vec<(usize, usize, u64)> = m.placements.iter().map(|(&n, p)| (p.tile, n, p.time as u64)).collect();
    ops.sort();
    let counters = counter_ops(&mach.graph);
    let first_slots = ops.iter().map(|o| o.2).max().unwrap_or(0);

    let mut wire: BTreeMap<u64, Vec<InFlight>> = BTreeMap::new();
    let mut pending: HashMap<(usize, usize), usize> = HashMap::new();
    let mut links: HashMap<(usize, usize, u64), (usize, usize)> = HashMap::new();
    let mut fired_on = vec![0u64; arch.tiles()];
    let mut executions = 0u64;
    let mut last_fire: Option<u64> = None;
    let mut counter_fires: HashMap<usize, Vec<u64>> = HashMap::new();
    for (sink, v) in mach.param_tokens() {
        mach.deliver(sink, v)?;
    }

    let mut quiet = 0u64;
    let mut t = 0u64;
    loop {
        if t >= cfg.fuel {
            return Err(SimError::FuelExhausted(cfg.fuel));
        }
        let mut active = false;
        while let Some(entry) = wire.first_entry() {
            if *entry.key() > t {
                break;
            }
            for tok in entry.remove() {
                *pending.get_mut(&(tok.sink.node, tok.sink.port)).expect("counted") -= 1;
                mach.deliver(tok.sink, tok.value)?;
                active = true;
            }
        }
        links.retain(|k, _| k.2 >= t);
        let mut mem_used = 0usize;
        for &(tile, n, time) in &ops {
            if t < time || !(t - time).is_multiple_of(ii) {
                continue;
            }
            mach.purge_phi(n);
            if !mach.ready(n) {
                continue;
            }
            if !mach.has_room(n, |s| pending.get(&(s.node, s.port)).copied().unwrap_or(0)) {
                continue;
            }
            let op = mach.graph.ops[n].opcode;
            if matches!(op, Opcode::Load | Opcode::LoadIndexed | Opcode::Store) {
                if cfg.mem_ports.is_some_and(|k| mem_used >= k) {
                    continue;
                }
                mem_used += 1;
            }
            let out = mach.fire(n)?;
            active = true;
            executions += 1;
            fired_on[tile] += 1;
            last_fire = Some(t);
            if counters.contains(&n) {
                counter_fires.entry(n).or_default().push(t);
            }
            for (r, v) in out {
                for s in mach.graph.outs[n][r].clone() {
                    let path = hops.get(&(n, r, s.node, s.port)).copied().unwrap_or(&[]);
                    for (j, h) in path.iter().enumerate() {
                        let dep = t + 1 + j as u64 * lat;
                        match links.get(&(h.from, h.to, dep)) {
                            Some(&u) if u != (n, r) => {
                                let what = format!("link tile {} -> tile {} carries two values", h.from, h.to);
                                return Err(SimError::Hazard { cycle: dep, what });
                            }
                            _ => {
                                links.insert((h.from, h.to, dep), (n, r));
                            }
                        }
                    }
                    let arrival = t + 1 + path.len() as u64 * lat;
                    *pending.entry((s.node, s.port)).or_default() += 1;
                    wire.entry(arrival).or_default().push(InFlight { sink: s, value: v });
                }
            }
        }
        quiet = if active { 0 } else { quiet + 1 };
        // Once every op has had its first slot, one full ii with nothing in
        // flight and nothing firing means no op will ever fire again.
        if wire.is_empty() && quiet > ii && t >= first_slots {
            break;
        }
        t += 1;
    }
    if !mach.returned {
        return Err(InterpError::Deadlock.into());
    }
    let total = last_fire.map_or(0, |l| l + 1) + cfg.prologue;
    let report = TraceReport {
        total_cycles: total,
        tile_executions: executions,
        ipc: ipc(executions, total),
        achieved_ii: counter_fires.values().max_by_key(|v| v.len()).and_then(|v| steady_distance(v)),
        mapping_ii: m.ii,
        per_tile_utilization: fired_on.iter().map(|&k| if total == 0 { 0.0 } else { k as f64 / total as f64 }).collect(),
    };
    Ok(SimRun { outcome: Outcome { ret: mach.ret, memory: mach.memory }, report })
}

/// Ops whose firing rate measures loop throughput: loop_control and
/// loop-header phis. The busiest one is the innermost loop.
fn counter_ops(g: &DfGraph) -> Vec<usize> {
    (0..g.len())
        .filter(|&n| match g.ops[n].opcode {
            Opcode::LoopControl => true,
            Opcode::Phi => g.inputs[n].iter().any(|&(_, back)| back),
            _ => false,
        })
        .collect()
}

fn steady_distance(fires: &[u64]) -> Option<u64> {
    if fires.len() < 3 {
        return None;
    }
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    for w in fires.windows(2) {
        *freq.entry(w[1] - w[0]).or_default() += 1;
    }
    freq.into_iter().max_by_key(|&(d, k)| (k, std::cmp::Reverse(d))).map(|(d, _)| d)
}
