//! Acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::oracle_eval;
use neura::arch::{ArchSpec, ExecutionModel};
use neura::corpus::{default_corpus_dir, load_corpus, KernelCase, KernelInput};
use neura::interp::{
    interpret_cdfg, interpret_dataflow, DataflowConfig, DfGraph, InterpError, Machine, Memory, OpState, Outcome, Payload,
    PredValue, Sink,
};
use neura::ir::{BlockId, Function, Opcode, ValueId};
use neura::mapper::{compute_min_ii, map_dfg, validate_mapping, MappingResult, DEFAULT_BUDGET};
use neura::passes::{canonicalize_live_in_traced, category_counts, classify_cfg_edges, dce};
use neura::pipeline::{run_pass, run_pipeline, PipelineConfig};
use neura::sim::{simulate, SimConfig, TraceReport};
use neura::text::{parse_unverified, print_function};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LIVE_IN_MIN_KERNELS: usize = 12;
const LIVE_IN_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_INPUTS: usize = 100;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const SOUNDNESS_INPUTS: usize = 30;
const SIM_INPUTS: usize = 10;
/// Kernel with 39 materialized ops after the optimized pipeline.
const RES_KERNEL: &str = "floyd";
const RES_OPS: usize = 39;
const RES_4X4: usize = 3;
const RES_6X6: usize = 2;
const SEED: u64 = 1;
const CDFG_FUEL: u64 = 1_000_000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inputs(case: &KernelCase, n: usize, seed: u64) -> Vec<KernelInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<KernelInput> = case.sample_inputs().unwrap().into_iter().map(|(_, i)| i).collect();
    out.extend((0..n).map(|_| case.random_input(&mut rng)));
    out
}

fn lower(case: &KernelCase, cfg: &PipelineConfig) -> Result<Function, String> {
    let mut f = case.function()?;
    run_pipeline(&mut f, cfg).map_err(|e| e.to_string())?;
    Ok(f)
}

fn run_df(f: &Function, inp: &KernelInput) -> Result<Outcome, InterpError> {
    interpret_dataflow(f, &inp.args, inp.memory.clone(), DataflowConfig::default()).map(|r| r.outcome)
}

fn has_loop(f: &Function) -> bool {
    DfGraph::new(f).is_ok_and(|g| g.edges().iter().any(|e| e.2))
}

// ---------------------------------------------------------------- live-in

/// Upward-exposed uses plus everything live out and not defined locally,
/// iterated to a fixed point. Written separately from the pass under test.
fn reference_live_ins(f: &Function) -> HashMap<BlockId, BTreeSet<ValueId>> {
    let n = f.blocks.len();
    let index: HashMap<BlockId, usize> = f.blocks.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut defs = vec![BTreeSet::new(); n];
    let mut exposed = vec![BTreeSet::new(); n];
    let mut succ = vec![Vec::new(); n];
    for (i, b) in f.blocks.iter().enumerate() {
        defs[i].extend(b.args.iter().map(|a| a.0));
        for op in &b.ops {
            for v in op.operands.iter().chain(op.successors.iter().flat_map(|s| s.args.iter())) {
                if !defs[i].contains(v) {
                    exposed[i].insert(*v);
                }
            }
            defs[i].extend(op.results.iter().map(|r| r.0));
            succ[i].extend(op.successors.iter().map(|s| index[&s.block]));
        }
    }
    let mut live: Vec<BTreeSet<ValueId>> = exposed.clone();
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let out: BTreeSet<ValueId> = succ[i].iter().flat_map(|&s| live[s].iter().copied()).collect();
            for v in out {
                if !defs[i].contains(&v) && live[i].insert(v) {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    f.blocks.iter().zip(live).map(|(b, s)| (b.id, s)).collect()
}

fn live_in_coverage(corpus: &[KernelCase]) -> Check {
    let start = Instant::now();
    let mut edges = 0;
    for case in corpus {
        let mut g = case.function()?;
        let cfg = PipelineConfig::default();
        for p in ["promote-func-args", "canonicalize-cast", "fold-constant"] {
            run_pass(&mut g, p, &cfg).map_err(|e| e.to_string())?;
        }
        dce(&mut g);
        let want = reference_live_ins(&g);
        let mut h = g.clone();
        let rw = canonicalize_live_in_traced(&mut h).map_err(|e| format!("{}: {}", case.name, e))?;
        let back: HashMap<ValueId, ValueId> = rw.args.iter().map(|(&(_, v), &a)| (a, v)).collect();
        for b in &h.blocks {
            for op in &b.ops {
                for s in &op.successors {
                    let passed: BTreeSet<ValueId> = s.args.iter().map(|a| *back.get(a).unwrap_or(a)).collect();
                    let missing: Vec<_> = want[&s.block].difference(&passed).collect();
                    ensure(missing.is_empty(), || format!("{}: edge to {:?} misses {:?}", case.name, s.block, missing))?;
                    edges += 1;
                }
            }
        }
        let after = reference_live_ins(&h);
        for b in h.blocks.iter().skip(1) {
            ensure(after[&b.id].is_empty(), || format!("{}: {:?} still has live-ins {:?}", case.name, b.id, after[&b.id]))?;
        }
        let counts = category_counts(&classify_cfg_edges(&h).map_err(|e| e.to_string())?);
        ensure(counts[..4].iter().all(|&c| c == 0), || format!("{}: categories {:?}", case.name, counts))?;
    }
    let took = start.elapsed();
    ensure(corpus.len() >= LIVE_IN_MIN_KERNELS, || format!("only {} kernels", corpus.len()))?;
    for tag in ["imperfect_nest", "branch_in_loop"] {
        ensure(corpus.iter().any(|c| c.has_feature(tag)), || format!("no {} kernel", tag))?;
    }
    ensure(took < LIVE_IN_BUDGET, || format!("took {:?}", took))?;
    Ok(format!("{} kernels, {} edges, categories 1-4 empty, {:?}", corpus.len(), edges, took))
}

// ---------------------------------------------------------------- oracle

fn oracle_equivalence(corpus: &[KernelCase]) -> Check {
    let start = Instant::now();
    let mut total = 0;
    for case in corpus {
        let cdfg = case.function()?;
        let df = lower(case, &PipelineConfig::default())?;
        let ins = inputs(case, ORACLE_INPUTS, 11);
        for inp in &ins {
            let want = oracle_eval(case, inp);
            let c = interpret_cdfg(&cdfg, &inp.args, inp.memory.clone(), CDFG_FUEL);
            ensure(c.as_ref() == Ok(&want), || format!("{} cdfg {:?}: {:?}", case.name, inp.args, c))?;
            let d = run_df(&df, inp);
            ensure(d.as_ref() == Ok(&want), || format!("{} dataflow {:?}: {:?}", case.name, inp.args, d))?;
        }
        total += ins.len();
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {:?}", took))?;
    Ok(format!("{} kernels, {} inputs, {:?}", corpus.len(), total, took))
}

// ---------------------------------------------------------------- soundness

fn fused_count(f: &Function, pass: &str) -> usize {
    match pass {
        "fuse-pattern" => f.count_opcode(Opcode::LoadIndexed) + f.count_opcode(Opcode::MulAdd),
        _ => f.count_opcode(Opcode::LoopControl),
    }
}

fn optimization_soundness(corpus: &[KernelCase]) -> Check {
    let mut applied: HashMap<&str, usize> = HashMap::new();
    for case in corpus {
        let ins = inputs(case, SOUNDNESS_INPUTS, 23);
        let agree = |f: &Function, df: bool, what: &str| -> Result<(), String> {
            for inp in &ins {
                let want = oracle_eval(case, inp);
                let got =
                    if df { run_df(f, inp) } else { interpret_cdfg(f, &inp.args, inp.memory.clone(), CDFG_FUEL) };
                ensure(got.as_ref() == Ok(&want), || format!("{} after {} {:?}: {:?}", case.name, what, inp.args, got))?;
            }
            Ok(())
        };
        // CDFG-level passes, alone and with the pipeline around them.
        for (pass, width) in [("fold-constant", 64), ("canonicalize-cast", 64), ("canonicalize-cast", 32)] {
            let cfg = PipelineConfig { index_width: width, ..PipelineConfig::default() };
            let before = case.function()?;
            let mut f = before.clone();
            run_pass(&mut f, pass, &cfg).map_err(|e| e.to_string())?;
            agree(&f, false, pass)?;
            if print_function(&f) != print_function(&before) {
                *applied.entry(pass).or_default() += 1;
            }
            // Predication needs concrete integer types, so only folding can be left out.
            if pass == "fold-constant" {
                let without = PipelineConfig { passes: cfg.passes.iter().filter(|p| *p != pass).cloned().collect(), ..cfg.clone() };
                agree(&lower(case, &without)?, true, "pipeline without fold-constant")?;
            }
            agree(&lower(case, &cfg)?, true, &format!("pipeline with {}", pass))?;
        }
        // Dataflow fusions, one at a time and together.
        let cfg = PipelineConfig::default();
        let base = lower(case, &cfg)?;
        for pass in ["fuse-pattern", "fuse-loop-control"] {
            let mut f = base.clone();
            run_pass(&mut f, pass, &cfg).map_err(|e| e.to_string())?;
            agree(&f, true, pass)?;
            if fused_count(&f, pass) > fused_count(&base, pass) {
                *applied.entry(pass).or_default() += 1;
                ensure(f.materialized_op_count() < base.materialized_op_count(), || {
                    format!("{}: {} did not shrink ({} -> {})", case.name, pass, base.materialized_op_count(), f.materialized_op_count())
                })?;
            }
        }
        agree(&lower(case, &PipelineConfig::optimized())?, true, "optimized pipeline")?;
    }
    for pass in ["fold-constant", "canonicalize-cast", "fuse-pattern", "fuse-loop-control"] {
        ensure(applied.get(pass).copied().unwrap_or(0) > 0, || format!("{} never applied", pass))?;
    }
    let mut parts: Vec<String> = applied.iter().map(|(p, n)| format!("{} x{}", p, n)).collect();
    parts.sort();
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------- mapping

struct Arch {
    name: &'static str,
    spec: ArchSpec,
}

struct Mapped {
    kernel: usize,
    arch: usize,
    f: Function,
    min_ii: (usize, usize),
    result: Result<MappingResult, String>,
    rerun: Result<MappingResult, String>,
}

fn archs() -> Vec<Arch> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("arch");
    ["6x6_spatial", "4x4", "6x6"]
        .into_iter()
        .map(|name| {
            let text = std::fs::read_to_string(dir.join(format!("{}.arch", name))).unwrap();
            Arch { name, spec: ArchSpec::parse(&text).unwrap() }
        })
        .collect()
}

fn arch_pipeline(a: &ArchSpec) -> PipelineConfig {
    PipelineConfig { capabilities: Some(a.fused_ops.iter().cloned().collect()), ..PipelineConfig::optimized() }
}

fn map_all(corpus: &[KernelCase], archs: &[Arch]) -> Vec<Mapped> {
    let mut out = Vec::new();
    for (k, case) in corpus.iter().enumerate() {
        for (a, arch) in archs.iter().enumerate() {
            let f = lower(case, &arch_pipeline(&arch.spec)).unwrap();
            let min_ii = compute_min_ii(&f, &arch.spec).unwrap();
            let go = || map_dfg(&f, &arch.spec, SEED, DEFAULT_BUDGET).map_err(|e| e.to_string());
            let (result, rerun) = (go(), go());
            out.push(Mapped { kernel: k, arch: a, f, min_ii, result, rerun });
        }
    }
    out
}

fn resource_ii(corpus: &[KernelCase], archs: &[Arch], runs: &[Mapped]) -> Check {
    let case = corpus.iter().find(|c| c.name == RES_KERNEL).ok_or("resource kernel missing")?;
    let mut got = Vec::new();
    for (name, want) in [("4x4", RES_4X4), ("6x6", RES_6X6)] {
        let arch = archs.iter().find(|a| a.name == name).unwrap();
        let f = lower(case, &arch_pipeline(&arch.spec))?;
        ensure(f.materialized_op_count() == RES_OPS, || format!("{} has {} ops", RES_KERNEL, f.materialized_op_count()))?;
        let (res, _) = compute_min_ii(&f, &arch.spec).map_err(|e| e.to_string())?;
        ensure(res == want, || format!("res_mii {} on {}, expected {}", res, name, want))?;
        got.push(res);
    }
    let mut checked = 0;
    for r in runs {
        if let Ok(m) = &r.result {
            let bound = r.min_ii.0.max(r.min_ii.1);
            ensure(m.ii >= bound, || {
                format!("{} on {}: ii {} below {:?}", corpus[r.kernel].name, archs[r.arch].name, m.ii, r.min_ii)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{} ops: res_mii {} (4x4) / {} (6x6); {} mappings, 0 below bound", RES_OPS, got[0], got[1], checked))
}

fn mapping_validity(corpus: &[KernelCase], archs: &[Arch], runs: &[Mapped]) -> Check {
    let mut ok = 0;
    let mut failed = Vec::new();
    for r in runs {
        let who = || format!("{} on {}", corpus[r.kernel].name, archs[r.arch].name);
        let same = match (&r.result, &r.rerun) {
            (Ok(a), Ok(b)) => a.to_text() == b.to_text(),
            (Err(a), Err(b)) => a == b,
            _ => false,
        };
        ensure(same, || format!("{}: re-run differs", who()))?;
        match &r.result {
            Ok(m) => {
                let problems = validate_mapping(&r.f, &archs[r.arch].spec, m);
                ensure(problems.is_empty(), || format!("{}: {:?}", who(), problems))?;
                ok += 1;
            }
            Err(_) => failed.push(who()),
        }
        // Spatio-temporal fabrics must map every kernel.
        ensure(r.result.is_ok() || archs[r.arch].spec.execution_model == ExecutionModel::SpatialOnly, || {
            format!("{}: {}", who(), r.result.as_ref().err().unwrap())
        })?;
    }
    Ok(format!("{} valid, {} unmapped (spatial, too many ops), re-runs identical", ok, failed.len()))
}

// ---------------------------------------------------------------- simulator

fn sim_fidelity(corpus: &[KernelCase], archs: &[Arch], runs: &[Mapped]) -> Check {
    let mut sims = 0;
    let mut pipelined = 0;
    for r in runs {
        let Ok(m) = &r.result else { continue };
        let case = &corpus[r.kernel];
        let arch = &archs[r.arch].spec;
        let who = || format!("{} on {}", case.name, archs[r.arch].name);
        for (i, inp) in inputs(case, SIM_INPUTS, 31).iter().enumerate() {
            let want = run_df(&r.f, inp).map_err(|e| format!("{}: {}", who(), e))?;
            let run = simulate(&r.f, arch, m, &inp.args, inp.memory.clone(), SimConfig::default())
                .map_err(|e| format!("{} {:?}: {}", who(), inp.args, e))?;
            ensure(run.outcome == want, || format!("{} {:?}: outcome differs", who(), inp.args))?;
            let rep = &run.report;
            ensure(*rep.ipc.numer() * rep.total_cycles == rep.tile_executions * *rep.ipc.denom(), || {
                format!("{}: ipc {} x {} != {}", who(), rep.ipc, rep.total_cycles, rep.tile_executions)
            })?;
            // The first input is the kernel's sample, which runs its loop.
            if i == 0 && has_loop(&r.f) {
                ensure(rep.achieved_ii == Some(m.ii as u64), || {
                    format!("{}: steady-state ii {:?}, mapped {}", who(), rep.achieved_ii, m.ii)
                })?;
                pipelined += 1;
            }
            sims += 1;
        }
    }
    Ok(format!("{} runs equal, ipc exact, measured ii = mapped ii on {} pipelined mappings", sims, pipelined))
}

fn sample_run(case: &KernelCase, f: &Function, arch: &ArchSpec, m: &MappingResult) -> Result<TraceReport, String> {
    let inp = &inputs(case, 0, 0)[0];
    simulate(f, arch, m, &inp.args, inp.memory.clone(), SimConfig::default())
        .map(|r| r.report)
        .map_err(|e| format!("{}: {}", case.name, e))
}

fn scaling(corpus: &[KernelCase], archs: &[Arch], runs: &[Mapped]) -> Check {
    let a4 = archs.iter().position(|a| a.name == "4x4").unwrap();
    let a6 = archs.iter().position(|a| a.name == "6x6").unwrap();
    let find = |k: usize, a: usize| runs.iter().find(|r| r.kernel == k && r.arch == a).unwrap();
    let mut rows = Vec::new();
    for (k, case) in corpus.iter().enumerate() {
        let (r4, r6) = (find(k, a4), find(k, a6));
        // Resource-bound: a loop whose ii on the small fabric is set by tile count.
        if !has_loop(&r4.f) || r4.min_ii.0 <= r4.min_ii.1 {
            continue;
        }
        let (Ok(m4), Ok(m6)) = (&r4.result, &r6.result) else {
            return Err(format!("{} unmapped", case.name));
        };
        let c4 = sample_run(case, &r4.f, &archs[a4].spec, m4)?.total_cycles;
        let c6 = sample_run(case, &r6.f, &archs[a6].spec, m6)?.total_cycles;
        let prologue = m6.schedule_length as u64;
        let (ii4, ii6) = (m4.ii as u64, m6.ii as u64);
        ensure(c6 <= c4, || format!("{}: {} cycles on 6x6 vs {} on 4x4", case.name, c6, c4))?;
        // c4 / c6 <= ii4 / ii6 + prologue / c6
        ensure(c4 * ii6 <= ii4 * c6 + prologue * ii6, || {
            format!("{}: speedup {:.2} over bound {}/{} + {}/{}", case.name, c4 as f64 / c6 as f64, ii4, ii6, prologue, c6)
        })?;
        rows.push(format!("{} {:.2}x (ii {}->{})", case.name, c4 as f64 / c6 as f64, ii4, ii6));
    }
    ensure(!rows.is_empty(), || "no resource-bound kernel".into())?;
    Ok(rows.join(", "))
}

// ---------------------------------------------------------------- semantics

fn machine(body: &str, params: &str, mem: &[i64]) -> Machine {
    let src = format!("dataflow func @t({}) {{\nbb0:\n{}}}\n", params, body);
    let module = parse_unverified(&src, None).unwrap();
    let f = &module.functions[0];
    let g = DfGraph::new(f).unwrap();
    let args = vec![Payload::Int(0); f.params.len()];
    Machine::new(g, args, Memory { cells: mem.to_vec() }, 4).unwrap()
}

fn tok(d: i64, p: bool) -> PredValue {
    PredValue::new(Payload::Int(d), p)
}

fn feed(m: &mut Machine, toks: &[PredValue]) {
    for (port, t) in toks.iter().enumerate() {
        m.deliver(Sink { node: 0, port, back: false }, *t).unwrap();
    }
}

fn patterns(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << k).map(move |mask| (0..k).map(|i| mask >> i & 1 == 1).collect())
}

const P3: &str = "%a: !pred<i64>, %b: !pred<i64>, %c: !pred<i64>";

fn semantics() -> Check {
    let mut cases = 0;
    let out = |m: &mut Machine| m.fire(0).map_err(|e| e.to_string());

    // PredComp: data from the operation, predicate the conjunction.
    for (body, k, data, want) in [
        ("  %0 = neura.add %a {rhs_const = 5 : i64} : !pred<i64>\n", 1, vec![7], 12),
        ("  %0 = neura.add %a, %b : !pred<i64>\n", 2, vec![7, 5], 12),
        ("  %0 = neura.sel %a, %b, %c : !pred<i64>\n", 3, vec![1, 7, 5], 7),
    ] {
        for ps in patterns(k) {
            let mut m = machine(body, P3, &[0; 4]);
            let toks: Vec<_> = data.iter().zip(&ps).map(|(&d, &p)| tok(d, p)).collect();
            feed(&mut m, &toks);
            ensure(m.ready(0), || format!("pred-comp {:?} not ready", ps))?;
            let got = out(&mut m)?;
            ensure(got == vec![(0, tok(want, ps.iter().all(|&p| p)))], || format!("pred-comp {:?}: {:?}", ps, got))?;
            cases += 1;
        }
    }

    // Load: a true address reads memory; any false predicate touches nothing,
    // so an out-of-range address must not fault.
    for (body, k) in [("  %0 = neura.load %a : !pred<i64>\n", 1), ("  %0 = neura.load_indexed %a, %b : !pred<i64>\n", 2)] {
        for ps in patterns(k) {
            let all = ps.iter().all(|&p| p);
            let parts: Vec<i64> = if all { vec![1, 1] } else { vec![50, 50] };
            let mut m = machine(body, P3, &[0, 0, 9, 0]);
            let toks: Vec<_> = ps.iter().enumerate().map(|(i, &p)| tok(if k == 1 { parts[0] * 2 } else { parts[i] }, p)).collect();
            feed(&mut m, &toks);
            let got = out(&mut m)?;
            let want = if all { tok(9, true) } else { tok(0, false) };
            ensure(got == vec![(0, want)], || format!("load/{} {:?}: {:?}", k, ps, got))?;
            cases += 1;
        }
    }

    // Store: memory changes only when data and address are both true.
    for ps in patterns(2) {
        for addr in [3, 99] {
            let all = ps[0] && ps[1];
            if all && addr == 99 {
                continue;
            }
            let mut m = machine("  neura.store %a, %b\n", P3, &[0; 4]);
            feed(&mut m, &[tok(42, ps[0]), tok(addr, ps[1])]);
            let got = out(&mut m)?;
            let want = if all { vec![0, 0, 0, 42] } else { vec![0; 4] };
            ensure(got.is_empty() && m.memory.cells == want, || format!("store {:?} @{}: {:?}", ps, addr, m.memory.cells))?;
            cases += 1;
        }
    }

    // GrantOnce: first token passes with a true predicate, then never again.
    for ps in patterns(1) {
        let mut m = machine("  %0 = neura.grant_once %a : !pred<i64>\n", P3, &[0; 4]);
        feed(&mut m, &[tok(6, ps[0])]);
        let got = out(&mut m)?;
        ensure(got == vec![(0, tok(6, true))], || format!("grant_once {:?}: {:?}", ps, got))?;
        feed(&mut m, &[tok(8, true)]);
        ensure(!m.ready(0) && m.state[0] == OpState::Consumed, || format!("grant_once {:?} fired twice", ps))?;
        cases += 1;
    }

    // GrantPred: value data, predicate = condition data and condition predicate.
    for ps in patterns(2) {
        for cond in [0, 1] {
            let mut m = machine("  %0 = neura.grant_predicate %a, %b : !pred<i64>\n", "%a: !pred<i64>, %b: !pred<i1>", &[0; 4]);
            feed(&mut m, &[tok(6, ps[0]), tok(cond, ps[1])]);
            let got = out(&mut m)?;
            ensure(got == vec![(0, tok(6, cond == 1 && ps[1]))], || format!("grant_predicate {:?} c={}: {:?}", ps, cond, got))?;
            cases += 1;
        }
    }

    // Phi: exactly one true input is forwarded; none leaves it waiting; two
    // or more violate uniqueness.
    for (body, k) in [("  %0 = neura.phi %a, %b : !pred<i64>\n", 2), ("  %0 = neura.phi %a, %b, %c : !pred<i64>\n", 3)] {
        for ps in patterns(k) {
            let mut m = machine(body, P3, &[0; 4]);
            let toks: Vec<_> = ps.iter().enumerate().map(|(i, &p)| tok(10 + i as i64, p)).collect();
            feed(&mut m, &toks);
            m.purge_phi(0);
            let trues: Vec<usize> = (0..k).filter(|&i| ps[i]).collect();
            match trues.len() {
                0 => ensure(!m.ready(0), || format!("phi {:?} fired with no true input", ps))?,
                1 => {
                    let got = out(&mut m)?;
                    ensure(got == vec![(0, tok(10 + trues[0] as i64, true))], || format!("phi {:?}: {:?}", ps, got))?;
                }
                _ => {
                    let got = m.fire(0);
                    ensure(matches!(got, Err(InterpError::PhiUniqueness(_))), || format!("phi {:?}: {:?}", ps, got))?;
                }
            }
            cases += 1;
        }
    }
    Ok(format!("{} predicate patterns, phi uniqueness enforced", cases))
}

// ---------------------------------------------------------------- driver

#[test]
fn acceptance() {
    let corpus = load_corpus(&default_corpus_dir()).unwrap();
    let archs = archs();
    let runs = map_all(&corpus, &archs);
    let results: Vec<(&str, Check)> = vec![
        ("live-in coverage", live_in_coverage(&corpus)),
        ("oracle equivalence", oracle_equivalence(&corpus)),
        ("optimization soundness", optimization_soundness(&corpus)),
        ("resource-ii", resource_ii(&corpus, &archs, &runs)),
        ("mapping validity", mapping_validity(&corpus, &archs, &runs)),
        ("simulator fidelity", sim_fidelity(&corpus, &archs, &runs)),
        ("scaling", scaling(&corpus, &archs, &runs)),
        ("semantics", semantics()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS  {:<24} {}", name, d),
            Err(e) => {
                println!("FAIL  {:<24} {}", name, e);
                failed += 1;
            }
        }
    }
    assert_eq!(failed, 0, "{} acceptance criteria failed", failed);
}
