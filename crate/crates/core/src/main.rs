use std::fmt::Write as _;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};

use neura::arch::ArchSpec;
use neura::corpus::{load_corpus, KernelCase};
use neura::interp::{interpret_cdfg, interpret_dataflow, parse_args, DataflowConfig, InterpError, Memory, Outcome, Payload};
use neura::ir::{verify, Form, Function};
use neura::mapper::{compute_min_ii, map_dfg, validate_mapping, MappingResult, DEFAULT_BUDGET};
use neura::passes::PassError;
use neura::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use neura::sim::{compare_runs, simulate, SimConfig, SimError, TraceReport};
use neura::text::{parse_module_named, parse_unverified, print_function};

#[derive(Parser)]
#[command(name = "neura", version, about = "Predicated dataflow compiler, interpreter, CGRA mapper and simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pass pipeline and print the result.
    Compile(Common),
    /// Interpret a kernel (after the pipeline, if any).
    Run(Common),
    /// Map the compiled kernel onto a fabric.
    Map(Common),
    /// Map, then simulate cycle by cycle.
    Simulate(Common),
    /// Map and simulate every corpus kernel on each fabric.
    Bench {
        /// Corpus directory holding `<kernel>/kernel.neura` entries.
        corpus: PathBuf,
        #[arg(long = "arch", required = true)]
        arch: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Parse and check IR invariants without transforming.
    Verify {
        input: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    input: PathBuf,
    /// Comma-separated pass names, or `none`.
    #[arg(long)]
    passes: Option<String>,
    #[arg(long)]
    arch: Option<PathBuf>,
    #[arg(long, default_value = "64", value_parser = PossibleValuesParser::new(["32", "64"]).map(|s| s.parse::<u32>().expect("listed value")))]
    index_width: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    /// Initial memory image (`addr: value` lines).
    #[arg(long)]
    mem: Option<PathBuf>,
    /// Comma-separated kernel arguments.
    #[arg(long, default_value = "")]
    args: String,
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    /// Function to use when the file holds several.
    #[arg(long)]
    func: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Ir,
    Mapping,
    Report,
}

/// An error with the module it came from and the exit code it maps to.
struct Failure {
    code: u8,
    module: &'static str,
    message: String,
}

impl Failure {
    fn user(module: &'static str, message: impl ToString) -> Self {
        Failure { code: 1, module, message: message.to_string() }
    }

    fn internal(module: &'static str, message: impl ToString) -> Self {
        Failure { code: 2, module, message: message.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Pass { error: PassError::Verify { .. }, .. } => Failure::internal("pipeline", e),
            _ => Failure::user("pipeline", e),
        }
    }
}

fn interp_failure(e: InterpError) -> Failure {
    match e {
        InterpError::PhiUniqueness(_) => Failure::internal("interpreter", e),
        _ => Failure::user("interpreter", e),
    }
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::InvalidMapping(_) | SimError::Hazard { .. } => Failure::internal("simulator", e),
        SimError::Interp(e) => interp_failure(e),
        SimError::FuelExhausted(_) => Failure::user("simulator", e),
    }
}

fn color_enabled() -> bool {
    let off = std::env::var("NEURA_COLOR").is_ok_and(|v| matches!(v.as_str(), "0" | "off" | "never" | "false" | "no"));
    !off && std::io::stderr().is_terminal()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.cmd) {
        Ok(out) => {
            print!("{}", out);
            ExitCode::SUCCESS
        }
        Err(f) => {
            if color_enabled() {
                eprintln!("\x1b[1;31merror\x1b[0m [{}]: {}", f.module, f.message);
            } else {
                eprintln!("error [{}]: {}", f.module, f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<String, Failure> {
    match cmd {
        Cmd::Compile(c) => compile_cmd(&c),
        Cmd::Run(c) => run_cmd(&c),
        Cmd::Map(c) => map_cmd(&c),
        Cmd::Simulate(c) => simulate_cmd(&c),
        Cmd::Bench { corpus, arch, seed, fuel } => bench_cmd(&corpus, &arch, seed, fuel),
        Cmd::Verify { input } => verify_cmd(&input),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::user("io", format!("{}: {}", path.display(), e)))
}

fn load_function(c: &Common) -> Result<Function, Failure> {
    let text = read(&c.input)?;
    let name = c.input.display().to_string();
    let mut m = parse_module_named(&text, Some(&name)).map_err(|e| Failure::user("parser", e))?;
    let idx = match &c.func {
        Some(f) => m
            .functions
            .iter()
            .position(|g| &g.name == f)
            .ok_or_else(|| Failure::user("parser", format!("no function @{} in {}", f, name)))?,
        None if m.functions.is_empty() => return Err(Failure::user("parser", format!("{} defines no function", name))),
        None => 0,
    };
    Ok(m.functions.swap_remove(idx))
}

fn load_arch(path: &Path) -> Result<ArchSpec, Failure> {
    ArchSpec::parse(&read(path)?).map_err(|e| Failure::user("arch", format!("{}: {}", path.display(), e)))
}

/// Default pipeline, plus both fusion passes gated on the fabric's fused ops
/// when a fabric is given.
fn pipeline_config(passes: Option<&str>, index_width: u32, arch: Option<&ArchSpec>) -> PipelineConfig {
    let mut cfg = match arch {
        Some(a) => PipelineConfig {
            capabilities: Some(a.fused_ops.iter().cloned().collect()),
            ..PipelineConfig::optimized()
        },
        None => PipelineConfig::default(),
    };
    cfg.index_width = index_width;
    match passes.map(str::trim) {
        Some("none") | Some("") => cfg.passes.clear(),
        Some(list) => cfg.passes = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => {}
    }
    cfg
}

fn compiled(c: &Common, arch: Option<&ArchSpec>) -> Result<Function, Failure> {
    let mut f = load_function(c)?;
    run_pipeline(&mut f, &pipeline_config(c.passes.as_deref(), c.index_width, arch))?;
    Ok(f)
}

fn inputs(c: &Common) -> Result<(Vec<Payload>, Memory), Failure> {
    let args = parse_args(&c.args).map_err(|e| Failure::user("interpreter", e))?;
    let mem = match &c.mem {
        Some(p) => Memory::parse(&read(p)?).map_err(|e| Failure::user("interpreter", format!("{}: {}", p.display(), e)))?,
        None => Memory::new(0),
    };
    Ok((args, mem))
}

fn need_arch(c: &Common) -> Result<ArchSpec, Failure> {
    match &c.arch {
        Some(p) => load_arch(p),
        None => Err(Failure::user("cli", "this command needs --arch")),
    }
}

fn mapped(f: &Function, arch: &ArchSpec, seed: u64) -> Result<MappingResult, Failure> {
    let m = map_dfg(f, arch, seed, DEFAULT_BUDGET).map_err(|e| Failure::user("mapper", e))?;
    let problems = validate_mapping(f, arch, &m);
    if !problems.is_empty() {
        return Err(Failure::internal("mapper", format!("mapper produced an invalid mapping: {}", problems.join("; "))));
    }
    Ok(m)
}

fn outcome_text(o: &Outcome, with_memory: bool) -> String {
    let mut s = String::new();
    match &o.ret {
        Some(v) => {
            let _ = writeln!(s, "result = {}", v);
        }
        None => s.push_str("result = (none)\n"),
    }
    if with_memory {
        s.push_str(&o.memory.to_text());
    }
    s
}

fn compile_cmd(c: &Common) -> Result<String, Failure> {
    let arch = c.arch.as_deref().map(load_arch).transpose()?;
    let f = compiled(c, arch.as_ref())?;
    match c.emit.unwrap_or(Emit::Ir) {
        Emit::Ir => Ok(print_function(&f)),
        Emit::Mapping => {
            let arch = need_arch(c)?;
            Ok(mapped(&f, &arch, c.seed)?.to_text())
        }
        Emit::Report => {
            let mut s = String::new();
            let _ = writeln!(s, "function @{}", f.name);
            let _ = writeln!(s, "form {}", if f.form == Form::Dataflow { "dataflow" } else { "cdfg" });
            let _ = writeln!(s, "ops {}", f.op_count());
            let _ = writeln!(s, "materialized_ops {}", f.materialized_op_count());
            if let (Some(a), Form::Dataflow) = (&arch, f.form) {
                let (res, rec) = compute_min_ii(&f, a).map_err(|e| Failure::user("mapper", e))?;
                let _ = writeln!(s, "min_ii res {} rec {}", res, rec);
            }
            Ok(s)
        }
    }
}

fn run_cmd(c: &Common) -> Result<String, Failure> {
    let arch = c.arch.as_deref().map(load_arch).transpose()?;
    let f = compiled(c, arch.as_ref())?;
    let (args, mem) = inputs(c)?;
    let show_mem = c.mem.is_some();
    match f.form {
        Form::Cdfg => {
            let o = interpret_cdfg(&f, &args, mem, c.fuel).map_err(interp_failure)?;
            Ok(outcome_text(&o, show_mem))
        }
        Form::Dataflow => {
            let cfg = DataflowConfig { fuel: c.fuel, ..DataflowConfig::default() };
            let r = interpret_dataflow(&f, &args, mem, cfg).map_err(interp_failure)?;
            let mut s = outcome_text(&r.outcome, show_mem);
            if c.emit == Some(Emit::Report) {
                let _ = writeln!(s, "firings {}", r.trace.len());
                let _ = writeln!(s, "sweeps {}", r.macro_steps);
            }
            Ok(s)
        }
    }
}

fn map_cmd(c: &Common) -> Result<String, Failure> {
    let arch = need_arch(c)?;
    let f = compiled(c, Some(&arch))?;
    let m = mapped(&f, &arch, c.seed)?;
    let summary = format!("min-II res {} rec {}; mapped ii {}\n", m.res_mii, m.rec_mii, m.ii);
    match c.emit.unwrap_or(Emit::Mapping) {
        Emit::Ir => Ok(print_function(&f)),
        Emit::Mapping => Ok(m.to_text() + &summary),
        Emit::Report => Ok(summary),
    }
}

fn simulate_cmd(c: &Common) -> Result<String, Failure> {
    let arch = need_arch(c)?;
    let f = compiled(c, Some(&arch))?;
    let m = mapped(&f, &arch, c.seed)?;
    let (args, mem) = inputs(c)?;
    let cfg = SimConfig { fuel: c.fuel, ..SimConfig::default() };
    let run = simulate(&f, &arch, &m, &args, mem, cfg).map_err(sim_failure)?;
    match c.emit.unwrap_or(Emit::Report) {
        Emit::Ir => Ok(print_function(&f)),
        Emit::Mapping => Ok(m.to_text()),
        Emit::Report => Ok(outcome_text(&run.outcome, c.mem.is_some()) + &run.report.to_string() + &run.report.to_kv()),
    }
}

fn verify_cmd(input: &Path) -> Result<String, Failure> {
    let text = read(input)?;
    let name = input.display().to_string();
    let m = parse_unverified(&text, Some(&name)).map_err(|e| Failure::user("parser", e))?;
    let mut problems = Vec::new();
    for f in &m.functions {
        for v in verify(f) {
            problems.push(format!("@{}: {}", f.name, v));
        }
    }
    if problems.is_empty() {
        Ok(format!("{}: ok ({} functions)\n", name, m.functions.len()))
    } else {
        Err(Failure::user("verifier", problems.join("\n")))
    }
}

/// One kernel on one fabric.
enum Cell {
    Ok { ii: usize, report: TraceReport },
    Failed(String),
}

fn bench_one(case: &KernelCase, arch: &ArchSpec, seed: u64, fuel: u64) -> Cell {
    let run = || -> Result<(usize, TraceReport), String> {
        let mut f = case.function()?;
        let cfg = pipeline_config(None, 64, Some(arch));
        run_pipeline(&mut f, &cfg).map_err(|e| e.to_string())?;
        let m = map_dfg(&f, arch, seed, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let input = case.sample_inputs().map_err(|e| e.to_string())?.into_iter().next().map(|(_, i)| i);
        let input = input.ok_or_else(|| "no sample input".to_string())?;
        let r = simulate(&f, arch, &m, &input.args, input.memory, SimConfig { fuel, ..SimConfig::default() })
            .map_err(|e| e.to_string())?;
        Ok((m.ii, r.report))
    };
    match run() {
        Ok((ii, report)) => Cell::Ok { ii, report },
        Err(e) => Cell::Failed(e),
    }
}

fn bench_cmd(corpus: &Path, arch_paths: &[PathBuf], seed: u64, fuel: u64) -> Result<String, Failure> {
    let archs: Vec<(String, ArchSpec)> = arch_paths
        .iter()
        .map(|p| Ok((p.file_stem().and_then(|s| s.to_str()).unwrap_or("arch").to_string(), load_arch(p)?)))
        .collect::<Result<_, Failure>>()?;
    let cases = load_corpus(corpus).map_err(|e| Failure::user("corpus", e))?;
    let rows: Vec<Vec<Cell>> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|case| {
                let archs = &archs;
                s.spawn(move || archs.iter().map(|(_, a)| bench_one(case, a, seed, fuel)).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });

    let bold = |t: &str| if color_enabled() && std::io::stdout().is_terminal() { format!("\x1b[1m{}\x1b[0m", t) } else { t.to_string() };
    let mut out = String::new();
    let mut head = format!("{:<12}", "kernel");
    for (k, (name, _)) in archs.iter().enumerate() {
        let _ = write!(head, " | {:>8} {:>12} {:>8}", format!("ii@{}", name), format!("cycles@{}", name), format!("ipc@{}", name));
        if k > 0 {
            let _ = write!(head, " {:>7}", "speedup");
        }
    }
    let _ = writeln!(out, "{}", bold(&head));
    let mut failures = Vec::new();
    for (case, cells) in cases.iter().zip(&rows) {
        let _ = write!(out, "{:<12}", case.name);
        for (k, cell) in cells.iter().enumerate() {
            match cell {
                Cell::Ok { ii, report } => {
                    let _ = write!(out, " | {:>8} {:>12} {:>8.3}", ii, report.total_cycles, report.ipc_f64());
                }
                Cell::Failed(e) => {
                    let _ = write!(out, " | {:>8} {:>12} {:>8}", "-", "-", "-");
                    failures.push(format!("{} on {}: {}", case.name, archs[k].0, e));
                }
            }
            if k > 0 {
                match (&cells[0], cell) {
                    (Cell::Ok { report: a, .. }, Cell::Ok { report: b, .. }) => {
                        let _ = write!(out, " {:>6.2}x", compare_runs(b, a));
                    }
                    _ => {
                        let _ = write!(out, " {:>7}", "-");
                    }
                }
            }
        }
        out.push('\n');
    }
    for f in failures {
        let _ = writeln!(out, "note: {}", f);
    }
    Ok(out)
}
