//! The `seqeq` command line: subcommands, config overrides, exit codes and
//! report/trace emission.
//!
//! Exit codes: 0 EQUIVALENT or clean, 1 NOT_EQUIVALENT or X leak,
//! 2 INCONCLUSIVE or VACUOUS, 3 usage, parse or internal error.

pub mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use seqeq::bench::{self, BenchError, Kind, Scenario, Size};
use seqeq::cec::{check_cec, CecError};
use seqeq::config::{ConfigError, DesignConfig, Mode, ReportFormat, TaskConfig};
use seqeq::frontend::{self, ElabOptions, FrontendError, XMode, XPolicy};
use seqeq::mapper::{refine_mapping, MapError};
use seqeq::mapping::Mapping;
use seqeq::sec::{bmc_cnf, check_sec, SecError, Status, Task, Verdict};
use seqeq::sim::{replay, SimError, Trace, TraceError};
use seqeq::xcheck::{check_x, XCheckError};

use report::{to_csv, Report, ReportError};

pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Sec(#[from] SecError),
    #[error(transparent)]
    Cec(#[from] CecError),
    #[error(transparent)]
    XCheck(#[from] XCheckError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), msg: e.to_string() }
}

#[derive(Parser, Debug)]
#[command(name = "seqeq", version, about = "Sequential equivalence checking for SNL designs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check a SPEC/IMP pair (mode cec, sec or xcheck)
    Check(CheckArgs),
    /// Parse and elaborate one design, print statistics and X sources
    Parse(ParseArgs),
    /// Check that no X source can reach an output
    Xcheck(XcheckArgs),
    /// Generate benchmark scenarios
    Bench(BenchArgs),
    /// Print the SPEC/IMP correspondence
    Map(MapArgs),
    /// Replay a counterexample trace in the simulator
    Replay(ReplayArgs),
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_kv(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    Ok((k.to_string(), v.parse().map_err(|e| format!("{e}"))?))
}

/// Task selection and config overrides shared by several subcommands.
#[derive(Args, Debug, Default)]
struct TaskArgs {
    /// Task configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// SPEC design file (overrides the config)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// IMP design file (overrides the config)
    #[arg(long)]
    imp: Option<PathBuf>,
    /// cec, sec or xcheck
    #[arg(long)]
    mode: Option<String>,
    /// Output latency for all outputs as SPEC,IMP
    #[arg(long, value_parser = parse_pair)]
    latency: Option<(u32, u32)>,
    /// Constraint expression (repeatable; replaces the config's list)
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// Output qualifier expression
    #[arg(long)]
    qualifier: Option<String>,
    /// Parameter override NAME=VALUE for both designs (repeatable)
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, u64)>,
    #[arg(long)]
    bmc_depth: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Conflict limit per solver call
    #[arg(long)]
    conflicts: Option<u64>,
    /// Cap on concurrently running solver instances
    #[arg(long)]
    jobs: Option<usize>,
    /// Solver seed (SEQEQ_SOLVER_SEED takes precedence)
    #[arg(long)]
    seed: Option<u64>,
    /// Skip register-correspondence refinement
    #[arg(long)]
    no_refine: bool,
    /// Instance path to black-box on both sides (repeatable)
    #[arg(long = "blackbox")]
    blackboxes: Vec<String>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Where to write a counterexample trace
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where to write the report
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report format: text or json
    #[arg(long)]
    format: Option<String>,
    /// Write the BMC queries for depths 0..=bmc_depth as DIMACS files
    #[arg(long)]
    dump_cnf: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ParseArgs {
    file: PathBuf,
    #[arg(long)]
    top: Option<String>,
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, u64)>,
    /// X policy: zero, one or symbolic
    #[arg(long)]
    xpolicy: Option<String>,
    #[arg(long)]
    allow_undriven: bool,
    /// Print the parsed source back
    #[arg(long)]
    print: bool,
}

#[derive(Args, Debug)]
struct XcheckArgs {
    /// Task configuration file (mode xcheck)
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Design file, instead of a config
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long)]
    top: Option<String>,
    /// uninit, xsrc or both
    #[arg(long)]
    mode: Option<String>,
    /// 01 or symbolic
    #[arg(long)]
    policy: Option<String>,
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, u64)>,
    #[arg(long)]
    allow_undriven: bool,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Scenario kind, e.g. retime or random
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    depth: Option<u32>,
    /// Emit only this variant (default: the canonical one)
    #[arg(long)]
    variant: Option<String>,
    /// Emit every variant
    #[arg(long)]
    all_variants: bool,
    /// Also run the checker and write report.json per scenario plus
    /// summary.csv
    #[arg(long)]
    run: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Prove or drop candidate register pairs first
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Trace file to replay
    #[arg(long)]
    trace: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let r = match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Parse(a) => cmd_parse(a),
        Cmd::Xcheck(a) => cmd_xcheck(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Map(a) => cmd_map(a),
        Cmd::Replay(a) => cmd_replay(a),
    };
    let _ = std::io::stdout().flush();
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn absolute(p: &Path) -> String {
    std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}

/// Loads the config (if any) and applies flag overrides. Returns the
/// config and the directory its file names are relative to.
fn load_task_config(a: &TaskArgs) -> Result<(TaskConfig, PathBuf), CliError> {
    let (mut cfg, dir) = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let cfg = TaskConfig::parse(&text)?;
            (cfg, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => {
            if a.spec.is_none() {
                return Err(CliError::Usage("need --config or --spec/--imp".into()));
            }
            (TaskConfig::default(), PathBuf::new())
        }
    };
    if let Some(p) = &a.spec {
        cfg.spec.file = absolute(p);
    }
    if let Some(p) = &a.imp {
        cfg.imp.get_or_insert_with(DesignConfig::default).file = absolute(p);
    }
    if let Some(m) = &a.mode {
        cfg.mode = match m.as_str() {
            "cec" => Mode::Cec,
            "sec" => Mode::Sec,
            "xcheck" => Mode::Xcheck,
            _ => return Err(CliError::Usage(format!("unknown mode {m}"))),
        };
    }
    if a.latency.is_some() {
        cfg.mapping.latency = a.latency;
    }
    if !a.constraints.is_empty() {
        cfg.constraints = a.constraints.clone();
    }
    if a.qualifier.is_some() {
        cfg.mapping.qualifier = a.qualifier.clone();
    }
    for (k, v) in &a.params {
        cfg.spec.params.insert(k.clone(), *v);
        if let Some(i) = cfg.imp.as_mut() {
            i.params.insert(k.clone(), *v);
        }
    }
    let e = &mut cfg.engine;
    e.bmc_depth = a.bmc_depth.unwrap_or(e.bmc_depth);
    e.k_max = a.k_max.unwrap_or(e.k_max);
    e.conflicts = a.conflicts.unwrap_or(e.conflicts);
    e.jobs = a.jobs.unwrap_or(e.jobs);
    e.seed = a.seed.unwrap_or(e.seed);
    if a.no_refine {
        cfg.mapping.refine = false;
    }
    for b in &a.blackboxes {
        cfg.blackboxes.spec.push(b.clone());
        cfg.blackboxes.imp.push(b.clone());
    }
    cfg.check_files(&dir)?;
    seqeq::sat::set_default_solver_seed(cfg.engine.seed);
    Ok((cfg, dir))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Cec => "cec",
        Mode::Sec => "sec",
        Mode::Xcheck => "xcheck",
    }
}

/// Runs the configured check. For xcheck the single design is the SPEC.
fn run_config(cfg: &TaskConfig, spec_src: &str, imp_src: Option<&str>) -> Result<(Verdict, Mapping), CliError> {
    match cfg.mode {
        Mode::Xcheck => {
            let (mods, top) = cfg.spec.modules(spec_src)?;
            let r = check_x(&mods, &top, &cfg.xcheck_options()?)?;
            let mut v = r.verdict;
            for c in &r.culprits {
                v.notes.push(format!("X source {} ({:?}, line {}) reaches {}", c.name, c.kind, c.line, v.failing_output.as_deref().unwrap_or("?")));
            }
            Ok((v, Mapping::default()))
        }
        Mode::Cec | Mode::Sec => {
            let imp_src = imp_src.ok_or_else(|| CliError::Usage("missing IMP design".into()))?;
            let task = cfg.task_from_sources(spec_src, imp_src)?;
            let v = if cfg.mode == Mode::Cec { check_cec(&task)?.verdict } else { check_sec(&task)? };
            Ok((v, task.mapping))
        }
    }
}

fn read_sources(cfg: &TaskConfig, dir: &Path) -> Result<(String, Option<String>), CliError> {
    let spec = cfg.spec.read(dir)?;
    let imp = match (&cfg.imp, cfg.mode) {
        (Some(i), Mode::Cec | Mode::Sec) => Some(i.read(dir)?),
        _ => None,
    };
    Ok((spec, imp))
}

fn task_name(a: &TaskArgs) -> String {
    a.config.as_ref().or(a.spec.as_ref()).map(|p| p.display().to_string()).unwrap_or_default()
}

fn cmd_check(a: CheckArgs) -> Result<i32, CliError> {
    let (cfg, dir) = load_task_config(&a.task)?;
    let (spec_src, imp_src) = read_sources(&cfg, &dir)?;
    if let Some(out) = &a.dump_cnf {
        dump_cnf(&cfg, &spec_src, imp_src.as_deref(), out)?;
    }
    let (v, mapping) = run_config(&cfg, &spec_src, imp_src.as_deref())?;
    let mut rep = Report::new(&task_name(&a.task), mode_name(cfg.mode), &v, &mapping, cfg.engine.budget());
    if v.status == Status::NotEquivalent {
        if let Some(t) = &v.trace {
            let path = match (&a.trace, &cfg.report.trace_path) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => dir.join(p),
                (None, None) => dir.join("cex.trace"),
            };
            std::fs::write(&path, t.to_text()).map_err(io_err(&path))?;
            rep.trace_path = Some(path.display().to_string());
        }
    }
    let json = match a.format.as_deref() {
        Some("json") => true,
        Some("text") => false,
        Some(f) => return Err(CliError::Usage(format!("unknown report format {f}"))),
        None => cfg.report.format == ReportFormat::Json,
    };
    let report_path = a.report.clone().or_else(|| cfg.report.path.as_ref().map(|p| dir.join(p)));
    if let Some(p) = &report_path {
        rep.write(p, json)?;
    }
    print!("{}", rep.to_text());
    Ok(v.status.exit_code())
}

/// Writes `bmc_<k>.cnf` for k = 0..=bmc_depth.
fn dump_cnf(cfg: &TaskConfig, spec_src: &str, imp_src: Option<&str>, out: &Path) -> Result<(), CliError> {
    let imp_src = imp_src.ok_or_else(|| CliError::Usage("--dump-cnf needs a SPEC/IMP pair".into()))?;
    let task = cfg.task_from_sources(spec_src, imp_src)?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    for k in 0..=cfg.engine.bmc_depth {
        let path = out.join(format!("bmc_{k}.cnf"));
        std::fs::write(&path, bmc_cnf(&task, k)?.to_dimacs()).map_err(io_err(&path))?;
    }
    Ok(())
}

fn xmode(s: &str) -> Result<XMode, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn cmd_parse(a: ParseArgs) -> Result<i32, CliError> {
    let mods = frontend::parse_file(&a.file)?;
    let top = match &a.top {
        Some(t) => t.clone(),
        None => mods.last().map(|m| m.name.clone()).ok_or_else(|| CliError::Usage("no modules".into()))?,
    };
    if a.print {
        for m in &mods {
            println!("{m}");
        }
    }
    let params: std::collections::BTreeMap<String, u64> = a.params.into_iter().collect();
    let xpolicy = XPolicy::uniform(a.xpolicy.as_deref().map(xmode).transpose()?.unwrap_or_default());
    let nl = frontend::elaborate(&mods, &top, &ElabOptions { params: params.clone(), xpolicy, allow_undriven: a.allow_undriven })?;
    println!(
        "{top}: {} input bits, {} output bits, {} registers, {} and gates",
        nl.inputs.len(),
        nl.outputs.len(),
        nl.registers.len(),
        nl.num_ands()
    );
    let xs = frontend::list_x_sources(&mods, &top, &params)?;
    println!("{} X sources", xs.len());
    for x in &xs {
        println!("  {:?} {} ({} bits) at {}:{}", x.kind, x.name, x.bits, x.line, x.col);
    }
    Ok(0)
}

fn cmd_xcheck(a: XcheckArgs) -> Result<i32, CliError> {
    let (mut cfg, dir) = match (&a.config, &a.design) {
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            (TaskConfig::parse(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        (None, Some(d)) => {
            let mut c = TaskConfig::default();
            c.spec.file = absolute(d);
            (c, PathBuf::new())
        }
        _ => return Err(CliError::Usage("give exactly one of --config and --design".into())),
    };
    cfg.mode = Mode::Xcheck;
    if a.top.is_some() {
        cfg.spec.top = a.top.clone();
    }
    if let Some(m) = &a.mode {
        cfg.xcheck.mode = m.clone();
    }
    if let Some(p) = &a.policy {
        cfg.xcheck.policy = p.clone();
    }
    if !a.constraints.is_empty() {
        cfg.constraints = a.constraints.clone();
    }
    cfg.spec.params.extend(a.params.iter().cloned());
    cfg.spec.allow_undriven |= a.allow_undriven;
    let src = cfg.spec.read(&dir)?;
    let (mods, top) = cfg.spec.modules(&src)?;
    let opts = cfg.xcheck_options()?;
    let r = check_x(&mods, &top, &opts)?;
    let (pa, pb) = r.policies;
    println!(
        "{} ({} sources, mode {}, policies {:?}/{:?})",
        if r.clean { "CLEAN".to_string() } else { format!("X LEAK: {}", r.verdict.summary()) },
        r.sources.len(),
        r.mode,
        pa.regs,
        pb.regs
    );
    for c in &r.culprits {
        println!("  culprit {:?} {} at {}:{}", c.kind, c.name, c.line, c.col);
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    if let (Some(t), false) = (&r.verdict.trace, r.clean) {
        let path = a.trace.clone().unwrap_or_else(|| dir.join("x.trace"));
        std::fs::write(&path, t.to_text()).map_err(io_err(&path))?;
        println!("  trace written to {}", path.display());
    }
    Ok(if r.clean { 0 } else { r.verdict.status.exit_code() })
}

fn run_scenario(s: &Scenario) -> Result<Verdict, CliError> {
    let imp = (!s.imp.is_empty()).then_some(s.imp.as_str());
    Ok(run_config(&s.config, &s.spec, imp)?.0)
}

fn cmd_bench(a: BenchArgs) -> Result<i32, CliError> {
    let kind: Kind = a.kind.parse().map_err(CliError::Usage)?;
    let d = kind.default_size();
    let size = Size { width: a.width.unwrap_or(d.width), depth: a.depth.unwrap_or(d.depth) };
    let mut reports = Vec::new();
    let nested = a.count > 1 || a.all_variants;
    for seed in a.seed..a.seed + a.count {
        let all = bench::variants(kind, seed, size)?;
        let picked: Vec<Scenario> = match (&a.variant, a.all_variants) {
            (_, true) => all,
            (Some(v), false) => {
                let s = all.into_iter().find(|s| s.variant == *v);
                vec![s.ok_or_else(|| CliError::Usage(format!("{kind} has no variant {v}")))?]
            }
            (None, false) => all.into_iter().take(1).collect(),
        };
        for s in picked {
            let name = format!("{}_{}_{}", kind.name(), seed, s.variant);
            let dir = if nested { a.out.join(&name) } else { a.out.clone() };
            s.write(&dir)?;
            print!("{name}: expected {}{}", s.expected, if s.certified { " (oracle certified)" } else { "" });
            if a.run {
                let v = run_scenario(&s)?;
                let mode = mode_name(s.config.mode);
                let rep = Report::new(&name, mode, &v, &Mapping::default(), s.config.engine.budget());
                rep.write(&dir.join("report.json"), true)?;
                print!(", got {}", v.summary());
                reports.push(rep);
            }
            println!(" -> {}", dir.display());
        }
    }
    if a.run {
        let p = a.out.join("summary.csv");
        std::fs::write(&p, to_csv(&reports)?).map_err(io_err(&p))?;
    }
    Ok(0)
}

fn print_mapping(m: &Mapping) {
    for (s, i) in &m.inputs {
        println!("input    {s} = {i}");
    }
    for o in &m.outputs {
        println!("output   {} = {} latency {},{}", o.spec, o.imp, o.latency.0, o.latency.1);
    }
    for r in &m.registers {
        let why = match &r.dropped {
            Some(d) => format!(" ({d:?})"),
            None => String::new(),
        };
        println!("register {} = {} {}{why}", r.spec, r.imp, r.tag);
    }
    if let Some(q) = &m.qualifier {
        println!("qualifier {q}");
    }
    for n in &m.unmatched_spec {
        println!("unmatched spec {n}");
    }
    for n in &m.unmatched_imp {
        println!("unmatched imp {n}");
    }
}

fn load_task(a: &TaskArgs) -> Result<(TaskConfig, Task), CliError> {
    let (cfg, dir) = load_task_config(a)?;
    if cfg.mode == Mode::Xcheck {
        return Err(CliError::Usage("this subcommand needs a SPEC/IMP task".into()));
    }
    let t = cfg.task(&dir)?;
    Ok((cfg, t))
}

fn cmd_map(a: MapArgs) -> Result<i32, CliError> {
    let (_, task) = load_task(&a.task)?;
    let m = if a.refine { refine_mapping(&task)? } else { task.mapping.clone() };
    print_mapping(&m);
    Ok(0)
}

fn cmd_replay(a: ReplayArgs) -> Result<i32, CliError> {
    let (_, task) = load_task(&a.task)?;
    let text = std::fs::read_to_string(&a.trace).map_err(io_err(&a.trace))?;
    let trace = Trace::parse(&text)?;
    let r = replay(&task.spec, &task.imp, &task.mapping, &trace)?;
    match &r.first_mismatch {
        Some((c, o)) => {
            println!("MISMATCH {o} at cycle {c}");
            Ok(1)
        }
        None => {
            println!("no mismatch in {} cycles", trace.len());
            Ok(0)
        }
    }
}
