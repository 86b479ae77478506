//! Batch command-line front end: system ingestion from JSON files,
//! analysis/synthesis/simulation commands, and CSV/JSON emission of curve,
//! trajectory, and gain data for external plotting tools.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use epskit::{
    alpha_sweep, containment_stats, ellipsoid_boundary_points, eps_alpha_norm, eps_norm,
    gen_disturbance, simulate, simulate_greedy, solve_p_alpha, spectral_radius, synth_observer,
    synth_output_feedback, synth_state_feedback, AlphaCurve, DisturbanceKind, DisturbanceSpec,
    EllipsoidCert, LtiSystem, OutputFeedbackNormParts, SynthesisPlant, SynthesisResult,
    DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL,
};

use epsctl::report::RunReport;
use epsctl::systemfile::{
    lti_to_raw, matrix_to_rows, parse_raw, parse_system_file, ParsedSystem, RawSystemFile,
    SystemFile,
};
use epsctl::{error_name, exit_code_for, fmt_f64, reference};

const VERSION_WITH_RNG: &str = concat!(env!("CARGO_PKG_VERSION"), " (rng: chacha8)");

#[derive(Parser)]
#[command(
    name = "epsctl",
    version = VERSION_WITH_RNG,
    about = "Invariant-ellipsoid analysis and eps-optimal synthesis for discrete-time systems under bounded disturbances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute eps(alpha)- or eps-norms of a stable LTI system; optionally
    /// export an alpha sweep as CSV.
    Analyze(AnalyzeArgs),
    /// Synthesize eps-optimal state-feedback, observer, or output-feedback
    /// gains; optionally export gains and the closed loop as JSON.
    Synth(SynthArgs),
    /// Simulate trajectories under bounded disturbances and check them
    /// against the invariant-ellipsoid certificate.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// System file (kind must be "lti")
    file: PathBuf,
    /// Evaluate the eps(alpha)-norm at this fixed alpha
    #[arg(long, conflicts_with = "optimize")]
    alpha: Option<f64>,
    /// Minimize over alpha (the default when neither --alpha nor --sweep is given)
    #[arg(long)]
    optimize: bool,
    /// Sweep alphas "lo:hi:points" and write a CSV curve
    #[arg(long, value_name = "LO:HI:POINTS")]
    sweep: Option<String>,
    /// Grid density for --optimize
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Golden-section bracket width on alpha for --optimize
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
    refine_tol: f64,
    /// Output path for the sweep CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the run report as JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// System file (kind must match --mode)
    file: PathBuf,
    /// Synthesis mode
    #[arg(long, value_parser = ["state-feedback", "observer", "output-feedback"])]
    mode: String,
    /// Synthesize at this fixed alpha
    #[arg(long, conflicts_with = "optimize")]
    alpha: Option<f64>,
    /// Minimize the objective over alpha (the default when --alpha is absent)
    #[arg(long)]
    optimize: bool,
    /// Grid density for --optimize
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Golden-section bracket width on alpha for --optimize
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
    refine_tol: f64,
    /// Write gains, Riccati solutions, and the closed loop to this JSON file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Show the shipped literature controller next to the computed one
    #[arg(long)]
    compare_reference: bool,
    /// Emit the run report as JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// System file ("lti" kind) or a synth output JSON (its closed loop is used)
    file: PathBuf,
    /// Steps per run
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Disturbance kind (greedy is deterministic and ignores --runs/--seed)
    #[arg(long, default_value = "ball", value_parser = ["extreme", "ball", "constant", "greedy"])]
    dist: String,
    /// Base seed; run r uses seed + r
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of Monte Carlo runs
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Certificate parameter (falls back to the alpha stored in the file)
    #[arg(long)]
    alpha: Option<f64>,
    /// Output prefix; writes <out>.traj.csv (first run) and <out>.ellipse.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Projection plane for the ellipse CSV, as "i,j"
    #[arg(long, default_value = "0,1")]
    plane: String,
    /// Points on the ellipse boundary
    #[arg(long, default_value_t = 360)]
    ellipse_points: usize,
    /// Exit with code 5 if any state leaves the certified ellipsoid
    #[arg(long)]
    strict: bool,
    /// Emit the run report as JSON instead of text
    #[arg(long)]
    json: bool,
}

/// A command failure carrying the exit-code contract (2 parse, 3
/// structural/stability, 4 solver, 5 containment violation).
struct Failure {
    code: u8,
    name: String,
    message: String,
}

impl Failure {
    fn parse(msg: impl Into<String>) -> Self {
        Failure { code: 2, name: "ParseError".into(), message: msg.into() }
    }

    fn structural(name: &str, msg: impl Into<String>) -> Self {
        Failure { code: 3, name: name.into(), message: msg.into() }
    }

    fn violation(msg: impl Into<String>) -> Self {
        Failure { code: 5, name: "ContainmentViolation".into(), message: msg.into() }
    }
}

impl From<epskit::Error> for Failure {
    fn from(e: epskit::Error) -> Self {
        Failure {
            code: exit_code_for(&e) as u8,
            name: error_name(&e).into(),
            message: e.to_string(),
        }
    }
}

impl From<epsctl::systemfile::ParseError> for Failure {
    fn from(e: epsctl::systemfile::ParseError) -> Self {
        Failure::parse(e.0)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.name, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_input(path: &Path) -> Result<(String, Vec<u8>), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {}", path.display(), e)))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::parse(format!("{} is not valid UTF-8", path.display())))?;
    Ok((text, bytes))
}

/// Writes a file atomically (write to a temporary sibling, then rename).
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| Failure::parse(format!("cannot write {}: {}", tmp.display(), e)))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| Failure::parse(format!("cannot rename to {}: {}", path.display(), e)))?;
    Ok(())
}

fn emit(report: &RunReport, json: bool, human: &str) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    } else {
        println!("{}", human);
    }
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<String> = (0..m.ncols()).map(|j| format!("{:.7}", m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn curve_csv(curve: &AlphaCurve) -> String {
    let mut out = String::from("alpha,eps_alpha_norm,feasible\n");
    for pt in &curve.points {
        match pt.value {
            Some(v) => {
                out.push_str(&format!("{},{},true\n", fmt_f64(pt.alpha), fmt_f64(v)));
            }
            None => {
                out.push_str(&format!("{},,false\n", fmt_f64(pt.alpha)));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let (text, bytes) = read_input(&args.file)?;
    let file = parse_system_file(&text)?;
    let system = match file.system {
        ParsedSystem::Lti(s) => s,
        other => {
            return Err(Failure::structural(
                "WrongKind",
                format!("analyze needs kind \"lti\", got \"{}\"", other.kind_name()),
            ));
        }
    };

    let command = format!("analyze {}", args.file.display());
    let mut report = RunReport::new(command, &bytes, None);
    let mut human = String::new();
    let mut results = serde_json::Map::new();

    if let Some(spec) = &args.sweep {
        let (lo, hi, points) = parse_sweep_spec(spec)?;
        let curve = alpha_sweep(|a| eps_alpha_norm(&system, a).ok(), lo, hi, points)?;
        let csv = curve_csv(&curve);
        let feasible = curve.points.iter().filter(|p| p.value.is_some()).count();
        match &args.out {
            Some(path) => {
                write_atomic(path, csv.as_bytes())?;
                human.push_str(&format!(
                    "sweep: {} points in [{}, {}], {} feasible -> {}\n",
                    points,
                    lo,
                    hi,
                    feasible,
                    path.display()
                ));
                results.insert("sweep_csv".into(), json!(path.display().to_string()));
            }
            None => human.push_str(&csv),
        }
        results.insert("sweep_points".into(), json!(points));
        results.insert("sweep_feasible".into(), json!(feasible));
    }

    if let Some(alpha) = args.alpha {
        let value = eps_alpha_norm(&system, alpha)?;
        human.push_str(&format!("eps({})-norm = {:.9}\n", alpha, value));
        results.insert("alpha".into(), json!(alpha));
        results.insert("eps_alpha_norm".into(), json!(value));
    } else if args.optimize || args.sweep.is_none() {
        let res = eps_norm(&system, args.grid_points, args.refine_tol)?;
        human.push_str(&format!(
            "eps-norm = {:.9} at alpha* = {:.9} (boundary_minimum: {})\n",
            res.value, res.alpha_star, res.boundary_minimum
        ));
        results.insert("eps_norm".into(), json!(res.value));
        results.insert("alpha_star".into(), json!(res.alpha_star));
        results.insert("boundary_minimum".into(), json!(res.boundary_minimum));
    }

    report.results = serde_json::Value::Object(results);
    report.duration_ms = started.elapsed().as_secs_f64() * 1e3;
    emit(&report, args.json, human.trim_end());
    Ok(())
}

fn parse_sweep_spec(spec: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::parse(format!("--sweep expects LO:HI:POINTS, got {:?}", spec)));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Failure::parse("bad sweep LO"))?;
    let hi: f64 = parts[1].parse().map_err(|_| Failure::parse("bad sweep HI"))?;
    let points: usize = parts[2].parse().map_err(|_| Failure::parse("bad sweep POINTS"))?;
    Ok((lo, hi, points))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let (text, bytes) = read_input(&args.file)?;
    let file = parse_system_file(&text)?;

    let plant = match (args.mode.as_str(), file.system) {
        ("state-feedback", ParsedSystem::StateFeedback(p)) => SynthesisPlant::StateFeedback(p),
        ("observer", ParsedSystem::Filter(p)) => SynthesisPlant::Observer(p),
        ("output-feedback", ParsedSystem::OutputFeedback(p)) => SynthesisPlant::OutputFeedback(p),
        (mode, system) => {
            return Err(Failure::structural(
                "WrongKind",
                format!("mode {} does not match file kind \"{}\"", mode, system.kind_name()),
            ));
        }
    };

    let optimized = args.alpha.is_none();
    let (result, parts, boundary) = match args.alpha {
        Some(alpha) => {
            let (result, parts) = synthesize_at(&plant, alpha)?;
            (result, parts, false)
        }
        None => {
            let opt = epskit::optimize_synthesis(&plant, args.grid_points, args.refine_tol)?;
            let alpha_star = opt.result.alpha;
            let parts = match &plant {
                SynthesisPlant::OutputFeedback(p) => Some(synth_output_feedback(p, alpha_star)?.1),
                _ => None,
            };
            (opt.result, parts, opt.boundary_minimum)
        }
    };

    let command = format!("synth {} --mode {}", args.file.display(), args.mode);
    let mut report = RunReport::new(command, &bytes, None);

    let mut human = String::new();
    human.push_str(&format!("mode: {}\n", args.mode));
    human.push_str(&format!(
        "alpha = {:.9}{}\n",
        result.alpha,
        if optimized {
            format!(" (optimized, boundary_minimum: {})", boundary)
        } else {
            String::new()
        }
    ));
    human.push_str(&format!("eps(alpha)-norm = {:.9}\n", result.eps_alpha_norm));
    if let Some(k) = &result.k {
        human.push_str(&format!("K = {}\n", fmt_matrix(k)));
    }
    if let Some(l) = &result.l {
        human.push_str(&format!("L = {}\n", fmt_matrix(l)));
    }
    human.push_str(&format!(
        "closed loop: {} states, spectral radius {:.9}\n",
        result.closed_loop.n(),
        spectral_radius(&result.closed_loop.a)?
    ));
    if args.compare_reference {
        human.push_str(&format!(
            "reference ({}):\n  K = {:?}\n  L = {:?}\n  eps-norm = {}  (computed here: {:.4})\n",
            reference::REFERENCE_LABEL,
            reference::REFERENCE_K,
            reference::REFERENCE_L,
            reference::REFERENCE_EPS_NORM,
            result.eps_alpha_norm
        ));
    }

    let out_doc = synth_output_doc(&args.mode, &result, &parts, boundary, optimized, &report);
    if let Some(path) = &args.out {
        write_atomic(path, serde_json::to_string_pretty(&out_doc).expect("serializes").as_bytes())?;
        human.push_str(&format!("wrote {}\n", path.display()));
    }

    report.results = out_doc;
    report.duration_ms = started.elapsed().as_secs_f64() * 1e3;
    emit(&report, args.json, human.trim_end());
    Ok(())
}

fn synthesize_at(
    plant: &SynthesisPlant,
    alpha: f64,
) -> Result<(SynthesisResult, Option<OutputFeedbackNormParts>), Failure> {
    match plant {
        SynthesisPlant::StateFeedback(p) => Ok((synth_state_feedback(p, alpha)?, None)),
        SynthesisPlant::Observer(p) => Ok((synth_observer(p, alpha)?, None)),
        SynthesisPlant::OutputFeedback(p) => {
            let (r, parts) = synth_output_feedback(p, alpha)?;
            Ok((r, Some(parts)))
        }
    }
}

fn synth_output_doc(
    mode: &str,
    result: &SynthesisResult,
    parts: &Option<OutputFeedbackNormParts>,
    boundary: bool,
    optimized: bool,
    report: &RunReport,
) -> serde_json::Value {
    let opt_matrix = |m: &Option<DMatrix<f64>>| -> serde_json::Value {
        match m {
            Some(m) => json!(matrix_to_rows(m)),
            None => serde_json::Value::Null,
        }
    };
    json!({
        "mode": mode,
        "alpha": result.alpha,
        "optimized": optimized,
        "boundary_minimum": boundary,
        "eps_alpha_norm": result.eps_alpha_norm,
        "K": opt_matrix(&result.k),
        "L": opt_matrix(&result.l),
        "P": opt_matrix(&result.p),
        "Q": opt_matrix(&result.q),
        "norm_parts": parts.map(|p| json!({
            "term_q": p.term_q,
            "term_kp": p.term_kp,
            "total": p.total,
        })),
        "closed_loop": lti_to_raw(&result.closed_loop, Some(result.alpha)),
        "input_digest": report.input_digest,
        "version": report.version,
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let (text, bytes) = read_input(&args.file)?;
    let (system, file_alpha) = resolve_simulation_system(&text)?;
    let alpha = args
        .alpha
        .or(file_alpha)
        .ok_or_else(|| Failure::structural("MissingAlpha", "no --alpha given and none stored in the file"))?;

    if args.steps == 0 {
        return Err(Failure::parse("--steps must be positive"));
    }
    let kind = match args.dist.as_str() {
        "extreme" => DisturbanceKind::ExtremeSwitching,
        "ball" => DisturbanceKind::UniformBall,
        "constant" => DisturbanceKind::Constant,
        "greedy" => DisturbanceKind::WorstCaseGreedy,
        other => return Err(Failure::parse(format!("unknown disturbance kind {:?}", other))),
    };

    let cert = solve_p_alpha(&system.a, &system.b, alpha)?;
    let x0 = DVector::zeros(system.n());

    let runs = if kind == DisturbanceKind::WorstCaseGreedy { 1 } else { args.runs.max(1) };
    let run_outcomes = run_simulations(&system, &cert, kind, args.seed, runs, args.steps, &x0)?;

    let mut max_quadratic = 0.0f64;
    let mut violations = 0usize;
    for (stats, _) in &run_outcomes {
        max_quadratic = max_quadratic.max(stats.max_quadratic);
        violations += stats.violations;
    }

    let command = format!("simulate {} --dist {}", args.file.display(), args.dist);
    let mut report = RunReport::new(command, &bytes, Some(args.seed));
    let mut human = String::new();
    let mut results = serde_json::Map::new();
    results.insert("alpha".into(), json!(alpha));
    results.insert("runs".into(), json!(runs));
    results.insert("steps".into(), json!(args.steps));
    results.insert("max_quadratic".into(), json!(max_quadratic));
    results.insert("violations".into(), json!(violations));

    if let Some(prefix) = &args.out {
        let traj_path = path_with_suffix(prefix, ".traj.csv");
        write_atomic(&traj_path, run_outcomes[0].1.as_bytes())?;
        human.push_str(&format!("wrote {}\n", traj_path.display()));
        results.insert("traj_csv".into(), json!(traj_path.display().to_string()));

        if system.n() >= 2 {
            let plane = parse_plane_spec(&args.plane)?;
            let ellipse = ellipsoid_boundary_points(&cert, plane, args.ellipse_points.max(3))?;
            let mut csv = String::from("px,py\n");
            for p in &ellipse {
                csv.push_str(&format!("{},{}\n", fmt_f64(p[0]), fmt_f64(p[1])));
            }
            let ellipse_path = path_with_suffix(prefix, ".ellipse.csv");
            write_atomic(&ellipse_path, csv.as_bytes())?;
            human.push_str(&format!("wrote {}\n", ellipse_path.display()));
            results.insert("ellipse_csv".into(), json!(ellipse_path.display().to_string()));
        }
    }

    human.push_str(&format!(
        "containment: max_quadratic = {:.9}, violations = {} (runs = {}, steps = {})",
        max_quadratic, violations, runs, args.steps
    ));

    report.results = serde_json::Value::Object(results);
    report.duration_ms = started.elapsed().as_secs_f64() * 1e3;
    emit(&report, args.json, &human);

    if args.strict && violations > 0 {
        return Err(Failure::violation(format!(
            "{} states left the certified ellipsoid (max quadratic {})",
            violations, max_quadratic
        )));
    }
    Ok(())
}

fn parse_plane_spec(spec: &str) -> Result<(usize, usize), Failure> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::parse(format!("--plane expects \"i,j\", got {:?}", spec)));
    }
    let i = parts[0].trim().parse().map_err(|_| Failure::parse("bad plane index"))?;
    let j = parts[1].trim().parse().map_err(|_| Failure::parse("bad plane index"))?;
    Ok((i, j))
}

fn path_with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Accepts either a plain "lti" system file or a synth output document,
/// whose embedded closed loop (with its alpha) is simulated.
fn resolve_simulation_system(text: &str) -> Result<(LtiSystem, Option<f64>), Failure> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Failure::parse(format!("invalid JSON: {}", e)))?;
    let raw: RawSystemFile = if let Some(cl) = value.get("closed_loop") {
        serde_json::from_value(cl.clone())
            .map_err(|e| Failure::parse(format!("bad closed_loop block: {}", e)))?
    } else {
        serde_json::from_value(value).map_err(|e| Failure::parse(format!("invalid system file: {}", e)))?
    };
    let file: SystemFile = parse_raw(&raw)?;
    match file.system {
        ParsedSystem::Lti(s) => Ok((s, file.alpha)),
        other => Err(Failure::structural(
            "WrongKind",
            format!("simulate needs an LTI realization, got kind \"{}\"", other.kind_name()),
        )),
    }
}

/// Trajectory CSV: header `k,x1..xn,z1..zp,|w|`, one row per step.
fn trajectory_csv(traj: &epskit::Trajectory) -> String {
    let n = traj.states[0].len();
    let p = traj.outputs.first().map_or(0, |y| y.len());
    let mut header = String::from("k");
    for i in 1..=n {
        header.push_str(&format!(",x{}", i));
    }
    for i in 1..=p {
        header.push_str(&format!(",z{}", i));
    }
    header.push_str(",|w|\n");

    let mut out = header;
    for k in 0..traj.outputs.len() {
        out.push_str(&k.to_string());
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt_f64(traj.states[k][i]));
        }
        for i in 0..p {
            out.push(',');
            out.push_str(&fmt_f64(traj.outputs[k][i]));
        }
        out.push(',');
        out.push_str(&fmt_f64(traj.disturbances[k].norm()));
        out.push('\n');
    }
    out
}

type RunOutcome = (epskit::ContainmentStats, String);

/// Runs the Monte Carlo batch, parallelized up to EPSCTL_THREADS (or the
/// machine's available parallelism). Results are merged in seed order, so
/// output is independent of scheduling.
fn run_simulations(
    system: &LtiSystem,
    cert: &EllipsoidCert,
    kind: DisturbanceKind,
    base_seed: u64,
    runs: usize,
    steps: usize,
    x0: &DVector<f64>,
) -> Result<Vec<RunOutcome>, Failure> {
    let threads = thread_cap().min(runs.max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<RunOutcome, epskit::Error>>>> =
        (0..runs).map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= runs {
                    break;
                }
                let outcome =
                    simulate_one(system, cert, kind, base_seed + idx as u64, steps, x0, idx == 0);
                *results[idx].lock().expect("no poisoned locks") = Some(outcome);
            });
        }
    });

    let mut out = Vec::with_capacity(runs);
    for slot in results {
        let outcome = slot.into_inner().expect("no poisoned locks").expect("every run executed");
        out.push(outcome?);
    }
    Ok(out)
}

fn simulate_one(
    system: &LtiSystem,
    cert: &EllipsoidCert,
    kind: DisturbanceKind,
    seed: u64,
    steps: usize,
    x0: &DVector<f64>,
    want_csv: bool,
) -> Result<RunOutcome, epskit::Error> {
    let traj = if kind == DisturbanceKind::WorstCaseGreedy {
        simulate_greedy(system, cert, steps, x0)?
    } else {
        let spec = DisturbanceSpec { kind, seed, steps, dim: system.m() };
        simulate(system, &gen_disturbance(&spec)?, x0)?
    };
    let stats = containment_stats(&traj, cert)?;
    let csv = if want_csv { trajectory_csv(&traj) } else { String::new() };
    Ok((stats, csv))
}

fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("EPSCTL_THREADS")
        && let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
