//! Command-line front end: `check-conditions`, `bounds` and `simulate`.
//!
//! Exit codes: 0 pass, 1 dominance failure (or an inconsistent implication
//! matrix), 2 configuration error, 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{
    check_constant_lr_bound, check_decreasing_lr_bound, compute_cn, predicted_rate, BoundInputs, BoundReport, ConstantCheck,
    DecreasingCheck, Horizon, RateKind,
};
use crate::conditions::{estimate_local_constants, implication_matrix, ImplicationMatrix, ImplicationStatus, LocalConstants};
use crate::experiment::{config_hash, parse_experiment, ConfigError, ExperimentFile};
use crate::montecarlo::{
    compare_to_bounds, concentration_from_runs, fit_rate_slope, simulate, stability_from_runs, write_rate_csv, write_results_csv,
    ComparisonSummary, MCResult, RateFit,
};
use crate::sgd::{run_trajectory, write_trajectory_csv, Schedule};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_DOMINANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sgdlab", version, about = "SGD stability and concentration experiments near non-isolated minima")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding the file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Validate and print the plan without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify local convexity conditions and check the implication diagram.
    CheckConditions,
    /// Evaluate the closed-form bounds (accepts an experiment file or bare bound inputs).
    Bounds,
    /// Run the Monte Carlo experiment and compare against the bounds.
    Simulate,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::error::Error> for CliError {
    fn from(e: crate::error::Error) -> Self {
        CliError::Config(e.into())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(plain_config_error("--config PATH is required")))?;
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Io(e.to_string()))?
    };
    pool.install(|| match cli.command {
        Command::CheckConditions => cmd_check_conditions(&text, cli),
        Command::Bounds => cmd_bounds(&text, cli),
        Command::Simulate => cmd_simulate(&text, cli),
    })
}

fn plain_config_error(m: &str) -> ConfigError {
    ConfigError {
        message: m.to_string(),
        line: None,
        column: None,
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "✓"
    } else {
        "✗"
    }
}

#[derive(Debug, Serialize)]
pub struct ConditionsOutput {
    pub matrix: ImplicationMatrix,
    pub local_constants: LocalConstants,
}

/// Runs every condition check for an experiment file.
pub fn check_conditions(file: &ExperimentFile, seed: Option<u64>) -> Result<ConditionsOutput, CliError> {
    let p = file.prepare(seed)?;
    let matrix = implication_matrix(&p.landscape, &p.spec, file.neighborhood.samples, p.sgd.seed)?;
    let local_constants = estimate_local_constants(&p.landscape, &p.spec, file.bounds.delta, file.bounds.samples, p.sgd.seed)?;
    Ok(ConditionsOutput { matrix, local_constants })
}

pub fn render_conditions(out: &ConditionsOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<7} {:<5} {:>14} {:>8}", "cond", "holds", "constant", "samples");
    for r in &out.matrix.reports {
        let c = r.best_constant.map_or("-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "{:<7} {:<5} {:>14} {:>8}", r.kind.to_string(), mark(r.holds), c, r.n_samples);
    }
    if let Some(h) = &out.matrix.hcprc {
        let ranks: Vec<String> = {
            let mut v: Vec<usize> = h.ranks.clone();
            v.sort_unstable();
            v.dedup();
            v.iter().map(|r| r.to_string()).collect()
        };
        let _ = writeln!(
            s,
            "{:<7} {:<5} {:>14} {:>8}",
            "HCPRC",
            mark(h.holds),
            format!("rank {} / {}", ranks.join(","), h.expected_codim),
            h.points.len()
        );
    }
    let _ = writeln!(s);
    for i in &out.matrix.implications {
        let status = match i.status {
            ImplicationStatus::Consistent => "consistent",
            ImplicationStatus::Inconsistent => "INCONSISTENT",
            ImplicationStatus::NotApplicable => "not applicable",
        };
        let _ = writeln!(s, "({}) {} => {}: {status}", i.label, i.from, i.to);
    }
    for (a, b) in &out.matrix.unconstrained {
        let _ = writeln!(s, "{a} vs {b}: no implication asserted");
    }
    if out.matrix.flat_basin_separation {
        let _ = writeln!(s, "WQC holds while PL* and QG* fail (flat basin)");
    }
    let c = &out.local_constants;
    let _ = writeln!(
        s,
        "\nL_r = {:.6} (x{} = {:.6} for bounds)  L_r+delta = {:.6}  sup|grad f| = {:.6}  C = {:.6}",
        c.lipschitz,
        c.safety_factor,
        c.lipschitz_for_bounds(),
        c.lipschitz_extended,
        c.grad_sup,
        c.c_patel
    );
    s
}

fn cmd_check_conditions(text: &str, cli: &Cli) -> Result<i32, CliError> {
    let file = parse_experiment(text)?;
    if cli.dry_run {
        println!(
            "plan: certify LRSI, PL*, QG*, *C, QC, WQC, NNS, HCPRC on N_{}(X) with {} samples each",
            file.neighborhood.radius, file.neighborhood.samples
        );
        return Ok(EXIT_PASS);
    }
    let out = check_conditions(&file, cli.seed)?;
    print!("{}", render_conditions(&out));
    if let Some(dir) = &cli.out {
        write_json(dir, "conditions.json", &out)?;
    }
    Ok(if out.matrix.consistent() { EXIT_PASS } else { EXIT_DOMINANCE })
}

#[derive(Debug, Serialize)]
pub struct BoundsOutput {
    pub inputs: BoundInputs,
    pub report: BoundReport,
    pub decreasing: Option<DecreasingCheck>,
    pub constant: Option<ConstantCheck>,
    /// Upper end of the `C_inf` enclosure for decreasing schedules.
    pub c_infinity: Option<f64>,
}

pub fn evaluate_bounds(inputs: &BoundInputs) -> Result<BoundsOutput, CliError> {
    let report = compute_cn(inputs)?;
    let (decreasing, constant, c_infinity) = match inputs.schedule {
        Schedule::Decreasing { .. } => (
            Some(check_decreasing_lr_bound(inputs)?),
            None,
            Some(compute_cn(&inputs.with_horizon(Horizon::Infinite))?.c_n),
        ),
        Schedule::Constant { .. } => match inputs.horizon {
            Horizon::Finite(_) => (None, Some(check_constant_lr_bound(inputs)?), None),
            Horizon::Infinite => (None, None, None),
        },
    };
    Ok(BoundsOutput {
        inputs: *inputs,
        report,
        decreasing,
        constant,
        c_infinity,
    })
}

pub fn render_bounds(b: &BoundsOutput) -> String {
    let i = &b.inputs;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "dist1 = {}  r = {}  L_r = {}  sigma_r = {}  I = {}  {}  N = {}",
        i.dist1, i.r, i.lipschitz, i.sigma_r, i.batch_size, i.schedule, i.horizon
    );
    let _ = writeln!(s, "C_N     = {:.10}", b.report.c_n);
    let _ = writeln!(s, "1 - C_N = {:.10}", b.report.stability_lower_bound);
    if b.report.vacuous {
        let _ = writeln!(s, "bound vacuous (C_N >= 1)");
    } else {
        let _ = writeln!(
            s,
            "stability guaranteed with probability >= {:.6}",
            b.report.stability_lower_bound
        );
    }
    if let Some(d) = &b.decreasing {
        let _ = writeln!(
            s,
            "decreasing-rate inequality: lhs = {:.10}  r^2 = {:.10}  margin = {:.10}  {}",
            d.lhs,
            i.r * i.r,
            d.margin,
            if d.holds { "holds" } else { "fails" }
        );
        let _ = writeln!(s, "max_a = {:.10}", d.max_a);
    }
    if let Some(c) = b.c_infinity {
        let _ = writeln!(s, "C_inf  <= {c:.10}");
    }
    if let Some(c) = &b.constant {
        let _ = writeln!(
            s,
            "constant-rate inequality: lhs = {:.10}  r^2 = {:.10}  margin = {:.10}  {}",
            c.lhs,
            i.r * i.r,
            c.margin,
            if c.holds { "holds" } else { "fails" }
        );
    }
    s
}

fn cmd_bounds(text: &str, cli: &Cli) -> Result<i32, CliError> {
    let is_experiment = serde_json::from_str::<serde_json::Value>(text)
        .map_err(ConfigError::from)?
        .get("landscape")
        .is_some();
    let inputs = if is_experiment {
        let file = parse_experiment(text)?;
        if cli.dry_run {
            println!("plan: evaluate C_N and the learning-rate inequalities for the experiment's SGD settings");
            return Ok(EXIT_PASS);
        }
        let p = file.prepare(cli.seed)?;
        file.bound_inputs(&p)?.0
    } else {
        let inputs: BoundInputs = serde_json::from_str(text).map_err(ConfigError::from)?;
        inputs.validate()?;
        if cli.dry_run {
            println!("plan: evaluate C_N and the learning-rate inequalities");
            return Ok(EXIT_PASS);
        }
        inputs
    };
    let out = evaluate_bounds(&inputs)?;
    print!("{}", render_bounds(&out));
    match &cli.out {
        Some(dir) => {
            write_json(dir, "bounds.json", &out)?;
        }
        None => println!("{}", serde_json::to_string(&out).expect("serializable")),
    }
    Ok(EXIT_PASS)
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub bound_inputs: BoundInputs,
    pub c_n: f64,
    pub stability_lower_bound: f64,
    pub vacuous: bool,
    pub local_constants: Option<LocalConstants>,
    pub stability: MCResult,
    pub concentration: Vec<MCResult>,
    pub rate_fit: Option<RateFit>,
    pub rate_fit_refused: Option<String>,
    /// `-beta` when the schedule's exponent lies in (1/2, 1).
    pub predicted_slope: Option<f64>,
    pub comparison: ComparisonSummary,
}

#[derive(Debug)]
pub struct SimulationOutcome {
    pub summary: SimulationSummary,
    pub files: Vec<PathBuf>,
}

impl SimulationOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.comparison.all_dominated() {
            EXIT_PASS
        } else {
            EXIT_DOMINANCE
        }
    }
}

fn preamble(hash: &str, seed: u64) -> String {
    format!("# sgdlab {VERSION} config_sha256={hash} seed={seed}\n")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| io_err(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(&path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Runs the full experiment described by `text` and writes its outputs to `out`.
pub fn simulate_to_dir(text: &str, seed: Option<u64>, out: &Path) -> Result<SimulationOutcome, CliError> {
    let file = parse_experiment(text)?;
    let hash = config_hash(text);
    let p = file.prepare(seed)?;
    let seed = p.sgd.seed;
    let (inputs, constants) = file.bound_inputs(&p)?;
    let exp = file.experiment_config(&p, inputs, &hash);
    exp.validate()?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    // probe writability before the long computation
    let (_, probe) = create(out, "summary.json")?;
    drop(probe);

    eprintln!("simulate: {} trajectories of N = {} on {}", exp.trials, p.sgd.horizon, p.landscape);
    let runs = simulate(&exp.sgd, exp.trials, &[])?;
    let stability = stability_from_runs(&runs, &inputs)?;
    let concentration = concentration_from_runs(&runs, &inputs, &exp.epsilon_grid)?;
    let report = compute_cn(&inputs)?;

    eprintln!("simulate: rate fit over horizons {:?}", file.montecarlo.rate_horizons);
    let (rate_fit, rate_fit_refused) = match fit_rate_slope(&p.sgd, file.montecarlo.rate_trials, &file.montecarlo.rate_horizons) {
        Ok(f) => (Some(f), None),
        Err(crate::error::Error::Refused(m)) => (None, Some(m)),
        Err(e) => return Err(e.into()),
    };
    let predicted_slope = p
        .sgd
        .schedule
        .beta()
        .and_then(|b| predicted_rate(RateKind::HcprcOrLrsi, b).ok())
        .map(|e| -e);

    let mut all = vec![stability.clone()];
    all.extend(concentration.iter().cloned());
    let comparison = compare_to_bounds(&all, seed, &hash);

    let pre = preamble(&hash, seed);
    let mut files = Vec::new();
    let (path, w) = create(out, "stability.csv")?;
    write_results_csv(std::slice::from_ref(&stability), &pre, w).map_err(|e| io_err(&path, e))?;
    files.push(path);
    let (path, w) = create(out, "concentration.csv")?;
    write_results_csv(&concentration, &pre, w).map_err(|e| io_err(&path, e))?;
    files.push(path);
    let (path, mut w) = create(out, "rate_fit.csv")?;
    match &rate_fit {
        Some(f) => write_rate_csv(f, &pre, w).map_err(|e| io_err(&path, e))?,
        None => {
            let note = rate_fit_refused.as_deref().unwrap_or("");
            write!(w, "{pre}# refused: {note}\nhorizon,mean_gap,stayed_fraction,slope,stderr\n")
                .and_then(|_| w.flush())
                .map_err(|e| io_err(&path, e))?;
        }
    }
    files.push(path);
    if file.output.trajectory_csv {
        let traj = run_trajectory(&p.sgd)?;
        let (path, mut w) = create(out, "trajectory.csv")?;
        w.write_all(pre.as_bytes()).map_err(|e| io_err(&path, e))?;
        write_trajectory_csv(&traj, w).map_err(|e| io_err(&path, e))?;
        files.push(path);
    }

    let summary = SimulationSummary {
        version: VERSION.to_string(),
        config_hash: hash,
        seed,
        bound_inputs: inputs,
        c_n: report.c_n,
        stability_lower_bound: report.stability_lower_bound,
        vacuous: report.vacuous,
        local_constants: constants,
        stability,
        concentration,
        rate_fit,
        rate_fit_refused,
        predicted_slope,
        comparison,
    };
    files.push(write_json(out, "summary.json", &summary)?);
    Ok(SimulationOutcome { summary, files })
}

fn cmd_simulate(text: &str, cli: &Cli) -> Result<i32, CliError> {
    let file = parse_experiment(text)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&file.output.dir));
    if cli.dry_run {
        let p = file.prepare(cli.seed)?;
        println!("plan: {} trajectories of N = {} on {}", file.montecarlo.trials, file.sgd.horizon, p.landscape);
        println!("      schedule {}, batch size {}, seed {}", file.schedule, file.sgd.batch_size, p.sgd.seed);
        println!("      epsilon grid {:?}", file.montecarlo.epsilon_grid);
        println!(
            "      rate fit: {} trials at horizons {:?}",
            file.montecarlo.rate_trials, file.montecarlo.rate_horizons
        );
        println!("      outputs in {}", out.display());
        return Ok(EXIT_PASS);
    }
    let outcome = simulate_to_dir(text, cli.seed, &out)?;
    let s = &outcome.summary;
    println!(
        "stability: empirical {:.4} [{:.4}, {:.4}] vs 1 - C_N = {:.4} -> {}",
        s.stability.empirical_p, s.stability.ci_low, s.stability.ci_high, s.stability_lower_bound, s.stability.dominated
    );
    for r in &s.concentration {
        println!(
            "{} eps={:e}: empirical {:.4} [{:.4}, {:.4}] bound {} -> {}",
            r.event,
            r.parameter.unwrap_or(f64::NAN),
            r.empirical_p,
            r.ci_low,
            r.ci_high,
            r.theoretical_bound.map_or("-".into(), |b| format!("{b:.4}")),
            r.dominated
        );
    }
    match (&s.rate_fit, &s.rate_fit_refused) {
        (Some(f), _) => println!(
            "rate fit: slope {:.4} +- {:.4} (predicted {})",
            f.slope,
            f.stderr,
            s.predicted_slope.map_or("-".into(), |v| format!("{v:.4}"))
        ),
        (None, Some(m)) => println!("rate fit refused: {m}"),
        _ => {}
    }
    println!(
        "summary: {} passed, {} failed, {} vacuous, {} without absolute bound",
        s.comparison.passed, s.comparison.failed, s.comparison.vacuous, s.comparison.not_applicable
    );
    for f in &s.comparison.failures {
        println!(
            "FAILED {} eps={:?}: reproduce with --seed {} (config sha256 {})",
            f.event, f.parameter, f.seed, f.config_hash
        );
    }
    Ok(outcome.exit_code())
}
