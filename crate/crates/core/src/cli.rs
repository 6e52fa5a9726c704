//! The `kelly` command line.
//!
//! Every subcommand writes one CSV or JSON payload, to stdout or to `--out`.
//! Exit codes: 0 success, 1 domain or parse error, 2 usage error. A nonzero
//! exit always comes with one diagnostic line on stderr.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::constraints::{
    kelly_feasible, sphere_constraint_boundary, support_function, write_boundary_csv, SupportSet,
};
use crate::distributions::{empirical_from_samples, from_spec, support_extremes, ModelSpec, SampleSet};
use crate::error::{KellyError, Result};
use crate::growth::feasible_interval;
use crate::ingest::{gbm_ticks, moment_matched_ticks, read_prices_csv, returns_from_prices, summary_stats};
use crate::optimizer::{merton_fraction, optimize_scalar, optimize_vector, theoretical_kelly, OptimizerConfig};
use crate::simulator::{mu_grid, run_comparison, sweep_kelly_vs_mu, write_sweep_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// What a command did: its exit code and any files it wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "kelly",
    version,
    about = "Log-optimal bet sizing from theoretical models and empirical data",
    args_override_self = true
)]
struct Cli {
    /// JSON object of flag values for the subcommand (keys are flag names);
    /// flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the payload here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal fraction for a sample file or a named model (JSON).
    Optimize(OptimizeArgs),
    /// Summarize the empirical distribution of a sample file (JSON).
    Fit(FitArgs),
    /// Test a fraction vector against a support set, or emit a sphere boundary (JSON or CSV).
    Constrain(ConstrainArgs),
    /// Theory-trusting vs data-trusting bettor on one shared future (JSON).
    Simulate(SimulateArgs),
    /// Empirical Kelly fraction of N(mu, sigma) samples across a grid of means (CSV).
    SweepMu(SweepArgs),
    /// Boundaries of the sphere constraint sets for several radii (CSV).
    SphereSets(SphereSetsArgs),
    /// Tick prices to return statistics, empirical optimum and Merton fraction (JSON).
    Ticks(TicksArgs),
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Box bound |K_i| <= cap.
    #[arg(long, default_value_t = 1.0)]
    cap: f64,
    /// Convergence tolerance on the fraction.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Tolerance on growth improvement.
    #[arg(long, default_value_t = 1e-12)]
    tol_g: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
}

impl SolverArgs {
    fn config(&self) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            cap: self.cap,
            tol_k: self.tol,
            tol_g: self.tol_g,
            max_iterations: self.max_iterations,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// CSV of samples, one per row.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    samples: Option<PathBuf>,
    /// Model as name:params, e.g. coin:0.75, toy:0.001,100, normal:4,1, pathological:0.5,100.
    #[arg(long)]
    spec: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    samples: PathBuf,
    /// Cap used to report the scalar feasible interval.
    #[arg(long, default_value_t = 1.0)]
    cap: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SetKind {
    Interval,
    Cube,
    Sphere,
    Atoms,
}

#[derive(Debug, Args)]
struct ConstrainArgs {
    #[arg(long = "set", value_enum)]
    set: SetKind,
    /// Interval lower end.
    #[arg(long, allow_negative_numbers = true)]
    min: Option<f64>,
    /// Interval upper end.
    #[arg(long, allow_negative_numbers = true)]
    max: Option<f64>,
    /// Cube or sphere center.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<f64>,
    /// Cube half-widths.
    #[arg(long, value_delimiter = ',')]
    half_widths: Vec<f64>,
    /// Sphere radius.
    #[arg(long)]
    r: Option<f64>,
    /// Sample CSV whose points form the atom hull.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Fraction vector to test.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    k: Vec<f64>,
    /// Emit the sphere constraint boundary polyline as CSV instead.
    #[arg(long)]
    boundary: bool,
    #[arg(long, default_value_t = 360)]
    n_points: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: String,
    /// Estimation sample count.
    #[arg(long)]
    m: usize,
    /// Number of future bets both bettors face.
    #[arg(long, default_value_t = 1000)]
    n_future: usize,
    #[arg(long, env = "KELLY_SEED", default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    m: usize,
    #[arg(long, env = "KELLY_SEED", default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SphereSetsArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.5, 0.5])]
    center: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.25, 2.0, 3.0, 5.0])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 360)]
    n_points: usize,
    /// Write one `sphere_r<radius>.csv` per radius here; otherwise one CSV with an `r` column goes to the output.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TicksArgs {
    /// CSV with a `timestamp,price` header.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    prices: Option<PathBuf>,
    /// Generate geometric Brownian ticks instead of reading a file.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    /// Per-tick drift; ignored when --target-ratio is given.
    #[arg(long, default_value_t = 1.628e-8, allow_negative_numbers = true)]
    mu_tick: f64,
    #[arg(long, default_value_t = 1.405e-4)]
    sigma_tick: f64,
    /// Tune the drift so the sample mu/sigma^2 equals this.
    #[arg(long, allow_negative_numbers = true)]
    target_ratio: Option<f64>,
    /// Tick count.
    #[arg(long, default_value_t = 110_000)]
    m: usize,
    #[arg(long, env = "KELLY_SEED", default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Runs the CLI on `args` (program name first).
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(&args) {
        Ok(a) => a,
        Err(e) => return fail(stderr, EXIT_DOMAIN, &e.to_string()),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return CommandOutcome { exit_code: EXIT_OK, files: vec![] };
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{}", e.render());
            return CommandOutcome { exit_code: code, files: vec![] };
        }
    };
    match execute(&cli) {
        Ok(output) => {
            let mut files = output.files;
            let written = match &cli.out {
                Some(path) => fs::write(path, &output.payload).map(|_| files.push(path.clone())),
                None => stdout.write_all(output.payload.as_bytes()),
            };
            match written {
                Ok(()) => CommandOutcome { exit_code: EXIT_OK, files },
                Err(e) => fail(stderr, EXIT_DOMAIN, &format!("io error: {e}")),
            }
        }
        Err(e) => fail(stderr, EXIT_DOMAIN, &e.to_string()),
    }
}

fn fail(stderr: &mut dyn Write, code: i32, msg: &str) -> CommandOutcome {
    let line = msg.replace('\n', " ");
    let _ = writeln!(stderr, "error: {line}");
    CommandOutcome { exit_code: code, files: vec![] }
}

/// Splices `--config` JSON values in as flags right after the subcommand
/// name, so explicit flags that follow override them.
fn expand_config(args: &[String]) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args.to_vec());
    };
    let (path, consumed) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match args.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Ok(args.to_vec()),
        },
    };
    let text = fs::read_to_string(&path).map_err(|e| KellyError::Io(format!("{path}: {e}")))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| KellyError::Parse { row: e.line(), message: e.to_string() })?;
    let Value::Object(map) = value else {
        return Err(KellyError::domain("config file must hold a JSON object"));
    };
    let mut flags = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(json_scalar).collect::<Result<_>>()?;
                flags.push(format!("{flag}={}", joined.join(",")));
            }
            other => flags.push(format!("{flag}={}", json_scalar(&other)?)),
        }
    }
    let mut rest: Vec<String> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + consumed..]);
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 1)
        .ok_or_else(|| KellyError::domain("--config needs a subcommand"))?;
    let mut out = rest[..=sub].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[sub + 1..]);
    Ok(out)
}

fn json_scalar(v: &Value) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(KellyError::domain(format!("unsupported config value {v}"))),
    }
}

struct Output {
    payload: String,
    files: Vec<PathBuf>,
}

impl Output {
    fn json<T: Serialize>(value: &T) -> Self {
        let mut payload = serde_json::to_string_pretty(value).expect("payload serializes");
        payload.push('\n');
        Output { payload, files: vec![] }
    }

    fn text(payload: String) -> Self {
        Output { payload, files: vec![] }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| KellyError::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Optimize(a) => optimize(a),
        Command::Fit(a) => fit(a),
        Command::Constrain(a) => constrain(a),
        Command::Simulate(a) => {
            let spec: ModelSpec = a.spec.parse()?;
            let report = run_comparison(&spec, a.m, a.n_future, a.seed, &a.solver.config()?)?;
            Ok(Output::json(&report))
        }
        Command::SweepMu(a) => {
            let grid = mu_grid(a.from, a.to, a.step)?;
            let rows = sweep_kelly_vs_mu(&grid, a.sigma, a.m, a.seed, &a.solver.config()?)?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows)?;
            Ok(Output::text(String::from_utf8(buf).expect("csv is utf-8")))
        }
        Command::SphereSets(a) => sphere_sets(a),
        Command::Ticks(a) => ticks(a),
    }
}

fn optimize(a: &OptimizeArgs) -> Result<Output> {
    let cfg = a.solver.config()?;
    let result = match (&a.samples, &a.spec) {
        (Some(path), _) => {
            let dist = empirical_from_samples(&SampleSet::read_csv(open(path)?)?)?;
            if dist.is_scalar() {
                optimize_scalar(&dist, &cfg)?
            } else {
                optimize_vector(&dist, &cfg)?
            }
        }
        (None, Some(spec)) => {
            let spec: ModelSpec = spec.parse()?;
            match spec {
                ModelSpec::NormalReturns { .. } => theoretical_kelly(&spec, &cfg)?,
                _ => optimize_scalar(&from_spec(&spec)?, &cfg)?,
            }
        }
        (None, None) => unreachable!("clap requires --samples or --spec"),
    };
    Ok(Output::json(&result))
}

fn fit(a: &FitArgs) -> Result<Output> {
    let samples = SampleSet::read_csv(open(&a.samples)?)?;
    let dist = empirical_from_samples(&samples)?;
    let (x_min, x_max) = support_extremes(&dist);
    let mut summary = json!({
        "m": samples.len(),
        "dim": dist.dim(),
        "atoms": dist.len(),
        "mean": dist.mean(),
        "x_min": x_min,
        "x_max": x_max,
    });
    if dist.is_scalar() {
        summary["feasible_interval"] = serde_json::to_value(feasible_interval(&dist, a.cap)?).expect("interval");
    }
    Ok(Output::json(&summary))
}

fn build_set(a: &ConstrainArgs) -> Result<SupportSet> {
    let need = |name: &str| KellyError::domain(format!("--set {:?} needs --{name}", a.set));
    match a.set {
        SetKind::Interval => SupportSet::interval(a.min.ok_or_else(|| need("min"))?, a.max.ok_or_else(|| need("max"))?),
        SetKind::Cube => {
            if a.center.is_empty() {
                return Err(need("center"));
            }
            SupportSet::hypercube(a.center.clone(), a.half_widths.clone())
        }
        SetKind::Sphere => {
            if a.center.is_empty() {
                return Err(need("center"));
            }
            SupportSet::hypersphere(a.center.clone(), a.r.ok_or_else(|| need("r"))?)
        }
        SetKind::Atoms => {
            let samples = SampleSet::read_csv(open(a.points.as_deref().ok_or_else(|| need("points"))?)?)?;
            SupportSet::atom_hull(samples.points().map(<[f64]>::to_vec).collect())
        }
    }
}

fn constrain(a: &ConstrainArgs) -> Result<Output> {
    let set = build_set(a)?;
    if a.boundary {
        let (SupportSet::Hypersphere { center, radius }, 2) = (&set, set.dim()) else {
            return Err(KellyError::domain("--boundary needs a 2-d --set sphere"));
        };
        let pts = sphere_constraint_boundary([center[0], center[1]], *radius, a.n_points)?;
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, &pts)?;
        return Ok(Output::text(String::from_utf8(buf).expect("csv is utf-8")));
    }
    if a.k.is_empty() {
        return Err(KellyError::domain("--k is required unless --boundary is given"));
    }
    let neg: Vec<f64> = a.k.iter().map(|v| -v).collect();
    let h = support_function(&set, &neg)?;
    let feasible = kelly_feasible(&set, &a.k)?;
    Ok(Output::json(&json!({
        "k": a.k,
        "h_of_minus_k": h,
        "feasible": feasible,
        "verdict": if feasible { "feasible" } else { "infeasible" },
    })))
}

fn sphere_sets(a: &SphereSetsArgs) -> Result<Output> {
    if a.center.len() != 2 {
        return Err(KellyError::DimensionMismatch { expected: 2, got: a.center.len() });
    }
    let x0 = [a.center[0], a.center[1]];
    let mut files = Vec::new();
    let mut combined = csv::Writer::from_writer(Vec::new());
    combined.write_record(["r", "theta", "k1", "k2"]).map_err(|e| KellyError::Io(e.to_string()))?;
    for &r in &a.radii {
        let pts = sphere_constraint_boundary(x0, r, a.n_points)?;
        if let Some(dir) = &a.out_dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("sphere_r{r}.csv"));
            write_boundary_csv(File::create(&path)?, &pts)?;
            files.push(path);
        } else {
            for p in &pts {
                combined
                    .write_record([r.to_string(), p.theta.to_string(), p.k[0].to_string(), p.k[1].to_string()])
                    .map_err(|e| KellyError::Io(e.to_string()))?;
            }
        }
    }
    if a.out_dir.is_some() {
        let listing: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
        let mut out = Output::json(&json!({ "files": listing }));
        out.files = files;
        return Ok(out);
    }
    let bytes = combined.into_inner().map_err(|e| KellyError::Io(e.to_string()))?;
    Ok(Output::text(String::from_utf8(bytes).expect("csv is utf-8")))
}

fn ticks(a: &TicksArgs) -> Result<Output> {
    let cfg = a.solver.config()?;
    let (series, drift) = match &a.prices {
        Some(path) => (read_prices_csv(open(path)?)?, None),
        None => match a.target_ratio {
            Some(target) => {
                let (s, mu) = moment_matched_ticks(a.s0, a.sigma_tick, a.m, a.seed, target)?;
                (s, Some(mu))
            }
            None => (gbm_ticks(a.s0, a.mu_tick, a.sigma_tick, a.m, a.seed)?, Some(a.mu_tick)),
        },
    };
    let returns = returns_from_prices(&series)?;
    let stats = summary_stats(&returns)?;
    let dist = empirical_from_samples(&SampleSet::scalar(returns)?)?;
    let opt = optimize_scalar(&dist, &cfg)?;
    let merton = if stats.sigma_hat > 0.0 { Some(merton_fraction(stats.mu_hat, stats.sigma_hat)?) } else { None };
    Ok(Output::json(&json!({
        "source": series.label,
        "ticks": series.len(),
        "drift": drift,
        "stats": stats,
        "k_star": opt.k(),
        "g_star": opt.g_star,
        "active_bound": opt.active_bound,
        "merton_fraction": merton,
    })))
}
