use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use suspension_core::dynamics::{leftmost_step, DynamicsError, Limits, OrbitState};
use suspension_core::point_process::{sample, Configuration, Side, StreamKey, Window};
use suspension_core::stats::{
    describe, run_experiment, ExperimentError, ExperimentReport, ExperimentSpec, Outcome, EXPERIMENTS,
};
use suspension_core::transforms::Transform;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_LIMITS: u8 = 3;

#[derive(Parser)]
#[command(name = "suspension", version, about = "Poisson suspensions and the leftmost-return map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Poisson configuration on a window and print it as JSON.
    Sample(SampleArgs),
    /// Iterate the suspension or the leftmost map and print the trajectory as CSV.
    Iterate(IterateArgs),
    /// Run one named experiment, or `list` the registry.
    Experiment(ExperimentArgs),
    /// Replay every experiment of a JSON run manifest.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Window `lo:hi`, read as the half-open interval (lo, hi].
    #[arg(long)]
    window: String,
    #[arg(long, value_enum, default_value_t = SideArg::Half)]
    side: SideArg,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Half,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapArg {
    /// `T_*`, one application of `T` to every point per row.
    Suspension,
    /// `T_*^κ`, one leftmost return per row.
    Leftmost,
}

#[derive(Args)]
struct CapArgs {
    #[arg(long, default_value_t = Limits::default().kappa_cap)]
    kappa_cap: u64,
    /// Largest window in expected points.
    #[arg(long, default_value_t = Limits::default().window_budget)]
    window_budget: f64,
}

impl CapArgs {
    fn limits(&self) -> Limits {
        Limits { kappa_cap: self.kappa_cap, window_budget: self.window_budget }
    }
}

#[derive(Args)]
struct IterateArgs {
    /// boole-signed, boole-unsigned, random-walk, translation:C or z2:A,B
    #[arg(long)]
    transform: String,
    #[arg(long, value_enum, default_value_t = MapArg::Leftmost)]
    map: MapArg,
    #[arg(long, default_value_t = 100)]
    steps: u64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// End of the initial window (0, hi].
    #[arg(long, default_value_t = 4.0)]
    window_hi: f64,
    /// Start from a configuration written by `sample` instead of a fresh draw.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    caps: CapArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Registered experiment name, or `list`.
    name: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Replicas (runs, for birkhoff).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa_cap: Option<u64>,
    #[arg(long)]
    window_budget: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Leftmost-map steps per run (birkhoff).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for one JSON report per entry.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the manifest's worker count.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    experiments: Vec<ExperimentSpec>,
}

/// A failed command: exit code and message for stderr.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn from_dynamics(e: DynamicsError) -> Failure {
    match e {
        DynamicsError::Censored { .. } | DynamicsError::WindowBudgetExceeded { .. } => {
            Failure(EXIT_LIMITS, format!("resource limit: {e}"))
        }
        DynamicsError::UnsupportedTransform(_) | DynamicsError::NotAnchored => usage(e.to_string()),
        DynamicsError::PointProcess(_) => usage(e.to_string()),
        e => Failure(EXIT_FAIL, e.to_string()),
    }
}

fn from_experiment(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::UnknownExperiment(_) | ExperimentError::InvalidParameter(_) => usage(e.to_string()),
        ExperimentError::Dynamics(d) => from_dynamics(d),
        ExperimentError::Stats(s) => Failure(EXIT_FAIL, s.to_string()),
    }
}

fn outcome_code(o: Outcome) -> u8 {
    match o {
        Outcome::Pass => EXIT_PASS,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Inconclusive => EXIT_LIMITS,
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn parse_window(s: &str, side: Side) -> Result<Window, Failure> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| usage(format!("window {s:?} is not lo:hi")))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| usage(format!("window bound {v:?} is not a number")));
    Window::new(num(lo)?, num(hi)?, side).map_err(|e| usage(format!("window {s:?}: {e}")))
}

fn cmd_sample(a: SampleArgs) -> Result<u8, Failure> {
    let side = match a.side {
        SideArg::Half => Side::HalfLine,
        SideArg::Full => Side::FullLine,
    };
    let window = parse_window(&a.window, side)?;
    let c = sample(a.lambda, window, &StreamKey::new(a.seed)).map_err(|e| usage(e.to_string()))?;
    let body = serde_json::to_string_pretty(&c).expect("configuration serializes") + "\n";
    emit(a.out.as_deref(), &body)?;
    Ok(EXIT_PASS)
}

fn initial_configuration(a: &IterateArgs) -> Result<Configuration, Failure> {
    match &a.input {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
        }
        None => {
            let w = Window::half_line(a.window_hi).map_err(|e| usage(e.to_string()))?;
            sample(a.lambda, w, &StreamKey::new(a.seed)).map_err(|e| usage(e.to_string()))
        }
    }
}

fn cmd_iterate(a: IterateArgs) -> Result<u8, Failure> {
    let t: Transform = a.transform.parse().map_err(|e| usage(format!("transform: {e}")))?;
    if !t.supports_leftmost() {
        return Err(usage(format!("{t} has no half-line leftmost structure; iterate needs a half-line transform")));
    }
    let limits = a.caps.limits();
    let c = initial_configuration(&a)?;
    let (_, mut c) = c.leftmost_of_process().map_err(|e| usage(e.to_string()))?;
    let mut csv = String::from("step,kappa,t1,window_hi,points_tracked\n");
    match a.map {
        MapArg::Leftmost => {
            for step in 1..=a.steps {
                let s = leftmost_step(&t, &c, &limits).map_err(|e| {
                    let Failure(code, msg) = from_dynamics(e);
                    Failure(code, format!("step {step}: {msg}"))
                })?;
                let _ = writeln!(csv, "{step},{},{},{},{}", s.kappa, s.leftmost, s.revealed_hi, s.tracked);
                c = s.config;
            }
        }
        MapArg::Suspension => {
            let mut orbit = OrbitState::new(t, c, None, &limits).map_err(from_dynamics)?;
            for step in 1..=a.steps {
                let t1 = orbit.advance().and_then(|_| orbit.certified_minimum()).map_err(|e| {
                    let Failure(code, msg) = from_dynamics(e);
                    Failure(code, format!("step {step}: {msg}"))
                })?;
                let _ = writeln!(csv, "{step},1,{t1},{},{}", orbit.window_hi(), orbit.images().len());
            }
        }
    }
    emit(a.out.as_deref(), &csv)?;
    Ok(EXIT_PASS)
}

fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<u8, Failure> {
    if a.name == "list" {
        for name in EXPERIMENTS {
            println!("{name:<22} {}", describe(name).unwrap_or_default());
        }
        return Ok(EXIT_PASS);
    }
    let seed = a.seed.ok_or_else(|| usage("--seed is required"))?;
    let mut spec = ExperimentSpec::new(&a.name, seed);
    spec.replicas = a.n;
    spec.workers = a.workers;
    if let Some(t) = a.transform {
        spec.transform = t;
    }
    if let Some(v) = a.lambda {
        spec.lambda = v;
    }
    if let Some(v) = a.kappa_cap {
        spec.kappa_cap = v;
    }
    if let Some(v) = a.window_budget {
        spec.window_budget = v;
    }
    if let Some(v) = a.alpha {
        spec.alpha = v;
    }
    if let Some(v) = a.steps {
        spec.birkhoff_steps = v;
    }
    let report = run_experiment(&spec).map_err(from_experiment)?;
    if let Some(p) = &a.out {
        emit(Some(p), &(report.to_json() + "\n"))?;
    }
    print!("{}", render(&report, a.format));
    Ok(outcome_code(report.outcome))
}

fn cmd_suite(a: SuiteArgs) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.manifest.display())))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.manifest.display())))?;
    for spec in &manifest.experiments {
        spec.validate().map_err(from_experiment)?;
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut worst = EXIT_PASS;
    for (i, spec) in manifest.experiments.iter().enumerate() {
        let mut spec = spec.clone();
        if a.workers.is_some() {
            spec.workers = a.workers;
        }
        let (code, line) = match run_experiment(&spec) {
            Ok(report) => {
                if let Some(dir) = &a.out_dir {
                    let path = dir.join(format!("{i:02}-{}.json", spec.name));
                    emit(Some(&path), &(report.to_json() + "\n"))?;
                }
                let code = outcome_code(report.outcome);
                (code, format!("{:?}  {} ms", report.outcome, report.wall_clock_ms))
            }
            Err(e) => {
                let Failure(code, msg) = from_experiment(e);
                (code, format!("error: {msg}"))
            }
        };
        println!("{i:>3}  {:<22} seed {:<6} {line}", spec.name, spec.seed);
        // limits outrank failures: an inconclusive run says nothing either way
        worst = match (worst, code) {
            (EXIT_LIMITS, _) | (_, EXIT_LIMITS) => EXIT_LIMITS,
            (w, c) => w.max(c),
        };
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Iterate(a) => cmd_iterate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Suite(a) => cmd_suite(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("suspension: {msg}");
            ExitCode::from(code)
        }
    }
}
