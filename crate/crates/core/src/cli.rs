//! The `onebit` command line.
//!
//! Exit codes: 0 on success, 2 on invalid arguments, 1 on runtime errors or
//! failed verifications. Output is buffered and only emitted once a command
//! has succeeded, so a failing command never writes to stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::estimators::{estimate, estimate_with_norm, ConstraintVariant};
use crate::format::fmt_sig;
use crate::harness::experiment::{aggregate_csv, aggregate_path, run_grid, trials_csv, ExperimentSpec};
use crate::harness::signal::{generate_signal_with, SignalClass};
use crate::harness::verify::{
    verify_concentration, verify_mean_identity, verify_oracle, ConcentrationConfig, OracleFamily,
};
use crate::io::{
    read_json, read_matrix, to_json, write_matrix, EstimateDocument, MeasurementDocument, SignalDocument,
};
use crate::sensing::{
    dithered_measure, flip_noise_measure, gaussian_ensemble, sign_measure, FlipProbability, MeasurementModel,
};
use crate::theory::{error_bound, lambda_closed_form};

const SEED_ENV: &str = "ONEBIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "onebit", version, about = "One-bit compressed sensing toolkit")]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random sparse signal.
    GenSignal(GenSignalArgs),
    /// Generate an i.i.d. Gaussian sensing matrix.
    GenMatrix(GenMatrixArgs),
    /// Take one-bit measurements of a signal.
    Sense(SenseArgs),
    /// Recover the signal direction (and optionally its norm) from measurements.
    Recover(RecoverArgs),
    /// Run a Monte Carlo experiment grid described by a JSON spec.
    Experiment(ExperimentArgs),
    /// Statistical and exhaustive checks of the estimator.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args)]
struct GenSignalArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    d: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    s: u64,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Reject nonzero entries smaller than this in magnitude.
    #[arg(long, conflicts_with = "equal_magnitude")]
    min_magnitude: Option<f64>,
    /// Draw every nonzero entry as +-1000.
    #[arg(long)]
    equal_magnitude: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenMatrixArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    d: u64,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Store entries in a CSV next to the output instead of inline.
    #[arg(long, requires = "output")]
    sidecar: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Sign,
    Flip,
    Dither,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "sign")]
    model: ModelKind,
    /// Flip probability; a comma-separated list gives one per measurement.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Dither scale R.
    #[arg(long = "R", visible_alias = "radius")]
    r: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<MeasurementModel, CliError> {
        match self.model {
            ModelKind::Sign => {
                self.reject_p("sign")?;
                self.reject_r("sign")?;
                Ok(MeasurementModel::NoiselessSign)
            }
            ModelKind::Flip => {
                self.reject_r("flip")?;
                let p = match self.p.as_slice() {
                    [] => return Err(usage("--model flip requires --p")),
                    [p] => FlipProbability::Uniform(*p),
                    ps => FlipProbability::PerMeasurement(ps.to_vec()),
                };
                Ok(MeasurementModel::SignFlip { p })
            }
            ModelKind::Dither => {
                self.reject_p("dither")?;
                let r = self.r.ok_or_else(|| usage("--model dither requires --R"))?;
                Ok(MeasurementModel::Dithered { r })
            }
        }
    }

    fn reject_p(&self, model: &str) -> Result<(), CliError> {
        if self.p.is_empty() {
            Ok(())
        } else {
            Err(usage(format!("--p does not apply to --model {model}")))
        }
    }

    fn reject_r(&self, model: &str) -> Result<(), CliError> {
        if self.r.is_none() {
            Ok(())
        } else {
            Err(usage(format!("--R does not apply to --model {model}")))
        }
    }
}

#[derive(Debug, Args)]
struct SenseArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Unit,
    Nonneg,
    Ternary,
    Norm,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value = "unit")]
    variant: Variant,
    /// Dither scale; defaults to the one recorded with the measurements.
    #[arg(long = "R", visible_alias = "radius")]
    r: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Master seed, used when the spec does not fix one.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Overrides the spec's output_path.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Check that (1/n) sum a_i y_i is within a tolerance of lambda x.
    Mean(MeanArgs),
    /// Distribution of the normalized sup-norm deviation over repetitions.
    Concentration(ConcentrationArgs),
    /// Tabulate the error bound over an (n, k, d) grid.
    Bounds(BoundsArgs),
    /// Compare the closed-form estimators with exhaustive enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct MeanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 200_000)]
    n: usize,
    #[arg(long, default_value_t = 0.03)]
    tolerance: f64,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ConcentrationArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 500)]
    d: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    repetitions: usize,
    /// Sparsity of the random signals (default min(d, 10)).
    #[arg(long)]
    s: Option<usize>,
    /// Centering correlation instead of the model's closed form.
    #[arg(long)]
    lambda: Option<f64>,
    /// Fail when the largest statistic exceeds this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Print one statistic per repetition as CSV instead of a summary.
    #[arg(long)]
    csv: bool,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::AssumptionViolation(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| usage(format!("no seed given: pass --seed or set {SEED_ENV}")))
}

/// What a successful command produces.
#[derive(Default)]
struct Output {
    stdout: String,
    stderr: String,
    files: Vec<(PathBuf, String)>,
}

impl Output {
    fn emit(&mut self, path: Option<&Path>, text: String) {
        match path {
            Some(p) => self.files.push((p.to_path_buf(), text)),
            None => self.stdout.push_str(&text),
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.into()).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(CliError::Runtime(e.to_string())),
        },
        None => dispatch(cli.command),
    };
    let result = result.and_then(|out| {
        for (path, text) in &out.files {
            fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stderr.write_all(out.stderr.as_bytes());
            0
        }
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(CliError::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<Output, CliError> {
    let mut out = Output::default();
    match command {
        Command::GenSignal(a) => {
            let seed = seed(a.seed)?;
            let class = if a.equal_magnitude {
                SignalClass::EqualMagnitude
            } else {
                SignalClass::Uniform {
                    min_magnitude: a.min_magnitude,
                }
            };
            let signal = generate_signal_with(a.d as usize, a.s as usize, seed, &class)?;
            out.emit(a.output.as_deref(), to_json(&SignalDocument::new(&signal, Some(seed)))?);
        }
        Command::GenMatrix(a) => {
            let m = gaussian_ensemble(a.n as usize, a.d as usize, seed(a.seed)?)?;
            match &a.output {
                Some(path) => write_matrix(&m, path, a.sidecar)?,
                None => out.emit(None, to_json(&crate::io::MatrixDocument::new(&m)?)?),
            }
        }
        Command::Sense(a) => {
            let model = a.model.model()?;
            let seed = seed(a.seed)?;
            let m = read_matrix(&a.matrix)?;
            let signal = read_json::<SignalDocument>(&a.signal)?.signal()?;
            let x = signal.vector();
            let y = match model {
                MeasurementModel::NoiselessSign => {
                    let mut y = sign_measure(&m, x)?;
                    y.seed = Some(seed);
                    y
                }
                MeasurementModel::SignFlip { p } => flip_noise_measure(&m, x, p, seed)?,
                MeasurementModel::Dithered { r } => dithered_measure(&m, x, r, seed)?,
            };
            for w in &y.warnings {
                out.stderr.push_str(&format!("warning: {w}\n"));
            }
            out.emit(a.output.as_deref(), to_json(&MeasurementDocument::new(&y, m.cols()))?);
        }
        Command::Recover(a) => {
            let m = read_matrix(&a.matrix)?;
            let doc: MeasurementDocument = read_json(&a.measurements)?;
            let y = doc.measurements()?;
            if doc.d != m.cols() {
                return Err(CliError::Runtime(format!(
                    "measurements were taken with d = {}, matrix has d = {}",
                    doc.d,
                    m.cols()
                )));
            }
            let k = a.k as usize;
            let (est, label) = match a.variant {
                Variant::Norm => {
                    let (b, recorded) = match (&y.dither, &y.model) {
                        (Some(b), MeasurementModel::Dithered { r }) => (b, *r),
                        _ => {
                            return Err(usage(
                                "--variant norm needs dithered measurements; the measurements file has no dither vector",
                            ))
                        }
                    };
                    (estimate_with_norm(&m, &y, b, a.r.unwrap_or(recorded), k)?, "norm")
                }
                v => {
                    if a.r.is_some() {
                        return Err(usage("--R only applies to --variant norm"));
                    }
                    let (variant, label) = match v {
                        Variant::Unit => (ConstraintVariant::UnitSparse(k), "unit"),
                        Variant::Nonneg => (ConstraintVariant::NonnegUnitSparse(k), "nonneg"),
                        _ => (ConstraintVariant::TernarySparse(k), "ternary"),
                    };
                    (estimate(&m, &y, variant)?, label)
                }
            };
            out.emit(a.output.as_deref(), to_json(&EstimateDocument::new(&est, label))?);
        }
        Command::Experiment(a) => {
            let text = fs::read_to_string(&a.spec)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", a.spec.display())))?;
            let mut spec: ExperimentSpec =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
            if spec.master_seed.is_none() {
                spec.master_seed = Some(seed(a.seed)?);
            }
            if let Some(o) = &a.output {
                spec.output_path = Some(o.to_string_lossy().into_owned());
            }
            spec.validate()?;
            // files are written below, only once the whole grid has succeeded
            let target = spec.output_path.take().map(PathBuf::from);
            let report = run_grid(&spec)?;
            for f in &report.failures {
                out.stderr.push_str(&format!(
                    "warning: trial d={} n={} trial={} failed: {}\n",
                    f.d, f.n, f.trial, f.message
                ));
            }
            let trials = trials_csv(&report.trials)?;
            match target {
                Some(path) => {
                    out.emit(Some(&aggregate_path(&path)), aggregate_csv(&report.aggregates)?);
                    out.emit(Some(&path), trials);
                }
                None => out.emit(None, trials),
            }
        }
        Command::Verify(v) => verify(v, &mut out)?,
    }
    Ok(out)
}

fn verify(command: VerifyCommand, out: &mut Output) -> Result<(), CliError> {
    match command {
        VerifyCommand::Mean(a) => {
            let model = a.model.model()?;
            let r = verify_mean_identity(&model, a.d, a.n, seed(a.seed)?, a.tolerance, None)?;
            let text = to_json(&r)?;
            if !r.passed {
                return Err(CliError::Runtime(format!("mean identity check failed\n{text}")));
            }
            out.emit(None, text);
        }
        VerifyCommand::Concentration(a) => {
            let mut cfg = ConcentrationConfig::new(a.model.model()?, a.d, a.n, a.repetitions, seed(a.seed)?);
            if let Some(s) = a.s {
                cfg.s = s;
            }
            cfg.lambda = a.lambda;
            cfg.threshold = a.threshold;
            let r = verify_concentration(&cfg)?;
            let text = if a.csv {
                r.to_csv()
            } else {
                format!(
                    "d={} n={} repetitions={} lambda={} max={} p95={}\n",
                    r.d,
                    r.n,
                    r.z.len(),
                    fmt_sig(r.lambda, 10),
                    fmt_sig(r.max, 6),
                    fmt_sig(r.p95, 6)
                )
            };
            if r.passed == Some(false) {
                return Err(CliError::Runtime(format!("concentration threshold exceeded\n{text}")));
            }
            out.emit(None, text);
        }
        VerifyCommand::Bounds(a) => {
            let lambda = lambda_closed_form(&a.model.model()?)?.lambda;
            let mut text = String::from("n,k,d,lambda,c,bound\n");
            for &n in &a.n {
                for &k in &a.k {
                    for &d in &a.d {
                        let b = error_bound(lambda, k, d, n, a.c)?;
                        text.push_str(&format!(
                            "{n},{k},{d},{},{},{}\n",
                            fmt_sig(b.lambda, 10),
                            fmt_sig(b.c, 6),
                            fmt_sig(b.bound, 6)
                        ));
                    }
                }
            }
            out.emit(None, text);
        }
        VerifyCommand::Oracle(a) => {
            let families = [OracleFamily::Unit, OracleFamily::Nonneg, OracleFamily::Ternary];
            let r = verify_oracle(a.instances, seed(a.seed)?, &families)?;
            let summary = format!(
                "checks={} mismatches={} max_value_gap={}\n",
                r.checks.len(),
                r.mismatches().count(),
                fmt_sig(r.max_value_gap, 3)
            );
            if !r.passed() {
                return Err(CliError::Runtime(format!("closed forms disagree with enumeration\n{summary}")));
            }
            out.emit(None, summary);
        }
    }
    Ok(())
}
