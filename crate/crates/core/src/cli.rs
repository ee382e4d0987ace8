//! Command-line front end.
//!
//! Every output starts with a self-description: CSV files carry `#` header
//! lines, JSON documents an envelope with the tool version, command, seed and
//! configuration. Thread count and output path are not echoed, so the bytes
//! written depend only on the configuration and the seed.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::convergence::{
    dp_limit_check, empirical_to_rho_check, entries_check, limit_base, limit_cdf, limit_spectral_vs_dp_check,
    moment_convergence_check, mkr_experiment, weights_law_check, ExperimentReport, Thresholds,
};
use crate::dirichlet_process::{dp_sample, mkr_check, Base, MkrSetup, TestFunction, DEFAULT_MASS_TOL};
use crate::ensembles::{sample, Coupling, EnsembleKind, EnsembleParams, Entry};
use crate::error::{invalid, Error, Result};
use crate::limit_measures::{assoc_hermite_matrix, assoc_laguerre_matrix, cf_density, density_on_grid, rho_abc_estimate, rho_alpha_c_cdf, RhoCEvaluator, DEFAULT_DEPTH};
use crate::measures::{DiscreteMeasure, MomentVector};
use crate::sampling::RngStream;
use crate::tridiag::{eigenvalues, moments, moments_to_jacobi, spectral_measure, TridiagonalMatrix};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "SPECTRAL_DP_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spectral-dp", version, about = "High-temperature beta ensembles, spectral measures and Dirichlet processes")]
pub struct Cli {
    /// Root seed; falls back to the SPECTRAL_DP_SEED environment variable, then 0.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock seconds in JSON reports.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Sample a tridiagonal model or truncated limit matrix (CSV `a,b`).
    SampleEnsemble(SampleArgs),
    /// Spectral measure at the first coordinate of a matrix CSV.
    SpectralMeasure(InputArgs),
    /// Tabulate a limit density (CSV `x,density`).
    LimitDensity(DensityArgs),
    /// Draw one Dirichlet process by truncated stick-breaking.
    DpSample(DpArgs),
    /// Monte Carlo check of the Markov–Krein relation (JSON).
    MkrCheck(MkrArgs),
    /// Run a convergence experiment (JSON report).
    ConvergeTest(ConvergeArgs),
    /// Moments `Jⁿ(1,1)` of a matrix CSV, or Jacobi coefficients recovered from them.
    Moments(MomentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    #[value(alias = "gauss")]
    Gaussian,
    Laguerre,
    Jacobi,
}

impl From<KindArg> for EnsembleKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gaussian => EnsembleKind::Gaussian,
            KindArg::Laguerre => EnsembleKind::Laguerre,
            KindArg::Jacobi => EnsembleKind::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

impl ModelArgs {
    fn params(&self, n: usize) -> Result<EnsembleParams> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required for this kind")));
        match self.kind {
            KindArg::Gaussian => {
                if self.alpha.is_some() || self.a.is_some() || self.b.is_some() {
                    return invalid("the Gaussian kind takes no --alpha, --a or --b");
                }
                EnsembleParams::gaussian(n, self.c)
            }
            KindArg::Laguerre => {
                if self.a.is_some() || self.b.is_some() {
                    return invalid("the Laguerre kind takes no --a or --b");
                }
                EnsembleParams::laguerre(n, need(self.alpha, "alpha")?, self.c)
            }
            KindArg::Jacobi => {
                if self.alpha.is_some() {
                    return invalid("the Jacobi kind takes no --alpha");
                }
                EnsembleParams::jacobi(n, need(self.a, "a")?, need(self.b, "b")?, self.c)
            }
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "N", alias = "n", default_value_t = 10)]
    pub n: usize,
    /// Sample the limit matrix truncated at `--depth` instead.
    #[arg(long)]
    pub limit: bool,
    #[arg(long, default_value_t = 200)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Matrix CSV with columns `a,b`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    #[value(alias = "gaussian")]
    Gauss,
    Laguerre,
    JacobiMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Quadrature of the explicit formula.
    Formula,
    /// Continued fraction of the associated-Hermite matrix.
    Cf,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long, value_enum, default_value = "gauss")]
    pub kind: DensityKind,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: Option<f64>,
    #[arg(long, default_value_t = 1201)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "formula")]
    pub route: Route,
    /// Monte Carlo trials for `jacobi-mc`.
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Truncation depth for `jacobi-mc`.
    #[arg(long, default_value_t = 100)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Atomic base measure CSV (`location,weight`) instead of the limit law of `--kind`.
    #[arg(long)]
    pub base_measure: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MASS_TOL)]
    pub mass_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MkrMode {
    Finite,
    Dp,
}

#[derive(Debug, Args, Serialize)]
pub struct MkrArgs {
    #[arg(long, value_enum, default_value = "finite")]
    pub mode: MkrMode,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation point `re,im`; repeatable.
    #[arg(long = "z", allow_hyphen_values = true, required = true)]
    pub z: Vec<String>,
    /// Test function: arctan, rational, step[:center:width], clip[:lo:hi], id.
    #[arg(long, default_value = "arctan")]
    pub f: String,
    #[arg(long = "M", alias = "m", default_value_t = 100_000)]
    pub m: usize,
    /// Eigenvalues for the finite mode, comma separated.
    #[arg(long, allow_hyphen_values = true, default_value = "-2,-1,0,1,2")]
    pub eigenvalues: String,
    /// Atomic base measure CSV for the DP mode instead of the limit law of `--kind`.
    #[arg(long)]
    pub base_measure: Option<PathBuf>,
    /// Accept an unbounded test function against a continuous base.
    #[arg(long)]
    pub allow_unbounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Empirical,
    DpLimit,
    Weights,
    LimitDp,
    Moments,
    Entries,
    Mkr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingArg {
    Common,
    Independent,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Trials or draws per sample; each experiment has its own default.
    #[arg(long, alias = "M")]
    pub trials: Option<usize>,
    /// Comma-separated matrix sizes.
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    /// Single matrix size (weights, moments with a finite model, mkr).
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub depth: usize,
    /// Matrix entry such as `offdiag:1` or `diag:1`.
    #[arg(long)]
    pub entry: Option<String>,
    #[arg(long, value_enum, default_value = "common")]
    pub coupling: CouplingArg,
    #[arg(long = "k-max", default_value_t = 4)]
    pub k_max: usize,
    #[arg(long = "z", allow_hyphen_values = true)]
    pub z: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "k-max", default_value_t = 8)]
    pub k_max: usize,
    /// Recover Jacobi coefficients from the moments (depth `(k_max + 1) / 2`, at most 8).
    #[arg(long)]
    pub recover: bool,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(pass) => {
            if pass {
                EXIT_OK
            } else {
                EXIT_STATISTICAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_) => EXIT_USAGE,
        Error::NoConvergence { .. } | Error::IllConditioned { .. } | Error::HankelSingular { .. } | Error::Accuracy { .. } => {
            EXIT_NUMERICAL
        }
    }
}

fn header_lines(cli: &Cli) -> Result<Vec<String>> {
    Ok(vec![
        format!("{TOOL} {VERSION}"),
        format!("seed: {}", cli.seed),
        format!("config: {}", serde_json::to_string(&cli.command).map_err(|e| Error::Io(e.to_string()))?),
    ])
}

fn with_output(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a Command,
    result: T,
}

fn write_json<T: Serialize>(cli: &Cli, result: T) -> Result<()> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        seed: cli.seed,
        config: &cli.command,
        result,
    };
    let text = serde_json::to_string_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
    with_output(&cli.out, |w| {
        writeln!(w, "{text}")?;
        Ok(())
    })
}

fn read_matrix(path: &Path) -> Result<TridiagonalMatrix> {
    TridiagonalMatrix::read_csv(BufReader::new(File::open(path)?))
}

fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    DiscreteMeasure::read_csv(BufReader::new(File::open(path)?))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad {what} `{p}`"))))
        .collect()
}

fn parse_z(s: &str) -> Result<Complex64> {
    let parts: Vec<f64> = parse_list(s, "complex component")?;
    match parts.as_slice() {
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => invalid(format!("z must be given as `re,im`, got `{s}`")),
    }
}

fn parse_entry(s: &str) -> Result<Entry> {
    let (kind, idx) = s.split_once(':').ok_or_else(|| Error::Parse(format!("entry must look like `offdiag:1`, got `{s}`")))?;
    let i: usize = idx.parse().map_err(|_| Error::Parse(format!("bad entry index `{idx}`")))?;
    if i == 0 {
        return invalid("entry indices start at 1");
    }
    match kind {
        "diag" => Ok(Entry::Diag(i)),
        "offdiag" => Ok(Entry::Offdiag(i)),
        other => invalid(format!("unknown entry kind `{other}`")),
    }
}

/// Substream reserved for Monte Carlo limit laws, apart from trial streams.
const BASE_STREAM: u64 = u64::MAX;

fn base_for(rng: &RngStream, model: &ModelArgs, file: &Option<PathBuf>) -> Result<Base> {
    match file {
        Some(path) => Ok(Base::atoms(read_measure(path)?)),
        None => limit_base(&rng.split(BASE_STREAM), &model.params(1)?),
    }
}

/// Runs the command; `Ok(false)` signals a failed statistical check.
fn execute(cli: &Cli) -> Result<bool> {
    let rng = RngStream::new(cli.seed);
    match &cli.command {
        Command::SampleEnsemble(args) => {
            let params = if args.limit {
                args.model.params(1)?.limit(args.depth)?
            } else {
                args.model.params(args.n)?
            };
            let j = sample(&mut rng.split(0), &params)?;
            let header = header_lines(cli)?;
            with_output(&cli.out, |w| j.write_csv(w, &header))?;
            Ok(true)
        }
        Command::SpectralMeasure(args) => {
            let sp = spectral_measure(&read_matrix(&args.input)?)?;
            let header = header_lines(cli)?;
            with_output(&cli.out, |w| sp.write_csv(w, &header))?;
            Ok(true)
        }
        Command::LimitDensity(args) => {
            let (grid, mut notes) = limit_density(&rng, args)?;
            let mut header = header_lines(cli)?;
            header.append(&mut notes);
            with_output(&cli.out, |w| grid.write_csv(w, &header))?;
            Ok(true)
        }
        Command::DpSample(args) => {
            let base = base_for(&rng, &args.model, &args.base_measure)?;
            let s = dp_sample(&mut rng.split(0), &base, args.model.c, args.mass_tol)?;
            let mut header = header_lines(cli)?;
            header.push(format!("truncation_mass_error: {:e}", s.truncation_mass_error));
            with_output(&cli.out, |w| s.measure.write_csv(w, &header))?;
            Ok(true)
        }
        Command::MkrCheck(args) => {
            let f: TestFunction = args.f.parse()?;
            let zs = args.z.iter().map(|s| parse_z(s)).collect::<Result<Vec<_>>>()?;
            let setup = match args.mode {
                MkrMode::Finite => MkrSetup::Finite {
                    eigenvalues: parse_list(&args.eigenvalues, "eigenvalue")?,
                },
                MkrMode::Dp => MkrSetup::Dp {
                    base: base_for(&rng, &args.model, &args.base_measure)?,
                    mass_tol: DEFAULT_MASS_TOL,
                },
            };
            let rep = mkr_check(&rng, &setup, args.model.c, f, &zs, args.m, Thresholds::default().se_multiple, args.allow_unbounded)?;
            let pass = rep.pass;
            write_json(cli, rep)?;
            Ok(pass)
        }
        Command::ConvergeTest(args) => {
            let start = Instant::now();
            let mut report = converge(&rng, args)?;
            if cli.timing {
                report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
            }
            let pass = report.pass;
            write_json(cli, report)?;
            Ok(pass)
        }
        Command::Moments(args) => {
            let j = read_matrix(&args.input)?;
            let m = moments(&j, args.k_max);
            let header = header_lines(cli)?;
            if args.recover {
                let coeffs = moments_to_jacobi(&MomentVector::new(m)?)?;
                with_output(&cli.out, |w| coeffs.matrix().write_csv(w, &header))?;
            } else {
                with_output(&cli.out, |w| {
                    for line in &header {
                        writeln!(w, "# {line}")?;
                    }
                    writeln!(w, "k,moment")?;
                    for (k, v) in m.iter().enumerate() {
                        writeln!(w, "{k},{}", crate::measures::fmt17(*v))?;
                    }
                    Ok(())
                })?;
            }
            Ok(true)
        }
    }
}

fn limit_density(rng: &RngStream, args: &DensityArgs) -> Result<(crate::measures::DensityGrid, Vec<String>)> {
    let range = |lo: f64, hi: f64| (args.xmin.unwrap_or(lo), args.xmax.unwrap_or(hi));
    match args.kind {
        DensityKind::Gauss => {
            if args.alpha.is_some() || args.a.is_some() || args.b.is_some() {
                return invalid("gauss takes no --alpha, --a or --b");
            }
            let (lo, hi) = range(-6.0, 6.0);
            let grid = match args.route {
                Route::Formula => RhoCEvaluator::new(args.c)?.grid(lo, hi, args.points)?,
                Route::Cf => cf_density(&assoc_hermite_matrix(args.c, DEFAULT_DEPTH)?, lo, hi, args.points, 1e-5)?,
            };
            Ok((grid, vec![]))
        }
        DensityKind::Laguerre => {
            let alpha = args.alpha.ok_or_else(|| Error::InvalidInput("--alpha is required".into()))?;
            let (lo, hi) = range(0.0, 20.0);
            if args.route == Route::Cf {
                let j = assoc_laguerre_matrix(alpha, args.c, DEFAULT_DEPTH)?;
                return Ok((cf_density(&j, lo, hi, args.points, 1e-5)?, vec![]));
            }
            Ok((density_on_grid(&rho_alpha_c_cdf(alpha, args.c)?, lo, hi, args.points)?, vec![]))
        }
        DensityKind::JacobiMc => {
            let need = |v: Option<f64>, n: &str| v.ok_or_else(|| Error::InvalidInput(format!("--{n} is required")));
            let (a, b) = (need(args.a, "a")?, need(args.b, "b")?);
            let (lo, hi) = range(0.0, 1.0);
            let est = rho_abc_estimate(&rng.split(BASE_STREAM), a, b, args.c, args.depth, args.trials, 2001)?;
            let grid = density_on_grid(&est.cdf_table()?, lo, hi, args.points)?;
            let max_se = est.cdf_se.iter().copied().fold(0.0, f64::max);
            Ok((
                grid,
                vec![
                    format!("monte carlo estimate from {} trials", est.trials),
                    format!("mean: {} se {}", est.mean, est.mean_se),
                    format!("max cdf se: {max_se}"),
                ],
            ))
        }
    }
}

fn converge(rng: &RngStream, args: &ConvergeArgs) -> Result<ExperimentReport> {
    let th = Thresholds::default();
    let model = &args.model;
    let n_list = |default: &[usize]| -> Result<Vec<usize>> {
        match &args.n_list {
            Some(s) => parse_list(s, "size"),
            None => Ok(default.to_vec()),
        }
    };
    let default_f = if model.kind == KindArg::Jacobi { "clip:0:1" } else { "arctan" };
    let f: TestFunction = args.f.as_deref().unwrap_or(default_f).parse()?;
    let params = model.params(1)?;
    let base_rng = rng.split(BASE_STREAM);
    match args.experiment {
        Experiment::Empirical => {
            let cdf = limit_cdf(&base_rng, &params)?;
            empirical_to_rho_check(rng, &params, &n_list(&[50, 100, 200, 400])?, args.trials.unwrap_or(200), &cdf, th)
        }
        Experiment::DpLimit => {
            let base = limit_base(&base_rng, &params)?;
            dp_limit_check(rng, &params, f, &n_list(&[50, 100, 200])?, args.trials.unwrap_or(5000), &base, th)
        }
        Experiment::Weights => weights_law_check(rng, &model.params(args.n.unwrap_or(100))?, args.trials.unwrap_or(10_000), th),
        Experiment::LimitDp => {
            let base = limit_base(&base_rng, &params)?;
            limit_spectral_vs_dp_check(rng, &params, f, args.depth, args.trials.unwrap_or(5000), &base, th)
        }
        Experiment::Moments => {
            let k_max = args.k_max;
            let rows = k_max / 2 + 1;
            let deterministic = match model.kind {
                KindArg::Gaussian => assoc_hermite_matrix(model.c, rows)?,
                KindArg::Laguerre => assoc_laguerre_matrix(params.alpha.unwrap_or(0.0), model.c, rows)?,
                KindArg::Jacobi => return invalid("no exact limit moments are available for the Jacobi kind"),
            };
            let limit = MomentVector::new(moments(&deterministic, k_max))?;
            let sampled = match args.n {
                Some(n) => model.params(n)?,
                None => params.limit(rows)?,
            };
            moment_convergence_check(rng, |r| spectral_measure(&sample(r, &sampled)?), &limit, k_max, args.trials.unwrap_or(100_000), th)
        }
        Experiment::Entries => {
            let entry = parse_entry(args.entry.as_deref().unwrap_or(if model.kind == KindArg::Laguerre { "diag:1" } else { "offdiag:1" }))?;
            let coupling = match args.coupling {
                CouplingArg::Common => Coupling::Common,
                CouplingArg::Independent => Coupling::Independent,
            };
            entries_check(rng, &params, entry, &n_list(&[25, 100, 400])?, args.trials.unwrap_or(10_000), coupling, th)
        }
        Experiment::Mkr => {
            let n = args.n.unwrap_or(5);
            let j = sample(&mut base_rng.clone(), &model.params(n)?)?;
            let setup = MkrSetup::Finite {
                eigenvalues: eigenvalues(&j)?,
            };
            let zs = if args.z.is_empty() {
                ["0,2", "1,1", "3,1", "-1,-0.5", "0.5,-2", "-2,0.5"].iter().map(|s| parse_z(s)).collect::<Result<Vec<_>>>()?
            } else {
                args.z.iter().map(|s| parse_z(s)).collect::<Result<Vec<_>>>()?
            };
            Ok(mkr_experiment(rng, &setup, model.c, f, &zs, args.trials.unwrap_or(100_000), th)?.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_z("3,1").unwrap(), Complex64::new(3.0, 1.0));
        assert_eq!(parse_z("-1,-0.5").unwrap(), Complex64::new(-1.0, -0.5));
        assert!(parse_z("3").is_err());
        assert_eq!(parse_entry("offdiag:1").unwrap(), Entry::Offdiag(1));
        assert!(parse_entry("diag:0").is_err());
        assert_eq!(parse_list::<usize>("25,100", "size").unwrap(), vec![25, 100]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["spectral-dp", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run(["spectral-dp", "sample-ensemble", "--bogus"]), EXIT_USAGE);
        assert_eq!(exit_code(&Error::NoConvergence { size: 1, iterations: 2 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), EXIT_USAGE);
    }

    #[test]
    fn kind_specific_flags_are_checked() {
        let m = ModelArgs {
            kind: KindArg::Gaussian,
            c: 1.0,
            alpha: Some(1.0),
            a: None,
            b: None,
        };
        assert!(m.params(5).is_err());
        let m = ModelArgs { kind: KindArg::Laguerre, alpha: None, ..m };
        assert!(m.params(5).is_err());
    }
}
