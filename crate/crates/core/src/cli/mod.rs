//! The `npmix` command line: experiment specs, simulation, fitting,
//! evaluation and the non-identifiability demos.

pub mod commands;
pub mod demo;
pub mod spec;
pub mod stats;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::kde::BandwidthSchedule;
use crate::mixfit::{DenoiseConfig, DenoiseSchedule, MixtureConfig};
pub use commands::{EvalReport, FitSummary, Manifest};
pub use demo::DemoConfig;
pub use spec::{parse_seeds, Experiment, ExperimentSpec, ModelSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "npmix",
    version,
    about = "Nonparametric mixture and mixed regression estimators"
)]
pub struct Cli {
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory; overrides the spec's `outputs`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed list such as `0-9` or `1,4,7`; overrides the spec.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Worker threads for per-seed jobs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Exit with status 4 when acceptance thresholds fail.
    #[arg(long, global = true)]
    pub acceptance: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one dataset per (n, seed).
    Simulate,
    /// Fit a nonparametric mixture to each dataset.
    FitMixture(FitArgs),
    /// Fit a mixed regression to each dataset.
    FitRegression(FitArgs),
    /// Locate the covariate where components are best separated.
    FindSep {
        #[arg(long)]
        window: Option<f64>,
        #[arg(long = "K")]
        k: Option<usize>,
    },
    /// Aggregate fits against the model.
    Eval,
    /// Run one of the non-identifiability demonstrations.
    DemoNonident {
        #[arg(long, value_enum)]
        variant: DemoVariant,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoVariant {
    #[value(alias = "equal_weights_regression")]
    EqualWeights,
    #[value(alias = "near_nonregular_mixture")]
    NearNonregular,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    /// Number of components.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of projection atoms.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Atom support bound.
    #[arg(long = "M")]
    pub m: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep the automatic schedule, using `--delta`/`--threshold` as overrides.
    #[arg(long)]
    pub auto_schedule: bool,
    #[arg(long)]
    pub bandwidth_exp: Option<f64>,
    #[arg(long)]
    pub bandwidth_c: Option<f64>,
    /// Separation point for regression fits.
    #[arg(long)]
    pub x0: Option<f64>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_)
            | Error::Model(_)
            | Error::InvalidInput(_)
            | Error::InvalidMeasure(_)
            | Error::Io { .. }
            | Error::Format { .. } => EXIT_VALIDATION,
            _ => EXIT_PIPELINE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn apply_bandwidth(b: &mut BandwidthSchedule, args: &FitArgs) {
    if args.bandwidth_exp.is_none() && args.bandwidth_c.is_none() {
        return;
    }
    let (c0, e0) = match *b {
        BandwidthSchedule::PowerLaw { c, exponent } => (c, exponent),
        BandwidthSchedule::Fixed { .. } => (1.0, -0.25),
    };
    *b = BandwidthSchedule::PowerLaw {
        c: args.bandwidth_c.unwrap_or(c0),
        exponent: args.bandwidth_exp.unwrap_or(e0),
    };
}

fn apply_mixture(cfg: &mut MixtureConfig, args: &FitArgs) {
    if args.l.is_some() {
        cfg.projection.n_atoms = args.l;
    }
    if args.m.is_some() {
        cfg.projection.support_bound = args.m;
    }
    match (args.delta, args.threshold, args.auto_schedule) {
        (Some(d), Some(t), false) => {
            cfg.denoise = DenoiseConfig {
                max_retries: cfg.denoise.max_retries,
                ..DenoiseConfig::manual(d, t)
            }
        }
        (d, t, auto) => {
            if auto {
                cfg.denoise.schedule = DenoiseSchedule::Auto;
            }
            cfg.denoise.delta = d.or(cfg.denoise.delta);
            cfg.denoise.threshold = t.or(cfg.denoise.threshold);
        }
    }
    apply_bandwidth(&mut cfg.bandwidth, args);
}

/// Applies command-line overrides to a loaded experiment.
pub fn apply_fit_args(exp: &mut Experiment, args: &FitArgs) -> crate::Result<()> {
    let s = &mut exp.spec;
    if args.k.is_some() {
        s.k = args.k;
    }
    if args.sigma.is_some() {
        s.sigma = args.sigma;
    }
    if args.x0.is_some() {
        s.x0 = args.x0;
        s.search_x0 = false;
    }
    apply_mixture(&mut s.mixture, args);
    apply_mixture(&mut s.regression.mixture, args);
    apply_bandwidth(&mut s.regression.bandwidth, args);
    exp.validate()
}

fn load_experiment(cli: &Cli) -> Result<Experiment, CliError> {
    let path = cli
        .spec
        .as_deref()
        .ok_or_else(|| CliError::validation("this command needs --spec <file>"))?;
    let mut exp = Experiment::load(path)?;
    if let Some(text) = &cli.seeds {
        exp.spec.seeds = parse_seeds(text)?;
    }
    exp.validate()?;
    Ok(exp)
}

fn out_dir(cli: &Cli, exp: Option<&Experiment>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| exp.map(|e| e.spec.outputs.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn report_fits(summary: &FitSummary) -> Result<i32, CliError> {
    for j in summary.jobs.iter().filter(|j| !j.ok) {
        eprintln!(
            "n = {} seed {}: {}",
            j.n,
            j.seed,
            j.error.as_deref().unwrap_or("failed")
        );
    }
    let failed = summary.failures();
    println!(
        "{}: {} of {} jobs succeeded",
        summary.command,
        summary.jobs.len() - failed,
        summary.jobs.len()
    );
    if failed == summary.jobs.len() {
        return Err(CliError {
            code: EXIT_PIPELINE,
            message: "every job failed".into(),
        });
    }
    Ok(EXIT_OK)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Simulate => {
            let exp = load_experiment(cli)?;
            let out = out_dir(cli, Some(&exp));
            let manifest = commands::simulate(&exp, &out)?;
            println!(
                "wrote {} datasets under {}",
                manifest.datasets.len(),
                out.join("data").display()
            );
            Ok(EXIT_OK)
        }
        Command::FitMixture(args) | Command::FitRegression(args) => {
            let mut exp = load_experiment(cli)?;
            apply_fit_args(&mut exp, args)?;
            let out = out_dir(cli, Some(&exp));
            let summary = if matches!(cli.command, Command::FitMixture(_)) {
                commands::fit_mixture(&exp, &out)?
            } else {
                commands::fit_regression(&exp, &out)?
            };
            report_fits(&summary)
        }
        Command::FindSep { window, k } => {
            let mut exp = load_experiment(cli)?;
            if k.is_some() {
                exp.spec.k = *k;
                exp.validate()?;
            }
            let out = out_dir(cli, Some(&exp));
            report_fits(&commands::find_sep(&exp, &out, *window)?)
        }
        Command::Eval => {
            let exp = load_experiment(cli)?;
            if cli.acceptance && exp.spec.acceptance.is_none() {
                return Err(CliError::validation("--acceptance needs thresholds in the spec"));
            }
            let out = out_dir(cli, Some(&exp));
            let report = commands::eval(&exp, &out)?;
            print!("{}", commands::render_report(&report));
            Ok(if cli.acceptance && !report.passed {
                EXIT_ACCEPTANCE
            } else {
                EXIT_OK
            })
        }
        Command::DemoNonident { variant, n } => {
            let mut cfg = DemoConfig::default();
            if let Some(n) = n {
                cfg.n = *n;
            }
            if cfg.n == 0 {
                return Err(CliError::validation("--n must be positive"));
            }
            if let Some(text) = &cli.seeds {
                cfg.seeds = parse_seeds(text)?;
            }
            let base = out_dir(cli, None);
            let passed = match variant {
                DemoVariant::EqualWeights => {
                    let dir = base.join("equal-weights");
                    let r = demo::equal_weights_demo(&cfg, Some(&dir))?;
                    println!(
                        "equal weights: {} of {} seeds label-switched, median permutation error {:.4}; contrast median sorted error {:.4}",
                        r.switched_seeds,
                        cfg.seeds.len(),
                        r.median_permutation_error,
                        r.contrast_median_sorted_error
                    );
                    r.passed
                }
                DemoVariant::NearNonregular => {
                    let dir = base.join("near-nonregular");
                    let r = demo::near_nonregular_demo(&cfg, Some(&dir))?;
                    for run in &r.runs {
                        println!("xi = {}: median component L1 error {:.4}", run.xi, run.median_f_error);
                    }
                    r.passed
                }
            };
            println!(
                "{}",
                if passed {
                    "demonstration holds"
                } else {
                    "demonstration does not hold"
                }
            );
            Ok(if cli.acceptance && !passed {
                EXIT_ACCEPTANCE
            } else {
                EXIT_OK
            })
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::validation("--threads must be positive")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::validation(e.to_string())),
        },
        None => execute(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
