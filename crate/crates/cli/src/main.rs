//! `treg`: fit, audit, and explore Student-t regression under objective
//! priors.
//!
//! Exit codes are a stable contract: 0 on success, 2 for validation and
//! input errors, 3 when sampling is refused because the posterior would be
//! improper, 4 for numerical failures.

mod commands;
mod coverage;
mod custom_prior;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use treg_core::Error;

pub(crate) const SCHEMA_VERSION: u32 = 1;

pub(crate) const EXIT_VALIDATION: i32 = 2;
pub(crate) const EXIT_IMPROPER: i32 = 3;
pub(crate) const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "treg",
    version,
    about = "Bayesian Student-t linear regression under objective priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model by Gibbs sampling and write trace and summary files.
    Fit(FitArgs),
    /// Audit posterior propriety for a prior and data shape.
    Audit(AuditArgs),
    /// Tabulate the normalized degrees-of-freedom prior density.
    PriorCurve(PriorCurveArgs),
    /// Estimate frequentist coverage of the 95% credible intervals.
    Coverage(CoverageArgs),
    /// Show how the critical kernel integral grows as its lower limit
    /// shrinks.
    DivergenceDemo(DivergenceDemoArgs),
}

#[derive(clap::Args)]
pub(crate) struct FitArgs {
    /// CSV file with a header row; response column `y` first, covariates
    /// after.
    #[arg(long)]
    data: PathBuf,

    /// Prior: `independence`, `jeffreys-rule`, or `custom:<file.json>`.
    #[arg(long)]
    prior: String,

    /// Prepend a column of ones to the covariates.
    #[arg(long)]
    intercept: bool,

    /// Truncate the support of nu below this value. A positive floor also
    /// acknowledges an improper-posterior audit and requests sampling of
    /// the truncated model anyway.
    #[arg(long, default_value_t = 0.0)]
    nu_floor: f64,

    /// Total Gibbs scans, including burn-in.
    #[arg(long, default_value_t = 50_000)]
    iters: usize,

    /// Scans discarded from the start of the chain.
    #[arg(long, default_value_t = 10_000)]
    burn: usize,

    /// Keep every thin-th scan after burn-in.
    #[arg(long, default_value_t = 10)]
    thin: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Standard deviation of the random-walk proposal on ln(nu).
    #[arg(long, default_value_t = 0.5)]
    nu_proposal_sd: f64,

    /// Output directory for trace.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub(crate) struct AuditArgs {
    /// Number of observations (alternative to --data).
    #[arg(long, conflicts_with = "data", requires = "p")]
    n: Option<usize>,

    /// Number of covariate columns (alternative to --data).
    #[arg(long, conflicts_with = "data", requires = "n")]
    p: Option<usize>,

    /// CSV file to take the dimensions from.
    #[arg(long)]
    data: Option<PathBuf>,

    /// Prepend a column of ones when reading --data.
    #[arg(long, requires = "data")]
    intercept: bool,

    /// Prior: `independence`, `jeffreys-rule`, or `custom:<file.json>`.
    #[arg(long)]
    prior: String,

    /// Probe points for the divergence evidence table.
    #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.1, 0.5, 2.0, 10.0])]
    nu_grid: Vec<f64>,

    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub(crate) struct PriorCurveArgs {
    /// Prior: `independence`, `jeffreys-rule`, or `custom:<file.json>`.
    #[arg(long)]
    prior: String,

    /// Covariate count the prior is paired with.
    #[arg(long, default_value_t = 1)]
    p: usize,

    #[arg(long, default_value_t = 1e-3)]
    nu_min: f64,

    #[arg(long, default_value_t = 1e4)]
    nu_max: f64,

    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 200)]
    steps: usize,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub(crate) struct CoverageArgs {
    #[arg(long)]
    n: usize,

    #[arg(long)]
    p: usize,

    /// Every true regression coefficient takes this value.
    #[arg(long, default_value_t = 1.0)]
    true_beta: f64,

    #[arg(long, default_value_t = 1.0)]
    true_sigma2: f64,

    #[arg(long, default_value_t = 5.0)]
    true_nu: f64,

    #[arg(long)]
    replicates: usize,

    #[arg(long, default_value_t = 20_000)]
    iters: usize,

    #[arg(long, default_value_t = 4_000)]
    burn: usize,

    #[arg(long, default_value_t = 8)]
    thin: usize,

    #[arg(long, default_value_t = 1234)]
    seed: u64,

    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub(crate) struct DivergenceDemoArgs {
    #[arg(long)]
    n: usize,

    #[arg(long)]
    p: usize,

    /// Exponent of sigma^2 in the prior.
    #[arg(long, default_value_t = 1.0)]
    a: f64,

    /// Probe values of nu, comma separated.
    #[arg(long, value_delimiter = ',')]
    nu: Vec<f64>,

    /// Write the growth rows as CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::InvalidInput(_) | Error::Io(_) => EXIT_VALIDATION,
        Error::ImproperPosterior { .. } => EXIT_IMPROPER,
        Error::Singular(_)
        | Error::NoConvergence(_)
        | Error::DivergenceDetected(_)
        | Error::Infeasible(_) => EXIT_NUMERICAL,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(args) => commands::fit(&args),
        Command::Audit(args) => commands::audit(&args),
        Command::PriorCurve(args) => commands::prior_curve(&args),
        Command::Coverage(args) => coverage::run(&args),
        Command::DivergenceDemo(args) => commands::divergence_demo(&args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        if let Error::ImproperPosterior { critical_nu, .. } = &err {
            eprintln!(
                "hint: the posterior integrates only if the prior puts no mass at or below \
                 nu = {critical_nu:.6}; pass --nu-floor with a larger value to fit the \
                 truncated model, or use --prior independence"
            );
        }
        std::process::exit(exit_code_for(&err));
    }
}
