//! `pmp`: dataset generation, calibration, policy runs, out-of-sample
//! evaluation and sensitivity sweeps, each reading and writing files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmp_core::data::OutputFormat;
use pmp_core::{PmpError, TargetId};

#[derive(Parser)]
#[command(
    name = "pmp",
    version,
    about = "Calibrate and simulate a catch-limited fishing fleet"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic fleet dataset and its metadata sidecar.
    GenData {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u64).range(1..))]
        vessels: u64,
        /// Dataset path; metadata goes to `<stem>.meta.json` beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a fleet model and verify that it reproduces the base year.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        /// Where to write the model document.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        assumptions: AssumptionArgs,
        #[command(flatten)]
        prep: PrepArgs,
        /// Also write the calibration report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: OutputFormat,
    },
    /// Run a limit change and its mirror image for one target.
    Policy {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "WCPO", value_parser = parse_target)]
        target: TargetId,
        /// Limit change in percent; the opposite change is run as well.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: OutputFormat,
    },
    /// Predict other years' catch and spending and compare with observations.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Observed data for one year, as YEAR=PATH. Repeatable.
        #[arg(long = "observed", required = true, value_parser = parse_observed)]
        observed: Vec<(i32, PathBuf)>,
        #[arg(long)]
        cost_index: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: OutputFormat,
    },
    /// Recalibrate and rerun a scenario over a grid of elasticities.
    Sensitivity {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.8")]
        etas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.17,0.5")]
        sigmas: Vec<f64>,
        #[arg(long, default_value = "WCPO", value_parser = parse_target)]
        target: TargetId,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        delta: f64,
        #[command(flatten)]
        prep: PrepArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: OutputFormat,
    },
}

#[derive(Args)]
struct AssumptionArgs {
    /// Supply elasticity; defaults to the dataset metadata, then 0.5.
    #[arg(long)]
    eta: Option<f64>,
    /// Elasticity of substitution; defaults to the dataset metadata, then 0.17.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct PrepArgs {
    /// Express inputs per hook deployed before calibrating.
    #[arg(long)]
    hook_scaling: bool,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: PmpError| e.to_string())
}

fn parse_target(s: &str) -> Result<TargetId, String> {
    s.parse().map_err(|e: PmpError| e.to_string())
}

fn parse_observed(s: &str) -> Result<(i32, PathBuf), String> {
    let (year, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected YEAR=PATH, got {s:?}"))?;
    let year = year
        .trim()
        .parse()
        .map_err(|_| format!("not a year: {year:?}"))?;
    Ok((year, PathBuf::from(path)))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(PmpError),
}

impl From<PmpError> for CliError {
    fn from(e: PmpError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => 2,
            _ => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { seed, vessels, out } => commands::gen_data(seed, vessels as usize, &out),
        Command::Calibrate {
            data,
            out,
            assumptions,
            prep,
            report,
            format,
        } => commands::calibrate(
            &data,
            &out,
            assumptions.eta,
            assumptions.sigma,
            prep.hook_scaling,
            report.as_deref(),
            format,
        ),
        Command::Policy {
            model,
            target,
            delta,
            out_dir,
            format,
        } => commands::policy(&model, target, delta, &out_dir, format),
        Command::Evaluate {
            model,
            observed,
            cost_index,
            out,
            format,
        } => commands::evaluate(&model, &observed, cost_index.as_deref(), &out, format),
        Command::Sensitivity {
            data,
            etas,
            sigmas,
            target,
            delta,
            prep,
            out_dir,
            format,
        } => commands::sensitivity(
            &data,
            &etas,
            &sigmas,
            target,
            delta,
            prep.hook_scaling,
            &out_dir,
            format,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
