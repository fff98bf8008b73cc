//! Thin command-line front end over the library workflows.
//!
//! Exit codes: 0 success, 1 config error, 2 numerical failure
//! (design/verification), 3 sampling-budget exhaustion.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fnn_obs::config::{ExperimentConfig, OutputFormat};
use fnn_obs::error::Error;
use fnn_obs::experiment::{
    run_check_rank, run_design_input, run_neighborhood, run_oracle, run_reproduce_experiment,
};
use fnn_obs::oracle::SweepGrid;
use fnn_obs::report::{format_float, to_json};

#[derive(Parser)]
#[command(
    name = "fnn-obs",
    version,
    about = "Local observability of two-layer ReLU network weights: \
             rank checks, persistently exciting input design, and excited neighborhoods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the observability rank condition for W under an input sequence
    CheckRank(CommonArgs),
    /// Design a persistently exciting input sequence U = BW⁻¹
    DesignInput(CommonArgs),
    /// Generate verified excited neighbors of the configured weight state
    Neighborhood(CommonArgs),
    /// Run the built-in numerical experiment end to end
    ReproduceExperiment(CommonArgs),
    /// Construct and certify an indistinguishable reparameterization
    /// for a single-input, three-node network
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; omitted fields fall back to the built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; the report goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format, overriding the config
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Three comma-separated nonzero weights, e.g. --weights 1,2,-3
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Vec<f64>,
    /// Lower end of the 1-D sweep grid
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    grid_lo: f64,
    /// Upper end of the 1-D sweep grid
    #[arg(long, default_value_t = 2.0)]
    grid_hi: f64,
    /// Grid resolution; an even count keeps the grid off u = 0
    #[arg(long, default_value_t = 1000)]
    grid_points: usize,
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(args.config.as_deref())?;
    let format = match &args.format {
        Some(text) => Some(text.parse::<OutputFormat>()?),
        None => None,
    };
    cfg.apply_overrides(args.seed, args.out.clone(), format);
    Ok(cfg)
}

/// Writes the rendered report to the configured destination. With `--out`
/// the payload goes to the file and a short summary line stays on stdout.
fn emit(cfg: &ExperimentConfig, payload: String, summary: &str) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, payload)?;
            println!("{summary} -> {}", path.display());
        }
        None => print!("{payload}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::CheckRank(args) => {
            let cfg = load_config(&args)?;
            let report = run_check_rank(&cfg)?;
            let payload = match cfg.format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => to_json(&report)?,
            };
            let summary = format!(
                "rank condition {}: numerical rank {} of {} (rel_tol {})",
                if report.holds { "holds" } else { "fails" },
                report.numerical_rank,
                report.full_rank,
                format_float(report.rel_tol),
            );
            emit(&cfg, payload, &summary)?;
            if let Some(note) = &report.note {
                eprintln!("note: {note}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DesignInput(args) => {
            let cfg = load_config(&args)?;
            let report = run_design_input(&cfg)?;
            let payload = match cfg.format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => to_json(&report)?,
            };
            let summary = format!(
                "designed persistently exciting input: N = {} rows, m = {} columns",
                report.sequence_length, report.n
            );
            emit(&cfg, payload, &summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Neighborhood(args) => run_neighborhood_command(args, false),
        Command::ReproduceExperiment(args) => run_neighborhood_command(args, true),
        Command::Oracle(args) => {
            let cfg = load_config(&args.common)?;
            if args.weights.len() != 3 {
                return Err(Error::Config(format!(
                    "--weights takes exactly three comma-separated values, got {}",
                    args.weights.len()
                )));
            }
            let grid = SweepGrid::uniform(1, args.grid_lo, args.grid_hi, args.grid_points)?;
            let weights = [args.weights[0], args.weights[1], args.weights[2]];
            let report = run_oracle(&weights, &grid)?;
            let payload = match cfg.format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => to_json(&report)?,
            };
            let summary = format!(
                "witness {:?} is {} on the grid (max |Δy| = {}{})",
                report.witness,
                if report.identical {
                    "output-identical"
                } else {
                    "distinguishable"
                },
                format_float(report.max_abs_diff),
                if report.conclusive {
                    ", conclusive"
                } else {
                    ", grid-level only"
                },
            );
            emit(&cfg, payload, &summary)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_neighborhood_command(args: CommonArgs, reproduce: bool) -> Result<ExitCode, Error> {
    let cfg = load_config(&args)?;
    let report = if reproduce {
        run_reproduce_experiment(&cfg)?
    } else {
        run_neighborhood(&cfg)?
    };
    let payload = match cfg.format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => to_json(&report)?,
    };
    let summary = format!(
        "{} of {} verified neighbors in {} attempts (acceptance rate {:.4})",
        report.neighbors.len(),
        report.requested,
        report.attempts,
        report.acceptance_rate,
    );
    emit(&cfg, payload, &summary)?;
    if !report.complete {
        eprintln!(
            "sampling budget exhausted: {} of {} requested neighbors verified",
            report.neighbors.len(),
            report.requested
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code_for(error: &Error) -> ExitCode {
    match error {
        Error::Config(_)
        | Error::Io(_)
        | Error::Empty { .. }
        | Error::NonFinite { .. }
        | Error::ZeroWeight { .. }
        | Error::GridResolution(_)
        | Error::GridRange { .. }
        | Error::GridCapExceeded { .. }
        | Error::InvalidSpread(_)
        | Error::InvalidMagnitudeRange { .. } => ExitCode::from(1),
        Error::SamplingBudget { .. } | Error::BlockSamplingBudget { .. } => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            exit_code_for(&error)
        }
    }
}
