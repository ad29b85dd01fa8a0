//! `bessbid` command-line entry point.
//!
//! Exit codes: 0 success, 1 other errors, 2 usage, 3 infeasible,
//! 4 verification or check failure, 5 time limit.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bessbid_core::HarnessError;

#[derive(Parser, Debug)]
#[command(
    name = "bessbid",
    version,
    about = "Strategic battery bidding in joint energy, reserve and regulation markets"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// TOML file with gap_tol, time_limit, seed, threads, value_cuts.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "BESSBID_THREADS", global = true)]
    threads: Option<usize>,
    /// Relative MILP optimality gap.
    #[arg(long, env = "BESSBID_GAP", global = true)]
    gap: Option<f64>,
    /// Solve time limit in seconds (0 = none).
    #[arg(long, env = "BESSBID_TIME_LIMIT", global = true)]
    time_limit: Option<f64>,
    /// Seed for solver tie-breaking and AGC traces.
    #[arg(long, env = "BESSBID_SEED", global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ScenarioSource {
    /// Scenario file written by `synth`.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in scenario: reference, desk, tiny, two-level.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
#[group(multiple = false)]
pub struct MarketChoice {
    /// Case number: 1 energy, 2 +reserve, 3 +regulation, 4 all.
    #[arg(long)]
    case: Option<u8>,
    /// Markets, e.g. `energy+regulation`.
    #[arg(long)]
    markets: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a scenario file from load and price patterns.
    Synth(commands::SynthArgs),
    /// Clear the market for fixed battery bids (price-taker view).
    Clear {
        #[command(flatten)]
        source: ScenarioSource,
        /// CSV with supply,demand,reserve,regulation per interval; the
        /// battery is left out when omitted.
        #[arg(long)]
        bids: Option<PathBuf>,
        /// Output CSV; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve one bilevel case and write its report files.
    Solve {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        markets: MarketChoice,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Exhaustive grid search over bids on a small instance.
    Oracle {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        markets: MarketChoice,
        /// Grid spacing, MW.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Also solve the MILP and check it reaches the oracle's revenue.
        #[arg(long)]
        check_milp: bool,
    },
    /// Export the single-level MILP in fixed MPS format.
    ExportMps {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        markets: MarketChoice,
        /// Include the value inequalities used by `solve`.
        #[arg(long)]
        value_cuts: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Check that regulation leaves the state of charge unchanged.
    AgcCheck(commands::AgcArgs),
    /// Solve several cases on one scenario and compare revenues.
    Compare {
        #[command(flatten)]
        source: ScenarioSource,
        /// Comma-separated case numbers.
        #[arg(long, default_value = "1,2,3,4", value_delimiter = ',')]
        cases: Vec<u8>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
}

/// Failures with their own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Infeasible(String),
    Check(String),
    TimeLimit(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) | Failure::Check(m) | Failure::TimeLimit(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(f) = e.downcast_ref::<Failure>() {
        return match f {
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Check(_) => 4,
            Failure::TimeLimit(_) => 5,
        };
    }
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::Infeasible) => 3,
        Some(HarnessError::Verification(_)) => 4,
        Some(HarnessError::NoSolution(_)) => 5,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) if !p.is_file() => return Err(Failure::Usage(format!("config file {} not found", p.display())).into()),
        Some(p) => config::FileConfig::load(p).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => config::FileConfig::default(),
    };
    let flags =
        config::FlagOverrides { gap: cli.gap, time_limit: cli.time_limit, seed: cli.seed, threads: cli.threads };
    let cfg = config::resolve(&file, &flags).map_err(|e| Failure::Usage(e.to_string()))?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Clear { source, bids, out } => commands::clear(&source, bids.as_deref(), out.as_deref()),
        Command::Solve { source, markets, out } => commands::solve(&source, &markets, &out, &cfg),
        Command::Oracle { source, markets, step, check_milp } => {
            commands::oracle(&source, &markets, step, check_milp, &cfg)
        }
        Command::ExportMps { source, markets, value_cuts, out } => {
            commands::export_mps(&source, &markets, value_cuts, &out, &cfg)
        }
        Command::AgcCheck(a) => commands::agc_check(&a, &cfg),
        Command::Compare { source, cases, out } => commands::compare(&source, &cases, &out, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("BESSBID_LOG").init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Failure::Usage("u".into()).into()),
            exit_code(&HarnessError::Infeasible.into()),
            exit_code(&HarnessError::Verification("v".into()).into()),
            exit_code(&HarnessError::NoSolution("time-limit".into()).into()),
            exit_code(&anyhow::anyhow!("other")),
        ];
        assert_eq!(codes, [2, 3, 4, 5, 1]);
        assert_eq!(exit_code(&Failure::TimeLimit("t".into()).into()), 5);
        assert_eq!(exit_code(&Failure::Check("c".into()).into()), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
