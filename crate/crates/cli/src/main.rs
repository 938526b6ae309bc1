//! `fractalga`: extract fractal features from epoched EEG, search feature and
//! classifier combinations with a GA, and score or exhaustively check subsets.
//!
//! Exit codes: 0 success, 1 internal error, 2 input or config error,
//! 3 failure during a search.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::SynthKind;
use config::{RunConfig, Settings};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fractalga",
    version,
    about = "Fractal-feature EEG classification with GA feature selection"
)]
#[command(args_override_self = true)]
#[command(
    after_help = "Settings can also come from a `key = value` file named by FRACTALGA_CONFIG.
Flags override the file, which overrides the defaults.

Examples:
  fractalga synth --kind dataset --out trials.txt
  fractalga extract --input trials.txt --out features.csv
  fractalga search --input features.csv --out run/ --population 50 --generations 20
  fractalga evaluate --input features.csv --features ch0:D1:Katz --classifier lda"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the 315-column feature CSV for a dataset
    Extract,
    /// Run the GA and report the lowest-FV feature sets
    Search,
    /// Cross-validate one feature set
    Evaluate {
        /// Comma-separated descriptors (ch0:D1:Katz) or a hex gene mask
        #[arg(long)]
        features: String,
    },
    /// Score every subset of the given columns up to --max-active
    Exhaustive {
        /// Comma-separated indices, ranges (0-11) or descriptors; default all
        #[arg(long)]
        columns: Option<String>,
    },
    /// Emit a synthetic dataset or planted feature CSV
    Synth {
        #[arg(long, value_enum, default_value = "dataset")]
        kind: SynthKind,
        /// Number of trials (default 280 for datasets, 100 for planted)
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = Settings::from_env()?.unwrap_or_default();
    let cfg = RunConfig::resolve(cli.settings.over(file))?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Extract => commands::cmd_extract(&cfg),
        Command::Search => commands::cmd_search(&cfg),
        Command::Evaluate { features } => commands::cmd_evaluate(&cfg, &features),
        Command::Exhaustive { columns } => commands::cmd_exhaustive(&cfg, columns.as_deref()),
        Command::Synth { kind, trials } => commands::cmd_synth(&cfg, kind, trials),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
