use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entropath_cli::commands::{cmd_dag, cmd_ingest, cmd_report, cmd_run, cmd_synth};
use entropath_cli::{CliError, LoadedConfig};

#[derive(Parser)]
#[command(name = "entropath", version, about = "Entropy-based impact pathways for paired ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate input CSVs and write the dataset store.
    Ingest(Args),
    /// Generate a synthetic paired dataset with ground truth.
    Synth(Args),
    /// Run entropy, changepoints, impacts and pathway graphs.
    Run(Args),
    /// Write plot-ready CSV bundles for a completed run.
    Report(Args),
    /// Rebuild the pathway graphs from the run's impact records.
    Dag(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
}

type Handler = fn(&LoadedConfig) -> Result<String, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args): (Handler, Args) = match cli.command {
        Command::Ingest(a) => (cmd_ingest, a),
        Command::Synth(a) => (cmd_synth, a),
        Command::Run(a) => (cmd_run, a),
        Command::Report(a) => (cmd_report, a),
        Command::Dag(a) => (cmd_dag, a),
    };
    match LoadedConfig::load(&args.config).and_then(|cfg| cmd(&cfg)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
