//! Command-line experiment runner.
//!
//! One subcommand per experiment kind, plus `validate` (config check only)
//! and `manifest` (print environment). Exit codes: 0 success, 2 config
//! error, 3 numerical-invariant violation, 1 io failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ontolab::harness::{self, ExperimentConfig, ExperimentKind, HarnessError};

#[derive(Parser)]
#[command(
    name = "ontolab",
    version,
    about = "Probability-by-counting experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (flat key=value with [sections])
    config: PathBuf,
    /// Output directory (overrides config `out` and ONTOLAB_OUT_DIR)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement counting versus Born weights across levels
    CountConverge(RunArgs),
    /// Unitary-orbit sampling weights versus Born weights
    Overcount(RunArgs),
    /// Sequential measurements: branch tree and self-location frequencies
    MeasureChain(RunArgs),
    /// Single-world collapse sampling versus many-worlds self-location
    CollapseCompare(RunArgs),
    /// Lattice scalar-field ground state
    Lattice(RunArgs),
    /// Microstate sampling frequencies
    Sample(RunArgs),
    /// Phase absorption round trip and global-phase invariance
    GaugeRoundtrip(RunArgs),
    /// Parse and check a config without running it
    Validate {
        /// Experiment config file
        config: PathBuf,
    },
    /// Print environment information
    Manifest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.error_record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::CountConverge(args) => run(ExperimentKind::CountConverge, args),
        Command::Overcount(args) => run(ExperimentKind::Overcount, args),
        Command::MeasureChain(args) => run(ExperimentKind::MeasureChain, args),
        Command::CollapseCompare(args) => run(ExperimentKind::CollapseCompare, args),
        Command::Lattice(args) => run(ExperimentKind::Lattice, args),
        Command::Sample(args) => run(ExperimentKind::Sample, args),
        Command::GaugeRoundtrip(args) => run(ExperimentKind::GaugeRoundtrip, args),
        Command::Validate { config } => {
            let config = load_config(&config)?;
            harness::validate(&config)?;
            println!("ok kind={} seed={}", config.kind, config.seed);
            Ok(())
        }
        Command::Manifest => {
            println!("ontolab {}", env!("CARGO_PKG_VERSION"));
            println!("os = {}/{}", std::env::consts::OS, std::env::consts::ARCH);
            println!(
                "default_out_dir = {}",
                std::env::var(harness::OUT_DIR_ENV).unwrap_or_else(|_| ".".into())
            );
            println!("kinds = {}", kind_list());
            Ok(())
        }
    }
}

fn kind_list() -> String {
    ExperimentKind::ALL
        .iter()
        .map(|k| k.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), HarnessError> {
    let config = load_config(&args.config)?;
    if config.kind != kind {
        return Err(HarnessError::config(format!(
            "config kind is `{}`, invoked as `{}`",
            config.kind, kind
        )));
    }
    let outcome = harness::run(&config, args.out.as_deref())?;
    for note in &outcome.notes {
        println!("{note}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
