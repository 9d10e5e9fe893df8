//! `fcvqc`: train, generate data for, and verify block-modular variational
//! quantum circuits.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Check, Failure, EXIT_CONFIG};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "fcvqc", version, about = "Block-modular variational quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override one config key, e.g. `--set training.epochs=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        ExperimentConfig::load(&self.config, &self.overrides).map_err(Failure::Config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write a run directory.
    Train(ConfigArgs),
    /// Simulate an option-portfolio scenario.
    GenPortfolio {
        #[command(flatten)]
        args: ConfigArgs,
        /// Write the scenario here instead of a fresh run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one theorem check; exits 3 if it is violated.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Record per-epoch gradient traces over a grid of layers and depths.
    GradScan(ConfigArgs),
    /// Print the trainable parameter count of a topology.
    CountParams {
        topology: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train(args) => {
            let dir = commands::train(&args.load()?)?;
            println!("{}", dir.display());
        }
        Command::GenPortfolio { args, out } => {
            let path = commands::gen_portfolio(&args.load()?, out.as_deref())?;
            println!("{}", path.display());
        }
        Command::Verify { check, args } => {
            let dir = commands::verify(&args.load()?, check)?;
            println!("{check:?} check passed; report in {}", dir.display());
        }
        Command::GradScan(args) => {
            let dir = commands::grad_scan(&args.load()?)?;
            println!("{}", dir.display());
        }
        Command::CountParams { topology, q, layers, depth } => {
            println!("{}", commands::print_count(&topology, q, layers, depth)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.code())
        }
    }
}
