//! `spinmem`: run pulse programs, canned experiments and parameter sweeps.
//!
//! Exit codes: 0 success, 1 sequence parse or compile error, 2 config or
//! argument error, 3 runtime error, 4 unknown experiment, 5 failed
//! comparison (outputs are still written).

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{RunArgs, SweepArgs};

#[derive(Debug, Parser)]
#[command(name = "spinmem", version, about = "Spin-ensemble holographic memory simulator")]
struct Cli {
    /// Override a config key or a sequence `let` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pulse program and write the acquired signal as CSV.
    Run {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named experiment and write its JSON report and curves.
    Experiment {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a program once per value of a config key or `let` parameter.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: String,
        /// Comma-separated values, in the order rows are written.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Run { seq, config, seed, out } => {
            commands::cmd_run(&RunArgs { seq, config: config.as_deref(), seed: *seed, out }, &cli.sets)
        }
        Command::Experiment { name, config, out_dir } => {
            commands::cmd_experiment(name, config.as_deref(), out_dir, &cli.sets)
        }
        Command::Sweep { config, param, values, seq, out_dir } => commands::cmd_sweep(
            &SweepArgs { seq, config: config.as_deref(), param, values, out_dir },
            &cli.sets,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
