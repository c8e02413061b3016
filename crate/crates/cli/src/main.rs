//! Command-line front end: design, simulate, analyze and reproduce the built-in examples.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "dkf", version, about = "Distributed steady-state Kalman filtering over sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the design pipeline and write design.json.
    Design(RunArgs),
    /// Design, simulate and analyze; writes trace.csv, mse.csv and covariance.json.
    Simulate(RunArgs),
    /// Reproduce a built-in example and print its report.
    Reproduce {
        #[arg(value_parser = ["example1", "example2"])]
        example: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Feasibility verdicts only.
    Check(RunArgs),
}

#[derive(Args, Clone, Default)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Consensus rounds per sampling period.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Per-edge link failure probability.
    #[arg(long)]
    pub drop: Option<f64>,
    /// Estimator variant: alg1, alg2 or auto.
    #[arg(long)]
    pub variant: Option<String>,
    /// Link strategy: static or bernoulli.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Covariance route: dense, structured or auto.
    #[arg(long, default_value = "auto")]
    pub route: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(a) => commands::design(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reproduce { example, args } => commands::reproduce(&example, &args),
        Command::Check(a) => commands::check(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
