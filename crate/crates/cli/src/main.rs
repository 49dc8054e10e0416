//! Batch command-line front end for the autoencoder: train on triple files,
//! evaluate the zero-shot and cold-start heads, export recommendations.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 usage error,
//! 3 data error (unreadable or malformed files), 4 numeric failure.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "llae",
    version,
    about = "Low-rank linear autoencoder: closed-form training, zero-shot classification, cold-start recommendation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an encoder from behavior and attribute triple files
    Train(commands::train::TrainArgs),
    /// Zero-shot classification accuracy on held-out features
    EvalZsl(commands::eval_zsl::EvalZslArgs),
    /// Cold-start ranking metrics for held-out users
    EvalCsr(commands::eval_csr::EvalCsrArgs),
    /// Export top-k recommendations for new users
    Recommend(commands::recommend::RecommendArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::EvalZsl(args) => commands::eval_zsl::run(args),
        Command::EvalCsr(args) => commands::eval_csr::run(args),
        Command::Recommend(args) => commands::recommend::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
