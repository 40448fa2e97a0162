use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod common;
mod gen;
mod replay;
mod rollout;
mod serve;
mod stats;
mod validate;

use common::Usage;

#[derive(Debug, Parser)]
#[command(name = "arcle", version, about = "ARC grid-editing environment tools")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check an ARC data root (training/ and evaluation/).
    Validate {
        data_root: PathBuf,
    },
    /// Task counts and dimension/color histograms of a data root.
    Stats {
        data_root: PathBuf,
    },
    /// Random-policy rollout over rectangle actions.
    Rollout(rollout::RolloutArgs),
    /// Re-execute a trace file and check every grid digest.
    Replay(replay::ReplayArgs),
    /// Write generated tasks (random or color curriculum) as task files.
    Gen(gen::GenArgs),
    /// Run the HTTP session service.
    Serve(serve::ServeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { data_root } => validate::run(&data_root, cli.json),
        Command::Stats { data_root } => stats::run(&data_root, cli.json),
        Command::Rollout(args) => rollout::run(args, cli.json),
        Command::Replay(args) => replay::run(args, cli.json),
        Command::Gen(args) => gen::run(args, cli.json),
        Command::Serve(args) => serve::run(args),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
