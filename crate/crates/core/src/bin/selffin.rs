use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use selffin::cli::{load_config, run, Command};

#[derive(Parser)]
#[command(version, about = "Self-financing strategy laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one path and export its ledgers
    Simulate(RunArgs),
    /// Defect refinement study
    Verify(RunArgs),
    /// Hedging-error convergence
    Hedge(RunArgs),
    /// Risk-neutral martingale test
    Martingale(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Hedge(a) => (Command::Hedge, a),
        Cmd::Martingale(a) => (Command::Martingale, a),
    };
    let outcome = load_config(args.config.as_deref(), args.seed, args.paths)
        .and_then(|cfg| run(command, &cfg, &args.out));
    match outcome {
        Ok(outcome) => {
            for r in &outcome.results {
                println!("{}", r.summary());
            }
            println!("wrote {} files to {}", outcome.outputs.len(), args.out.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
