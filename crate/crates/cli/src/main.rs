use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use pmfix_cli::commands::{self, exit_code, CommandKind, EXIT_USAGE};
use pmfix_cli::config;

/// Probabilistic metric space checks and certified fixed-point iteration.
#[derive(Parser)]
#[command(name = "pmfix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the space's triangle axiom and its t-norm.
    CheckSpace(Args),
    /// Run the configured contraction check or least-k search.
    CheckContraction(Args),
    /// Run the configured solver mode.
    Solve(Args),
    /// Run every configured section into one report.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Run config (JSON).
    config: PathBuf,
    /// Run past failed hypotheses; the result is marked uncertified.
    #[arg(long)]
    force: bool,
    /// Report or trace path, overriding the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random spaces and maps, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PMFIX_THREADS") else {
        return Ok(());
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()?;
            Ok(())
        }
        _ => bail!("PMFIX_THREADS must be an integer >= 1, got {value:?}"),
    }
}

fn execute(kind: CommandKind, args: &Args) -> Result<i32> {
    configure_threads()?;
    let loaded = config::load(&args.config, args.seed)?;
    let output = commands::run(kind, &loaded, args.force)?;
    for line in &output.summary {
        println!("{line}");
    }
    if let Some(path) = commands::write_output(&loaded, &output, args.out.as_deref())? {
        println!("wrote {}", path.display());
    }
    Ok(output.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::CheckSpace(a) => (CommandKind::CheckSpace, a),
        Command::CheckContraction(a) => (CommandKind::CheckContraction, a),
        Command::Solve(a) => (CommandKind::Solve, a),
        Command::Report(a) => (CommandKind::Report, a),
    };
    let code = match execute(kind, args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_USAGE as u8))
}
