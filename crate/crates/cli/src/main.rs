mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fimopt::verify::Tier;

/// Structured-FIM optimizers: experiments, comparisons, memory estimates
/// and the closed-form certification suite.
#[derive(Debug, Parser)]
#[command(name = "fimopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one optimizer and write a per-step CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train several optimizers on one problem and write a summary.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Certify every closed-form fit against brute-force minimization.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "small", value_parser = parse_tier)]
        tier: Tier,
        /// Perturb one family's fit (checks that failures are reported).
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
    /// Print the optimizer-state memory of an m×n parameter for every kind.
    Memory { m: u64, n: u64, r: Option<u64> },
}

fn parse_tier(s: &str) -> Result<Tier, String> {
    s.parse().map_err(|e: fimopt::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => commands::run(&config, &out),
        Command::Compare { config, out } => commands::compare(&config, &out),
        Command::Verify { seed, tier, fault } => commands::verify(seed, tier, fault),
        Command::Memory { m, n, r } => commands::memory(m, n, r),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
