use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod export;

use commands::Overrides;

/// Numerical driver for anisotropic support-function curvature flows.
#[derive(Debug, Parser)]
#[command(name = "orlicz-flow", version)]
struct Cli {
    /// Write artifacts here instead of the config's [output] directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Override the grid resolution (every node count becomes N).
    #[arg(long, global = true, value_name = "N")]
    seed_grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured body; exit 2 on breakdown, 3 if not converged.
    Run { config: PathBuf },
    /// Check the geometric identities on the configured initial body.
    Check { config: PathBuf },
    /// Write the polar dual of the configured initial body to final_u_dual.csv.
    Polar { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { output_dir: cli.output_dir, seed_grid: cli.seed_grid };
    let outcome = match &cli.command {
        Command::Run { config } => commands::run(config, &overrides),
        Command::Check { config } => commands::check(config, &overrides),
        Command::Polar { config } => commands::polar(config, &overrides),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
