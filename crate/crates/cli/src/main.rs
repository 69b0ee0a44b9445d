use std::path::PathBuf;
use std::process::ExitCode;

use algebroid::Convention;
use algebroid_cli::manifest::Overrides;
use algebroid_cli::commands;
use clap::{Parser, Subcommand, ValueEnum};

/// Lie algebroid calculus and contact-structure checks on sample grids.
#[derive(Debug, Parser)]
#[command(name = "algebroid", version)]
struct Cli {
    /// Equality tolerance for vanishing residuals.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of grid points.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Seed for the grid shift.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Plain,
    Half,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check Jacobi, anchor morphism and skew-symmetry of a manifest's algebroid.
    Validate {
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Classify the manifest's almost contact structure.
    Classify {
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
    },
    /// Run the big-tangent construction over a base metric.
    Bigtangent {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { tol: cli.tol, count: cli.grid, seed: cli.seed };
    let (result, json) = match &cli.command {
        Command::Validate { manifest, json } => (commands::validate(manifest, &overrides), *json),
        Command::Classify { manifest, json, convention } => {
            let c = convention.map(|c| match c {
                ConventionArg::Plain => Convention::Plain,
                ConventionArg::Half => Convention::Half,
            });
            (commands::classify(manifest, &overrides, c), *json)
        }
        Command::Bigtangent { dim, metric, json } => (commands::bigtangent(*dim, metric, &overrides), *json),
    };
    match result {
        Ok(outcome) => {
            print!("{}", if json { outcome.to_json() } else { outcome.to_text() });
            if let Some(e) = &outcome.error {
                eprintln!("error: {}", e);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
