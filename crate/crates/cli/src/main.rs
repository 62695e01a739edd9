//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 configuration error, 3 experiment cell
//! failure (partial results written), 4 output I/O error.

use clap::{Args, Parser, Subcommand};
use hexmesh_cli::config::{key_reference, parse_config, CommandKind};
use hexmesh_cli::runner::{execute, write_atomic, RunError, RunOutput};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hexmesh", version)]
#[command(
    about = "Capacity-scaling experiments and deployment planning for hexagonal mesh networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (key = value sections).
    #[arg(long)]
    config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Replace the config's seed sweep with one seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = available parallelism).
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-tier throughput sweeps (short-hop / long-hop schemes).
    SingleTier(RunArgs),
    /// Multi-tier hierarchy simulation under MIMO schemes.
    MultiTier {
        #[command(flatten)]
        args: RunArgs,
        /// Optional long-format per-tier CSV.
        #[arg(long)]
        tiers_out: Option<PathBuf>,
    },
    /// Scalability-condition check for a set of scaling orders.
    Check(RunArgs),
    /// Per-tier deployment parameter table from a tier-1 anchor.
    Plan(RunArgs),
    /// Interference-bound verification over lattice grids and seeds.
    Bounds(RunArgs),
    /// Print the configuration key reference.
    Keys,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args, tiers_out) = match &cli.command {
        Command::SingleTier(a) => (CommandKind::SingleTier, a, None),
        Command::MultiTier { args, tiers_out } => (CommandKind::MultiTier, args, tiers_out.clone()),
        Command::Check(a) => (CommandKind::Check, a, None),
        Command::Plan(a) => (CommandKind::Plan, a, None),
        Command::Bounds(a) => (CommandKind::Bounds, a, None),
        Command::Keys => {
            print!("{}", key_reference());
            return ExitCode::SUCCESS;
        }
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };

    let config = match parse_config(kind, &text) {
        Ok(c) => c,
        Err(violations) => {
            eprintln!("invalid configuration ({} problems):", violations.len());
            for v in violations {
                eprintln!("  {v}");
            }
            return ExitCode::from(2);
        }
    };

    let (output, cell_failures) = match execute(&config, &text, args.parallel, args.seed) {
        Ok(out) => (out, None),
        Err(RunError::Config(violations)) => {
            eprintln!("invalid configuration ({} problems):", violations.len());
            for v in violations {
                eprintln!("  {v}");
            }
            return ExitCode::from(2);
        }
        Err(RunError::Cells { failures, partial }) => (partial, Some(failures)),
        Err(RunError::Io(e)) => {
            eprintln!("i/o error: {e}");
            return ExitCode::from(4);
        }
    };

    if let Err(e) = emit(&output, args, tiers_out) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(4);
    }

    match cell_failures {
        None => ExitCode::SUCCESS,
        Some(failures) => {
            eprintln!(
                "{} experiment cell(s) failed; partial results marked in the output:",
                failures.len()
            );
            for f in failures {
                eprintln!("  {f}");
            }
            ExitCode::from(3)
        }
    }
}

fn emit(output: &RunOutput, args: &RunArgs, tiers_out: Option<PathBuf>) -> std::io::Result<()> {
    write_atomic(&args.out, output.csv.as_bytes())?;
    if let (Some(path), Some(tier_csv)) = (tiers_out, &output.tier_csv) {
        write_atomic(&path, tier_csv.as_bytes())?;
    }
    if let Some(table) = &output.table {
        print!("{table}");
    }
    eprintln!("wrote {} rows to {}", output.rows, args.out.display());
    Ok(())
}
