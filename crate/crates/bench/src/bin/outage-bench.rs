use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use outage_bench::export::{read_records, write_records, write_summary};
use outage_bench::{aggregate, run_sweep, ExperimentConfig, SweepOptions};

#[derive(Parser)]
#[command(version, about = "Outage-constrained power loading experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a configuration and write one record per solve.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, env = "OUTAGE_THREADS")]
        threads: Option<usize>,
        /// Monte Carlo samples per user for certifying successes.
        #[arg(long)]
        mc_certify: Option<usize>,
    },
    /// Reduce sweep records to a summary table.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        common_subset: bool,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Sweep { config, out, format: Format::Csv, threads, mc_certify } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            if threads == Some(0) {
                anyhow::bail!("--threads must be positive");
            }
            let opts = SweepOptions { threads, mc_certify, ..Default::default() };
            let records = run_sweep(&cfg, opts).context("sweep failed")?;
            write_records(&out, &records)?;
            let ok = records.iter().filter(|r| r.success).count();
            eprintln!("{} records, {ok} successful, written to {}", records.len(), out.display());
        }
        Command::Aggregate { input, out, common_subset } => {
            let records = read_records(&input)?;
            let rows = aggregate(&records, common_subset)?;
            write_summary(&out, &rows)?;
            eprintln!("{} summary rows written to {}", rows.len(), out.display());
        }
    }
    Ok(())
}
