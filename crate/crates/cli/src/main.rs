//! `mpae` command-line runner.

mod compare;
mod export;
mod output;
mod run;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpae::oracle::DEFAULT_ENUMERATION_CAP;

/// Multi-population architecture search over binary cell genomes.
#[derive(Parser)]
#[command(name = "mpae", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured searcher and write its artifacts.
    Search {
        /// TOML config; optional with --resume.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (env MPAE_OUTPUT_DIR, default ./mpae-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override (env MPAE_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Also keep a numbered checkpoint every N generations (0 = never).
        #[arg(long, default_value_t = 0)]
        keep_checkpoints: u64,
    },
    /// Enumerate a small search space and write its true Pareto front.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run a matrix of configs and seeds and write comparison tables.
    Compare {
        /// Two or more configs.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Seeds as a list (`0,1,2`) or a half-open range (`0..20`).
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Dump genotypes and archives of a checkpoint, or check an export.
    Export {
        #[arg(long, required_unless_present = "check")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ExportFormat::Json)]
        format: ExportFormat,
        /// Output file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-import a JSON export and report its state hash.
        #[arg(long, conflicts_with = "checkpoint")]
        check: Option<PathBuf>,
    },
    /// Write a tabular benchmark generated from the synthetic landscape.
    GenTable {
        #[arg(long)]
        config: PathBuf,
        /// Table file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search {
            config,
            out,
            seed,
            threads,
            resume,
            keep_checkpoints,
        } => mpae::par::with_threads(threads, || {
            run::cmd_search(run::SearchArgs {
                config,
                out,
                seed,
                resume,
                keep_checkpoints,
            })
        }),
        Command::Oracle {
            config,
            out,
            cap,
            threads,
        } => mpae::par::with_threads(threads, || tables::cmd_oracle(&config, out, cap)),
        Command::Compare {
            configs,
            seeds,
            out,
            cap,
            threads,
        } => mpae::par::with_threads(threads, || compare::cmd_compare(&configs, &seeds, out, cap)),
        Command::Export {
            checkpoint,
            format,
            out,
            check,
        } => match (checkpoint, check) {
            (_, Some(path)) => export::cmd_check(&path),
            (Some(path), None) => export::cmd_export(&path, format, out.as_deref()),
            (None, None) => unreachable!("clap requires one of them"),
        },
        Command::GenTable {
            config,
            out,
            cap,
            threads,
        } => mpae::par::with_threads(threads, || tables::cmd_gen_table(&config, &out, cap)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = output::exit_code(&e);
            eprintln!("{}", output::error_record(&e, code));
            ExitCode::from(code)
        }
    }
}
