//! `montmort`: counts, probabilities, tables, sampling and checks for
//! rectangular ℓ-matchings.

mod commands;
mod ranges;
mod record;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use record::OutputRecord;

#[derive(Parser, Debug)]
#[command(
    name = "montmort",
    version,
    about = "Exact counting for rectangular ℓ-matchings"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone, Copy)]
struct ShapeArgs {
    /// People.
    #[arg(long)]
    n: usize,
    /// Hats; defaults to n.
    #[arg(long)]
    m: Option<usize>,
    /// Matched pairs; defaults to n.
    #[arg(long)]
    l: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Matching counts; `--fixed-points K` adds those with exactly K.
    Count {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long = "fixed-points", value_name = "K")]
        fixed_points: Option<usize>,
    },
    /// Probability that a uniform matching has no fixed point.
    Prob {
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Exact fixed-point law, its Poisson limit and their total variation.
    Pmf {
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Rencontres tables over a parameter grid.
    Table {
        #[arg(long, value_parser = ["perm", "rect", "partial", "unified"])]
        family: String,
        /// Inclusive ranges such as `n=0..6,m=6..8,l=2`.
        #[arg(long)]
        ranges: String,
    },
    /// Monte Carlo fixed-point frequencies.
    Sample {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample conditionally on having no fixed point, by rejection.
        #[arg(long)]
        fpf: bool,
        /// Worker threads; the output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare every formula with brute-force enumeration.
    Verify {
        #[arg(long = "max-m", default_value_t = 8)]
        max_m: usize,
        /// Largest number of matchings enumerated for a single shape.
        #[arg(long, default_value_t = montmort::oracle::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Check library values against an OEIS b-file.
    OeisCheck {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 26)]
        terms: usize,
        /// Use only the cache and the vendored snapshots.
        #[arg(long)]
        offline: bool,
        /// b-file cache directory; overrides the environment variable.
        #[arg(long = "data-dir", value_name = "PATH")]
        data_dir: Option<PathBuf>,
        /// A configured mapping name for the id, or a mapping kind.
        #[arg(long)]
        mapping: Option<String>,
        /// Mapping configuration file to use instead of the built-in one.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or a violated precondition.
    Invalid(String),
    /// A check ran and found disagreements; the record is still printed.
    Mismatch(Box<OutputRecord>, String),
    Io(String),
}

impl From<montmort::Error> for Failure {
    fn from(e: montmort::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn emit(record: &OutputRecord, format: Format) -> std::io::Result<()> {
    let text = match format {
        Format::Json => record.to_json(),
        Format::Csv => record.to_csv(),
        Format::Text => record.to_text(),
    };
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()
}

fn diagnose(msg: &str) {
    let line = msg.lines().next().unwrap_or_default().trim();
    eprintln!("montmort: {line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    diagnose("a subcommand is required; see --help");
                    ExitCode::from(1)
                }
                _ => {
                    diagnose(e.to_string().trim_start_matches("error: "));
                    ExitCode::from(1)
                }
            };
        }
    };
    let (record, code) = match commands::run(&cli.command) {
        Ok(record) => (Some(record), 0),
        Err(Failure::Mismatch(record, msg)) => {
            diagnose(&msg);
            (Some(*record), 2)
        }
        Err(Failure::Invalid(msg)) => {
            diagnose(&msg);
            (None, 1)
        }
        Err(Failure::Io(msg)) => {
            diagnose(&msg);
            (None, 3)
        }
    };
    if let Some(record) = record {
        if let Err(e) = emit(&record, cli.format) {
            diagnose(&format!("cannot write output: {e}"));
            return ExitCode::from(3);
        }
    }
    ExitCode::from(code)
}
