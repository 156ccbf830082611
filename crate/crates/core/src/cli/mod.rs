//! Command-line experiment runner.
//!
//! Exit codes: 0 on success, 2 on configuration or usage errors, 3 on runtime
//! failures.

pub mod compare;
pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::cache::{write_atomic, Cache};

pub use config::{Config, ExperimentKind, LoadedConfig};
pub use experiments::{execute, RunOptions, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// `line` is 1-based; 0 when the file could not be read at all.
    #[error("config:{line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "filtlab", version, about = "Filtration, transport and scaled-entropy experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config.
    Run(RunArgs),
    /// Join result CSVs that share a schema and report differences.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file (alternative to --config).
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_file: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: the config's output.dir, else ./results].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides seeds.master.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Loads, validates and runs a config file with the given overrides.
pub fn run(args: &RunArgs) -> Result<RunReport, CliError> {
    let path = args
        .config
        .as_ref()
        .or(args.config_file.as_ref())
        .ok_or_else(|| CliError::Usage("a config file is required".into()))?;
    let mut loaded = LoadedConfig::from_path(path)?;
    loaded.apply_seed(args.seed);
    loaded.validate()?;
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| {
            loaded
                .config
                .output
                .as_ref()
                .and_then(|o| o.dir.as_ref())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("results"));
    let opts = RunOptions {
        out_dir,
        cache: args.cache_dir.as_ref().map(Cache::new),
        verbose: args.verbose,
    };
    run_with_threads(&loaded.config, &loaded.stem, &opts, args.threads)
}

/// Runs a validated config on a pool of `threads` workers (the global pool
/// when `None`).
pub fn run_with_threads(
    config: &Config,
    stem: &str,
    opts: &RunOptions,
    threads: Option<usize>,
) -> Result<RunReport, CliError> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {t} workers: {e}")))?;
            Ok(pool.install(|| execute(config, stem, opts))?)
        }
        None => Ok(execute(config, stem, opts)?),
    }
}

fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let table = compare::compare(&args.files)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(e.into());
    w.write_record(&table.columns).map_err(io)?;
    for r in &table.rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(crate::Error::Io(e.into_error())))?;
    match &args.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Runtime(e.into()))?,
    }
    Ok(())
}

/// Entry point of the `filtlab` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a).map(|report| {
            if a.verbose {
                for f in &report.files {
                    eprintln!("[filtlab] output {}", f.display());
                }
            }
        }),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("filtlab: {e}");
            e.exit_code()
        }
    }
}
