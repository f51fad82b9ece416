//! `hardedge`: file-emitting front end for the hard-edge kernel library.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
//! error, 3 numerical tolerance failure (including a failed χ² agreement).

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, SizeList};

#[derive(Debug, Parser)]
#[command(name = "hardedge", version, about = "Hard-edge boundary profiles for radial normal matrix ensembles")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed (overrides `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ensemble sizes, comma separated (overrides `n`)
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate φ and H on the configured grid
    Hfun,
    /// Rescaled exact, truncated, quasipolynomial and limit profiles
    Profile,
    /// Norms, closeness and stopping times of the edge quasipolynomials
    Quasi,
    /// Run the invariant suite and write a pass/fail report
    Verify,
    /// Metropolis sampling and comparison with the kernel intensity
    Sample,
    /// Sup-error convergence study against H
    Converge,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
    VerifyFailed(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::VerifyFailed(k) => write!(f, "{k} verification check(s) failed"),
        }
    }
}

impl From<hardedge_core::Error> for CliError {
    fn from(e: hardedge_core::Error) -> Self {
        use hardedge_core::Error as E;
        match e {
            E::InvalidPotential(_) | E::InvalidArgument(_) => CliError::Config(e.to_string()),
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = &cli.n {
        cfg.n = SizeList::Many(n.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli)?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    match cli.command {
        Command::Hfun => commands::hfun(&cfg),
        Command::Profile => commands::profile(&cfg),
        Command::Quasi => commands::quasi(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Sample => commands::sample(&cfg),
        Command::Converge => commands::converge(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hardedge: {e}");
            ExitCode::from(e.code())
        }
    }
}
