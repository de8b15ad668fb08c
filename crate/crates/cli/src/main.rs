use clap::{Parser, Subcommand};
use georiesz_cli::config::*;
use georiesz_cli::experiments::{self, RunSettings};
use georiesz_cli::report::Outcome;
use serde::de::DeserializeOwned;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "georiesz", version, about = "Geodesic Riesz energies on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; read from standard input when absent or `-`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV outputs; the report goes to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Gegenbauer coefficient table and sign-law verdict.
    Coeffs,
    /// Gap between continuous and optimized discrete energies over a size grid.
    GapScan,
    /// Energy orderings of uniform, discrete, symmetric and perturbed measures.
    Extremizers,
    /// Stolarsky identity checks.
    Stolarsky,
    /// Spherical-cap discrepancy scan and method comparison.
    Cap,
    /// Coefficient decay exponents.
    Decay,
    /// Multi-start energy optimization.
    Optimize,
    /// Point-set generation.
    Gen,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] georiesz::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Core(georiesz::Error::Domain(_) | georiesz::Error::Unsupported(_) | georiesz::Error::Parse(_)) => 2,
            Self::Core(_) | Self::Io(_) => 1,
        }
    }
}

fn read_config<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<T, CliError> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Config(e.to_string()))?;
            s
        }
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: &Cli, settings: RunSettings) -> Result<Outcome, CliError> {
    let c = &cli.config;
    let outcome = match cli.command {
        Command::Coeffs => experiments::run_coeffs(&read_config::<CoeffsConfig>(c)?, settings)?,
        Command::GapScan => experiments::run_gap_scan(&read_config::<GapScanConfig>(c)?, settings)?,
        Command::Extremizers => experiments::run_extremizers(&read_config::<ExtremizersConfig>(c)?, settings)?,
        Command::Stolarsky => experiments::run_stolarsky(&read_config::<StolarskyConfig>(c)?, settings)?,
        Command::Cap => experiments::run_cap(&read_config::<CapConfig>(c)?, settings)?,
        Command::Decay => experiments::run_decay(&read_config::<DecayConfig>(c)?, settings)?,
        Command::Optimize => experiments::run_optimize(&read_config::<OptimizeConfig>(c)?, settings)?,
        Command::Gen => experiments::run_gen(&read_config::<GenConfig>(c)?, settings)?,
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        Some(w) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            w
        }
        None => rayon::current_num_threads(),
    };
    let settings = RunSettings { seed: cli.seed, workers };
    let outcome = match run(&cli, settings) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &cli.out {
        Some(dir) => outcome.write_to(dir),
        None => serde_json::to_string_pretty(&outcome.report)
            .map_err(std::io::Error::other)
            .map(|s| println!("{s}")),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if !cli.quiet {
        eprint!("{}", outcome.report.summary());
    }
    if outcome.report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
