//! `specreg`: experiment runner for the spectral-regularization library.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical failure, 4 threshold failure under `--check`.

mod config;
mod emit;
mod runner;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, FilterConfig};
use runner::{default_rho_primes, run_experiment};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numerical(String),
    CheckFailed(Vec<String>),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::CheckFailed(items) => {
                writeln!(f, "checks failed:")?;
                for item in items {
                    writeln!(f, "  - {item}")?;
                }
                Ok(())
            }
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "specreg", version, about = "Spectral-regularization experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the JSON experiment config.
        config: PathBuf,
        /// Evaluate acceptance thresholds; exit 4 if any fail.
        #[arg(long)]
        check: bool,
        /// Override the config's output directory.
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        /// Worker threads for trials (default: available parallelism).
        /// Results do not depend on this value.
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Verify the two filter axioms for a single filter on a grid.
    FilterCheck {
        /// One of: tikhonov, landweber, truncation.
        filter: String,
        /// Kernel bound defining the x-range of the suprema.
        #[arg(long, default_value_t = 1.0)]
        kappa2: f64,
        /// Landweber step size (default: 1/kappa2).
        #[arg(long)]
        tau: Option<f64>,
    },
}

fn main() -> ExitCode {
    // Trial-level parallelism lives in our worker pool; keep BLAS
    // single-threaded unless the caller says otherwise.
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            check,
            output_dir,
            threads,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", config.display())))?;
            let seed_override = match std::env::var("SPECREG_SEED") {
                Ok(v) => Some(v.parse::<u64>().map_err(|_| {
                    CliError::Config(format!("SPECREG_SEED: expected a u64, got `{v}`"))
                })?),
                Err(_) => None,
            };
            let mut resolved = ExperimentConfig::from_json(&text)?.resolve(seed_override)?;
            if let Some(dir) = output_dir {
                resolved.output_dir = Some(dir);
            }
            let out_dir = resolved.output_dir.clone().expect("resolved");

            let run = || run_experiment(&resolved, &out_dir, check);
            let outcome = match threads {
                Some(n) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?;
                    pool.install(run)?
                }
                None => run()?,
            };
            if check && !outcome.check_failures.is_empty() {
                return Err(CliError::CheckFailed(outcome.check_failures));
            }
            println!("results written to {}", out_dir.display());
            Ok(())
        }
        Command::FilterCheck {
            filter,
            kappa2,
            tau,
        } => {
            let filter_config = match (FilterConfig::parse_name(&filter)?, tau) {
                (FilterConfig::Landweber { .. }, tau) => FilterConfig::Landweber { tau },
                (other, None) => other,
                (_, Some(_)) => {
                    return Err(CliError::Config(
                        "--tau only applies to the landweber filter".into(),
                    ))
                }
            };
            let spec = filter_config.to_filter(kappa2)?;
            let lambda_grid = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
                .iter()
                .map(|l| l * kappa2)
                .collect::<Vec<_>>();
            let rho_primes = default_rho_primes(&spec);
            let report =
                specreg::verify_filter_axioms(&spec, &lambda_grid, kappa2, 64, &rho_primes)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            println!(
                "{}: axiom 1 sup = {:.9} (bound E = {})",
                spec.name(),
                report.max_lhs_axiom1,
                report.e_bound
            );
            for sup in &report.max_lhs_axiom2 {
                println!(
                    "  axiom 2, rho' = {}: sup = {:.9} (bound omega = {})",
                    sup.rho_prime, sup.max_lhs, sup.bound
                );
            }
            if report.pass {
                println!("PASS");
                Ok(())
            } else {
                Err(CliError::CheckFailed(vec![format!(
                    "{} violates the filter axioms",
                    spec.name()
                )]))
            }
        }
    }
}
