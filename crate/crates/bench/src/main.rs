use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use arena_ad_bench::harness::{DEFAULT_CALLS, DEFAULT_MAX_DIM, DEFAULT_TOL, DEFAULT_VERIFY_DIMS};
use arena_ad_bench::{registry, run_sweep, verify, BenchError, SweepConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Time and check gradients of the arena-ad functor suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time gradient and plain evaluation over sizes 1, 2, 4, … and write CSV.
    Run {
        /// Only run this functor.
        #[arg(long)]
        functor: Option<String>,
        /// Largest input size.
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
        /// Repetitions per size and engine.
        #[arg(long, default_value_t = DEFAULT_CALLS)]
        calls: usize,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare gradients against central finite differences.
    Verify {
        #[arg(long)]
        functor: Option<String>,
        /// Largest accepted scaled gradient error.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Input sizes to check.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_VERIFY_DIMS)]
        dims: Vec<usize>,
    },
    /// Print the functor names.
    List,
}

fn run(cli: Cli) -> Result<bool, BenchError> {
    match cli.command {
        Command::Run {
            functor,
            max_dim,
            calls,
            out,
        } => {
            let config = SweepConfig {
                functor,
                max_dim,
                calls,
                progress: true,
            };
            match out {
                Some(path) => run_sweep(&config, BufWriter::new(File::create(path)?))?,
                None => run_sweep(&config, io::stdout().lock())?,
            };
            Ok(true)
        }
        Command::Verify { functor, tol, dims } => {
            let reports = verify(functor.as_deref(), &dims)?;
            let mut ok = true;
            let mut worst: Vec<(String, f64)> = Vec::new();
            for r in &reports {
                match worst.iter_mut().find(|(name, _)| *name == r.functor) {
                    Some(entry) => entry.1 = entry.1.max(r.max_error),
                    None => worst.push((r.functor.clone(), r.max_error)),
                }
            }
            for (name, err) in &worst {
                let pass = *err <= tol;
                ok &= pass;
                println!(
                    "{:<24} max error {err:.3e}  {}",
                    name,
                    if pass { "ok" } else { "FAIL" }
                );
            }
            Ok(ok)
        }
        Command::List => {
            for f in registry() {
                println!("{}", f.name());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
