use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eqobs::catalog::SystemKind;
use eqobs::checks::{run_checks, CheckOptions, Target, TRUNCATED_ID};
use eqobs::scenario::{run_simulation, write_csv, Scenario};
use eqobs::Error;

#[derive(Parser)]
#[command(
    name = "eqobs",
    version,
    about = "Equivariant observer toolkit: property checks and scenario simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seeded property suite; exits 0 when every property holds.
    Check {
        /// Catalog system id, `s2_truncated`, or `all`.
        #[arg(long, default_value = "all")]
        system: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Replaces every upper-bound tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, env = "EQOBS_SEED", default_value_t = 0)]
        seed: u64,
        /// Evaluate samples on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Simulate a scenario file and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List catalog systems.
    List,
}

fn fail(e: Error) -> ExitCode {
    eprintln!("eqobs: {e}");
    match e {
        Error::Usage(_) | Error::Config { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            system,
            samples,
            tol,
            seed,
            serial,
        } => {
            let target: Target = match system.parse() {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let opts = CheckOptions {
                samples,
                tol,
                seed,
                parallel: !serial,
            };
            match run_checks(target, &opts) {
                Ok(report) => {
                    for r in &report.results {
                        println!("{r}");
                    }
                    let ok = report.results.iter().filter(|r| r.passed).count();
                    println!(
                        "{ok}/{} properties passed (seed {seed}, {samples} samples)",
                        report.results.len()
                    );
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Simulate { scenario, out } => {
            // an unreadable scenario file is a usage problem, a failed write is not
            let result = Scenario::load(&scenario)
                .map_err(|e| match e {
                    Error::Io(m) => Error::Usage(m),
                    other => other,
                })
                .and_then(|sc| run_simulation(&sc))
                .and_then(|rec| write_csv(&rec, &out).map(|_| rec.rows.len()));
            match result {
                Ok(rows) => {
                    eprintln!("wrote {rows} rows to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::List => {
            for k in SystemKind::ALL {
                println!("{:<14} {}", k.id(), k.summary());
            }
            println!("{TRUNCATED_ID:<14} check-only: sphere system with input restricted to one axis (not closed)");
            ExitCode::SUCCESS
        }
    }
}
