//! Runs the full property suite over the catalog and prints one line per property.

use eqobs::checks::{run_checks, CheckOptions, Target};

fn main() -> eqobs::Result<()> {
    let opts = CheckOptions {
        samples: 100,
        seed: 7,
        ..Default::default()
    };
    let report = run_checks(Target::All, &opts)?;
    for r in &report.results {
        println!("{r}");
    }
    let trunc = run_checks(Target::Truncated, &opts)?;
    for r in &trunc.results {
        println!("{r}");
    }
    println!("catalog suite: {}", if report.passed() { "pass" } else { "fail" });
    Ok(())
}
