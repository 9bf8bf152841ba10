//! Runs every scenario shipped in `scenarios/` and writes the trajectories as CSV into
//! the system temp directory.

use std::path::Path;

use eqobs::scenario::{run_simulation, write_csv, Scenario};

fn main() -> eqobs::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| eqobs::Error::Io(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    for path in files {
        let rec = run_simulation(&Scenario::load(&path)?)?;
        let out = std::env::temp_dir().join(path.with_extension("csv").file_name().unwrap());
        write_csv(&rec, &out)?;
        let last = rec.rows.last().expect("at least one row");
        println!(
            "{:<28} {:>5} rows, final error {:.3e} -> {}",
            path.file_name().unwrap().to_string_lossy(),
            rec.rows.len(),
            last.error_metric,
            out.display()
        );
    }
    Ok(())
}
