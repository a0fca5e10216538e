//! Sweep every family over growing training fractions and print the grid
//! as CSV, plus the best cell by F1.

use aroi_core::dataset::generate_synthetic;
use aroi_core::sweep::{best_cell, run_sweep, BestBy, CsvOptions, SweepCell, SweepConfig, SweepObserver};

struct Ticker;

impl SweepObserver for Ticker {
    fn cell_done(&self, cell: &SweepCell, done: usize, total: usize) {
        eprintln!("[{done:>2}/{total}] {} @ {}", cell.family, cell.fraction);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate_synthetic(600, 0.5, 0.8, 3)?.dataset;
    let cfg = SweepConfig::with_seed(3);
    let result = run_sweep(&ds, &cfg, &Ticker)?;

    print!(
        "{}",
        result.to_csv(&CsvOptions {
            include_timing: true,
            manifest_sha256: None
        })
    );
    let best = best_cell(&result, &BestBy::F1)?;
    println!(
        "\nbest F1: {} at {:.0}% ({} training rows) = {:.3}",
        best.family,
        best.fraction * 100.0,
        best.n_train_used,
        best.metrics.as_ref().map_or(0.0, |m| m.f1)
    );
    Ok(())
}
