//! How ROI of one cell responds to each cost parameter.

use aroi_core::dataset::generate_synthetic;
use aroi_core::models::Family;
use aroi_core::roi::{sensitivity, CostParams};
use aroi_core::sweep::{run_sweep, NoProgress, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate_synthetic(500, 0.5, 0.9, 21)?.dataset;
    let mut cfg = SweepConfig::with_seed(21);
    cfg.fractions = vec![0.8];
    let result = run_sweep(&ds, &cfg, &NoProgress)?;
    let cell = result.cell(Family::LogisticRegression, 0.8).expect("cell exists");
    let p = CostParams::reference();

    let scans: [(&str, &[f64]); 4] = [
        ("c_resource", &[200.0, 400.0, 440.0, 800.0]),
        ("c_l", &[0.25, 0.5, 1.0, 2.0]),
        ("b_penalty", &[0.0, 500.0, 1000.0, 5000.0]),
        ("h", &[1.0, 2.0, 4.0]),
    ];
    for (param, values) in scans {
        let report = sensitivity(cell, &p, param, values)?;
        let row: Vec<String> = report
            .grid
            .iter()
            .map(|r| format!("{}={:.2}", r.value, r.roi))
            .collect();
        println!("{param:<11} {}", row.join("  "));
    }
    Ok(())
}
