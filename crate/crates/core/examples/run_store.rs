//! Persist a dataset and a sweep run, then reopen the store and recompute
//! ROI from the stored result.

use aroi_core::dataset::generate_synthetic;
use aroi_core::models::{ClassifierSpec, Family};
use aroi_core::roi::{roi_curve, CostParams};
use aroi_core::store::Store;
use aroi_core::sweep::SweepConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join(format!("aroi-example-{}", std::process::id()));
    let store = Store::open(&root)?;
    let ds = generate_synthetic(300, 0.5, 0.9, 8)?.dataset;
    let hash = store.put_dataset(&ds)?;

    let cfg = SweepConfig {
        fractions: vec![0.25, 0.5, 1.0],
        families: vec![ClassifierSpec::default_for(Family::NaiveBayes, 8)],
        persist_models: true,
        ..SweepConfig::default()
    };
    let run = store.create_run(&hash, cfg, None)?;
    let done = store.execute_run(&run.run_id, 0)?;
    println!(
        "run {} finished {:?} ({}/{} cells)",
        done.run_id, done.status, done.progress.done, done.progress.total
    );

    let reopened = Store::open(&root)?;
    let record = reopened.get_run(&run.run_id)?;
    let grid = roi_curve(record.result.as_ref().expect("finished run"), &CostParams::reference())?;
    reopened.save_roi_snapshot(&run.run_id, &grid)?;
    let model = reopened.get_model(&run.run_id, Family::NaiveBayes, 1.0)?;
    println!("stored model: {} trained on {} features", model.family(), model.dim);
    println!("sweep CSV at {}", reopened.sweep_csv_path(&run.run_id)?.display());

    std::fs::remove_dir_all(&root)?;
    Ok(())
}
