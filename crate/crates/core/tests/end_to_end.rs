use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use proptest::prelude::*;

use aroi_core::dataset::{generate_synthetic, ingest_csv, ColumnMap};
use aroi_core::models::{ClassifierSpec, Family};
use aroi_core::roi::{break_even, compute_benefit, compute_cost, roi_curve, CostParams};
use aroi_core::store::{RunStatus, Store};
use aroi_core::sweep::{run_sweep, CsvOptions, NoProgress, SweepConfig, SweepResult};

fn quick_config(seed: u64) -> SweepConfig {
    let mut cfg = SweepConfig::with_seed(seed);
    cfg.families = vec![
        ClassifierSpec::default_for(Family::NaiveBayes, seed),
        ClassifierSpec::default_for(Family::LinearSvc, seed),
    ];
    cfg
}

fn quick_result() -> &'static SweepResult {
    static CELL: std::sync::OnceLock<SweepResult> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let ds = generate_synthetic(300, 0.5, 0.85, 13).unwrap().dataset;
        run_sweep(&ds, &quick_config(13), &NoProgress).unwrap()
    })
}

#[test]
fn csv_in_sweep_out_matches_library_run() {
    // Raw CSV with custom headers and label words goes through ingestion,
    // the store, and a stored run; the stored grid equals a direct sweep.
    let ds = generate_synthetic(200, 0.4, 0.9, 2).unwrap().dataset;
    let mut raw = String::from("key,first,second,verdict\n");
    for p in ds.pairs() {
        let verdict = if p.label.is_positive() { "yes" } else { "no" };
        raw.push_str(&format!("{},{},{},{verdict}\n", p.id, p.text_a, p.text_b));
    }
    let map = ColumnMap::new("first", "second", "verdict")
        .with_id("key")
        .with_vocab(aroi_core::dataset::LabelVocab {
            positive: "yes".into(),
            negative: "no".into(),
        });
    let ingested = ingest_csv(raw.as_bytes(), &map, ds.name()).unwrap();
    assert_eq!(ingested.dataset.fingerprint(), ds.fingerprint());

    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let hash = store.put_dataset(&ingested.dataset).unwrap();
    let run = store.create_run(&hash, quick_config(2), None).unwrap();
    let done = store.execute_run(&run.run_id, 2).unwrap();
    assert_eq!(done.status, RunStatus::Done);

    let direct = run_sweep(&ds, &quick_config(2), &NoProgress).unwrap();
    let stored = done.result.unwrap();
    let opts = CsvOptions::default();
    assert_eq!(stored.to_csv(&opts), direct.to_csv(&opts));
    let p = CostParams::reference();
    assert_eq!(roi_curve(&stored, &p).unwrap(), roi_curve(&direct, &p).unwrap());
}

#[test]
fn worker_count_does_not_change_results() {
    let ds = generate_synthetic(240, 0.5, 0.8, 6).unwrap().dataset;
    let mut cfg = SweepConfig::with_seed(6);
    cfg.fractions = vec![0.3, 0.6, 0.9];
    let one = aroi_core::sweep::run_sweep_with_workers(&ds, &cfg, &NoProgress, 1).unwrap();
    let three = aroi_core::sweep::run_sweep_with_workers(&ds, &cfg, &NoProgress, 3).unwrap();
    let opts = CsvOptions::default();
    assert_eq!(one.to_csv(&opts), three.to_csv(&opts));
}

#[test]
fn readers_never_see_a_torn_record() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let ds = generate_synthetic(400, 0.5, 0.9, 9).unwrap().dataset;
    let hash = store.put_dataset(&ds).unwrap();
    let run = store.create_run(&hash, SweepConfig::with_seed(9), None).unwrap();

    let stop = Arc::new(AtomicBool::new(false));
    let reader = {
        let (store, id, stop) = (store.clone(), run.run_id.clone(), stop.clone());
        std::thread::spawn(move || {
            let mut reads = 0;
            let mut last = 0;
            while !stop.load(Ordering::Relaxed) {
                let rec = store.get_run(&id).expect("every read parses");
                assert!(rec.progress.done >= last);
                last = rec.progress.done;
                reads += 1;
            }
            reads
        })
    };
    let done = store.execute_run(&run.run_id, 0).unwrap();
    stop.store(true, Ordering::Relaxed);
    assert!(reader.join().unwrap() > 0);
    assert_eq!(done.status, RunStatus::Done);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_points_follow_the_formulas(
        c_resource in 1.0f64..2000.0,
        c_l in 0.0f64..10.0,
        reward in 0.0f64..5000.0,
        penalty in 0.0f64..5000.0,
        h in 1.0f64..5.0,
    ) {
        let p = CostParams { c_resource, c_l, b_reward: reward, b_penalty: penalty, h, ..CostParams::reference() };
        let result = quick_result();
        let grid = roi_curve(result, &p).unwrap();
        for curve in &grid.curves {
            prop_assert_eq!(curve.break_even, break_even(&curve.points));
            for pt in &curve.points {
                let cell = result.cell(curve.family, pt.fraction).unwrap();
                let cost = compute_cost(pt.fraction, &p).unwrap();
                let benefit = compute_benefit(cell.confusion.as_ref().unwrap(), &p);
                prop_assert_eq!(pt.cost, cost);
                prop_assert_eq!(pt.benefit, benefit);
                prop_assert!((pt.roi - (benefit - cost) / cost).abs() <= 1e-12 * pt.roi.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_rewards_flatten_roi(c_resource in 1.0f64..2000.0) {
        let p = CostParams { c_resource, b_reward: 0.0, b_penalty: 0.0, ..CostParams::reference() };
        let grid = roi_curve(quick_result(), &p).unwrap();
        for pt in grid.curves.iter().flat_map(|c| &c.points) {
            prop_assert_eq!(pt.roi, -1.0);
        }
    }
}
