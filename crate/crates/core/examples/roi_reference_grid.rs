//! ROI under the reference cost settings, worked by hand and over a sweep.
//!
//! With one minute of fixed effort and half a minute of labeling per
//! sample at $400/hour, training on 80% costs $800. A classifier that finds
//! 625 more true positives than it misses earns 625 x $500, so
//! ROI = (312500 - 800) / 800 = 389.625.

use aroi_core::dataset::generate_synthetic;
use aroi_core::eval::ConfusionMatrix;
use aroi_core::roi::{compute_benefit, compute_cost, compute_roi, roi_curve, round_half_up, CostParams};
use aroi_core::sweep::{run_sweep, NoProgress, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = CostParams::reference();
    let cm = ConfusionMatrix::new(700, 40, 3000, 75);
    let cost = compute_cost(0.8, &p)?;
    let benefit = compute_benefit(&cm, &p);
    let roi = compute_roi(benefit, cost)?;
    println!(
        "cost ${cost}, benefit ${benefit}, ROI {roi} -> {:.2}",
        round_half_up(roi, 2)
    );

    let ds = generate_synthetic(1000, 0.5, 0.9, 0)?.dataset;
    let grid = roi_curve(&run_sweep(&ds, &SweepConfig::default(), &NoProgress)?, &p)?;
    println!();
    for curve in &grid.curves {
        let rois: Vec<String> = curve
            .points
            .iter()
            .map(|pt| format!("{:>8.2}", round_half_up(pt.roi, 2)))
            .collect();
        let be = curve
            .break_even
            .map_or("never".into(), |f| format!("{:.0}%", f * 100.0));
        println!("{:<20}{}  break-even {be}", curve.family.as_str(), rois.join(""));
    }
    Ok(())
}
