//! Drive an active-learning session by hand, then compare sampling
//! strategies with simulated annotators.

use std::collections::BTreeMap;

use aroi_core::active::{simulate, ALConfig, ActiveSession, Sampling};
use aroi_core::dataset::{generate_synthetic, Label};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate_synthetic(1000, 0.5, 0.8, 4)?.dataset;

    // Manual loop: the "annotator" answers from the true labels.
    let cfg = ALConfig {
        annotation_budget: 30,
        ..ALConfig::default()
    };
    let mut session = ActiveSession::start(&ds, &cfg)?;
    let truth = session.oracle();
    println!("seed set F1 {:.3}", session.state().initial_metrics.f1);
    while let Some(batch) = session.next_batch()? {
        let answers: BTreeMap<String, Label> = batch.items.iter().map(|it| (it.id.clone(), truth[&it.id])).collect();
        let lowest = batch.items.first().map_or(0.0, |it| it.confidence);
        let state = session.submit_labels(&answers)?;
        println!(
            "iteration {} labeled {} (lowest confidence {lowest:.2}) -> F1 {:.3}",
            state.iteration,
            answers.len(),
            state.history.last().unwrap().f1
        );
    }
    println!("stopped: {:?}\n", session.state().stopped);

    for sampling in [Sampling::LeastConfidence, Sampling::Margin, Sampling::Random] {
        let cfg = ALConfig {
            sampling,
            annotation_budget: 500,
            max_iterations: 50,
            ..ALConfig::default()
        };
        let sim = simulate(&ds, &cfg)?;
        let reach = sim.annotations_to_reach(0.85).map_or("never".into(), |n| n.to_string());
        println!(
            "{sampling:?}: F1 0.85 after {reach} annotations, final F1 {:.3}",
            sim.curve.last().unwrap().f1
        );
    }
    Ok(())
}
