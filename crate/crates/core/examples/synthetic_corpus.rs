//! Generate a synthetic requirement-pair corpus and inspect it.
//!
//! ```sh
//! cargo run -p aroi-core --example synthetic_corpus -- 500 0.9 7
//! ```

use aroi_core::dataset::{generate_synthetic, split, summarize, SplitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let signal: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.9);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let corpus = generate_synthetic(n, 0.5, signal, seed)?;
    let summary = summarize(&corpus.dataset);
    println!(
        "{} rows, {} dependent / {} independent",
        summary.n, summary.class_counts.dependent, summary.class_counts.independent
    );
    println!(
        "vocabulary: {} distinct tokens, median tokens per text {}",
        summary.vocabulary_size, summary.tokens_a.p50
    );
    println!("best achievable accuracy: {:.3}", corpus.spec.bayes_accuracy());
    println!("content hash: {}", corpus.dataset.fingerprint());

    for pair in corpus.dataset.pairs().iter().take(3) {
        let planted = corpus
            .planted
            .keyword_label(&format!("{} {}", pair.text_a, pair.text_b));
        println!(
            "\n{} [{}] keyword says {:?}\n  a: {}\n  b: {}",
            pair.id, pair.label, planted, pair.text_a, pair.text_b
        );
    }

    let (train, test) = split(&corpus.dataset, &SplitSpec::default())?;
    println!("\nstratified split: {} train / {} test", train.n(), test.n());
    Ok(())
}
