//! Train all five classifier families on one split and compare them, with
//! 10-fold cross-validation on the training rows.

use aroi_core::dataset::{generate_synthetic, split, SplitSpec};
use aroi_core::eval::{cross_validate, evaluate, metrics, CvConfig};
use aroi_core::models::{fit, ClassifierSpec, Family};
use aroi_core::textpipe::{fit_pairs, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(800, 0.5, 0.85, 11)?;
    let (train, test) = split(&corpus.dataset, &SplitSpec::default())?;
    let vectorizer = fit_pairs(train.pairs(), &PipelineConfig::default())?;
    let xtr: Vec<_> = train.pairs().iter().map(|p| vectorizer.vectorize_pair(p)).collect();
    let xte: Vec<_> = test.pairs().iter().map(|p| vectorizer.vectorize_pair(p)).collect();
    let (ytr, yte) = (train.labels(), test.labels());

    println!(
        "{:<20} {:>6} {:>6} {:>6} {:>6} {:>9} {:>8}",
        "family", "f1", "prec", "recall", "acc", "cv acc", "fit ms"
    );
    for family in Family::ALL {
        let spec = ClassifierSpec::default_for(family, 11);
        let model = fit(&spec, &xtr, &ytr)?;
        let cm = evaluate(&model, &xte, &yte)?;
        let m = metrics(&cm)?;
        let cv = cross_validate(
            &spec,
            &xtr,
            &ytr,
            &CvConfig {
                seed: 11,
                ..CvConfig::default()
            },
        )?;
        println!(
            "{:<20} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>5.3}±{:.2} {:>8.1}",
            family.as_str(),
            m.f1,
            m.precision,
            m.recall,
            m.accuracy,
            cv.mean,
            cv.std,
            model.train_seconds * 1000.0
        );
    }
    println!(
        "\nbest achievable accuracy on this corpus: {:.3}",
        corpus.spec.bayes_accuracy()
    );
    Ok(())
}
