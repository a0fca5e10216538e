//! Normalize requirement text and turn pairs into TF-IDF vectors.

use aroi_core::dataset::{Label, LabeledPair};
use aroi_core::textpipe::{fit_pairs, normalize, PairMode, PipelineConfig};

fn pair(id: &str, a: &str, b: &str, label: Label) -> LabeledPair {
    LabeledPair {
        id: id.into(),
        text_a: a.into(),
        text_b: b.into(),
        label,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = vec![
        pair(
            "1",
            "The exporter writes reports to disk.",
            "Reports are rendered before exporting.",
            Label::Dependent,
        ),
        pair(
            "2",
            "Users can log in with a password.",
            "The exporter writes CSV files.",
            Label::Independent,
        ),
        pair(
            "3",
            "Rendering charts requires the data loader.",
            "The data loader parses uploaded files.",
            Label::Dependent,
        ),
        pair(
            "4",
            "Passwords are hashed before storage.",
            "Charts are rendered in the browser.",
            Label::Independent,
        ),
    ];

    let mut cfg = PipelineConfig::default();
    cfg.min_df = 1;
    println!("tokens: {:?}", normalize(&pairs[0].text_a, &cfg));

    for mode in [PairMode::Concat, PairMode::SeparateConcatVectors] {
        cfg.pair_mode = mode;
        let model = fit_pairs(&pairs, &cfg)?;
        let v = model.vectorize_pair(&pairs[2]);
        println!(
            "\n{mode:?}: {} terms, feature dim {}, pair 3 has {} non-zeros",
            model.vocabulary_size(),
            model.feature_dim(),
            v.nnz()
        );
        if let Some(idf) = model.idf("export") {
            println!("idf(export) = {idf:.4}");
        }
    }

    let mut out = Vec::new();
    fit_pairs(&pairs, &cfg)?.write_vocabulary_csv(&mut out)?;
    println!(
        "\nvocabulary export:\n{}",
        String::from_utf8(out)?.lines().take(5).collect::<Vec<_>>().join("\n")
    );
    Ok(())
}
