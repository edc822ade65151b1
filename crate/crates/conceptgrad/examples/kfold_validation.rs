//! Cross-validates the toxicity classifier with seeded k-fold splits, then
//! repeats the run with an augmentation batch merged into every training
//! fold to see whether the extra data moves the fold-averaged metrics.
//!
//! Run with: cargo run --release --example kfold_validation

use std::collections::BTreeSet;

use conceptgrad::augment::{generate_lexicon_free, SentenceGenerator};
use conceptgrad::corpus::{self, SynthConfig};
use conceptgrad::lexicon::{LexiconSet, Provenance};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;
use conceptgrad::nnet::TrainConfig;
use conceptgrad::report::{kfold, kfold_csv};

fn main() -> conceptgrad::Result<()> {
    let raw = corpus::synthesize(&SynthConfig::default_planted(2, 800, 0.05)?, 42)?;
    let corpus = corpus::binarize(&raw, 0.5, 0.5)?;

    let spec = ModelSpec {
        featurizer: Featurizer {
            n_gram_orders: vec![1],
            hash_dim: 4096,
            lowercase: true,
        },
        embed_dim: 64,
        hidden_dim: 64,
    };
    let config = TrainConfig {
        epochs: 15,
        batch_size: 32,
        learning_rate: 2e-5,
        lr_multiplier: 1e5,
        patience: 100,
        seed: 11,
        freeze_encoder: false,
    };

    let excluded = LexiconSet {
        set_id: 1,
        words: BTreeSet::from(["idiot".into(), "moron".into()]),
        provenance: Provenance::Fallback,
        member_sentence_count: 0,
    };
    let batch = generate_lexicon_free(&excluded, 30, &SentenceGenerator::TemplateFallback, 13)?;

    // Fold boundaries depend only on config.seed, so the before and after
    // arms see identical validation folds; the batch joins training only.
    let report = kfold(&corpus, 5, &spec, &config, Some(&batch))?;
    println!("fold sizes: {:?}", report.fold_sizes);
    for m in &report.before {
        println!(
            "fold {}: accuracy {:.4}, toxic F1 {:.4}",
            m.fold, m.accuracy, m.toxic_f1
        );
    }
    let total: usize = report.fold_sizes.iter().sum();
    assert_eq!(total, corpus.len());

    println!("\n{}", kfold_csv(&report));
    Ok(())
}
