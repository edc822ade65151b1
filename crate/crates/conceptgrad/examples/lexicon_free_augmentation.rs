//! Generates toxic training sentences that avoid every word in a curated
//! lexicon set, verifies the batch leaks none of them, and retrains the
//! classifier with and without the batch on identical seeds to isolate the
//! effect of the added data.
//!
//! Run with: cargo run --release --example lexicon_free_augmentation

use std::collections::BTreeSet;

use conceptgrad::augment::{
    generate_lexicon_free, merge, retrain_and_compare, validate_lexicon_free, SentenceGenerator,
};
use conceptgrad::corpus::{self, SplitSpec, SynthConfig};
use conceptgrad::lexicon::{LexiconSet, Provenance};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;
use conceptgrad::nnet::TrainConfig;
use conceptgrad::report::before_after_csv;

fn main() -> conceptgrad::Result<()> {
    let raw = corpus::synthesize(&SynthConfig::default_planted(2, 1_000, 0.05)?, 42)?;
    let binarized = corpus::binarize(&raw, 0.5, 0.5)?;
    let (train, val, test) = corpus::split(
        &binarized,
        &SplitSpec {
            train_fraction: 0.7,
            val_fraction: 0.15,
            test_fraction: 0.15,
            balance_classes: false,
            seed: 7,
        },
    )?;

    // Suppose curation flagged these insult words as over-attributed; the
    // augmentation must stay toxic while never using them.
    let excluded = LexiconSet {
        set_id: 1,
        words: BTreeSet::from(["idiot".into(), "moron".into(), "stupid".into()]),
        provenance: Provenance::Fallback,
        member_sentence_count: 0,
    };

    let batch = generate_lexicon_free(&excluded, 25, &SentenceGenerator::TemplateFallback, 13)?;
    println!(
        "requested {} sentences, accepted {}, shortfall {}",
        batch.requested, batch.accepted_count, batch.shortfall
    );
    for text in batch.accepted_texts().take(4) {
        println!("  e.g. {text:?}");
    }

    // Every accepted candidate must pass the same validator the generator
    // used: zero leakage of excluded words.
    let leaks = batch
        .accepted_texts()
        .filter(|t| validate_lexicon_free(t, &excluded).is_some())
        .count();
    assert_eq!(leaks, 0);
    println!("leak check: 0 excluded words in {} sentences", batch.accepted_count);

    let merged = merge(&train, &batch)?;
    println!(
        "merged training set: {} = {} original + {} augmented",
        merged.len(),
        train.len(),
        batch.accepted_count
    );

    // Same spec, same seed, same test corpus for both arms, so any metric
    // movement comes from the batch alone.
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
        epochs: 30,
        batch_size: 32,
        learning_rate: 2e-5,
        lr_multiplier: 1e5,
        patience: 100,
        seed: 11,
        freeze_encoder: false,
    };
    let report = retrain_and_compare(&train, &val, &test, &batch, &spec, &config, None)?;
    println!(
        "toxic-class F1 before {:.4} -> after {:.4} (delta {:+.4})",
        report.metrics_before.per_class[1].f1,
        report.metrics_after.per_class[1].f1,
        report.delta_f1
    );
    println!("\n{}", before_after_csv(&report));
    Ok(())
}
