//! Trains concept-activation vectors (linear probes on the shared
//! representation) as a baseline attribution method and compares their
//! per-sample scores with the gradient-based ones.
//!
//! Run with: cargo run --release --example cav_baseline

use conceptgrad::attribution::{
    attribute_corpus, train_cavs_for_corpus, AttributionOptions, Method,
};
use conceptgrad::corpus::{self, SplitSpec, SynthConfig};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;
use conceptgrad::nnet::{derive_concept_model, train_target, TrainConfig};

fn main() -> conceptgrad::Result<()> {
    let raw = corpus::synthesize(&SynthConfig::default_planted(2, 1_200, 0.05)?, 42)?;
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

    let spec = ModelSpec {
        featurizer: Featurizer {
            n_gram_orders: vec![1],
            hash_dim: 4096,
            lowercase: true,
        },
        embed_dim: 64,
        hidden_dim: 64,
    };
    let target_config = TrainConfig {
        epochs: 30,
        batch_size: 32,
        learning_rate: 2e-5,
        lr_multiplier: 1e5,
        patience: 100,
        seed: 11,
        freeze_encoder: false,
    };
    let (target, _) = train_target(&train, &val, &spec, &target_config)?;
    let concept_config = TrainConfig {
        epochs: 2_000,
        lr_multiplier: 5e5,
        patience: 10_000,
        freeze_encoder: true,
        ..target_config
    };
    let (concept, _) = derive_concept_model(&target, &train, &val, &concept_config)?;

    // One probe per concept, trained on (representation, concept label)
    // pairs with a held-out 20% split for the reported accuracy.
    let cavs = train_cavs_for_corpus(&target, &train, 99)?;
    for (name, cav) in train.schema.names().iter().zip(&cavs) {
        println!(
            "CAV {:>8}: probe accuracy {:.4} (dim {})",
            name,
            cav.probe_accuracy,
            cav.v.len()
        );
    }

    let options = AttributionOptions::default();
    let cg = attribute_corpus(&target, &concept, &test, Method::CgIndependent, &options, None)?;
    let cav_records =
        attribute_corpus(&target, &concept, &test, Method::Cav, &options, Some(&cavs))?;

    // The two methods use different scales, so compare which concept each
    // ranks first per sample rather than the raw numbers.
    let agree = cg
        .iter()
        .zip(&cav_records)
        .filter(|(a, b)| top_concept(&a.scores) == top_concept(&b.scores))
        .count();
    println!(
        "top-concept agreement between gradient scores and CAV scores: {}/{}",
        agree,
        cg.len()
    );
    Ok(())
}

fn top_concept(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap()
}
