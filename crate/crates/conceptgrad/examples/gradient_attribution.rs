//! Computes per-sample concept attributions from the gradient of the target
//! logit projected through the concept model's gradients, then aggregates
//! them by (true label, predicted label) condition into a comparative table.
//!
//! Run with: cargo run --release --example gradient_attribution

use conceptgrad::attribution::{
    attribute_corpus, condition_slices, mean_scores, AttributionOptions, Method, ScoreMode,
};
use conceptgrad::corpus::{self, SplitSpec, SynthConfig};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;
use conceptgrad::nnet::{derive_concept_model, train_target, TrainConfig};
use conceptgrad::report::comparative_table;
use std::collections::BTreeMap;

fn main() -> conceptgrad::Result<()> {
    let raw = corpus::synthesize(&SynthConfig::default_planted(3, 1_200, 0.05)?, 42)?;
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

    let options = AttributionOptions::default();
    let mut reports = Vec::new();
    for method in [Method::CgIndependent, Method::CgJoint] {
        let records = attribute_corpus(&target, &concept, &test, method, &options, None)?;

        // Group test samples by truth vs prediction, then average scores
        // per condition. Signed means show direction; absolute means show
        // magnitude.
        let predictions: BTreeMap<String, u8> = records
            .iter()
            .map(|r| (r.sample_id.clone(), r.predicted_label))
            .collect();
        let slices = condition_slices(&test, &predictions)?;
        println!(
            "{:?}: condition counts {:?}",
            method,
            slices.counts()
        );
        for mode in [ScoreMode::Signed, ScoreMode::Absolute] {
            reports.push(mean_scores(
                &records,
                &slices,
                mode,
                test.schema.names(),
            )?);
        }
    }

    // One CSV holding every method x mode block; NA marks empty conditions.
    println!("\n{}", comparative_table(&reports)?);
    Ok(())
}
