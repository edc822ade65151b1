//! Trains the toxicity classifier, then derives the concept model that
//! shares its (frozen) encoder, and evaluates both heads.
//!
//! Run with: cargo run --release --example train_models

use conceptgrad::corpus::{self, SplitSpec, SynthConfig};
use conceptgrad::nnet::{
    derive_concept_model, evaluate, train_target, EvalReport, Head, TrainConfig,
};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;

fn main() -> conceptgrad::Result<()> {
    let synth = SynthConfig::default_planted(3, 1_200, 0.05)?;
    let raw = corpus::synthesize(&synth, 42)?;
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
    let (target, target_log) = train_target(&train, &val, &spec, &target_config)?;
    println!(
        "target: best epoch {} of {} (val loss {:.4})",
        target_log.best_epoch,
        target_log.train_loss.len(),
        target_log.val_loss[target_log.best_epoch]
    );

    // The concept heads train on top of the target's encoder; freezing means
    // both models attribute in the same representation space.
    let concept_config = TrainConfig {
        epochs: 2_000,
        lr_multiplier: 5e5,
        patience: 10_000,
        freeze_encoder: true,
        ..target_config
    };
    let (concept, _) = derive_concept_model(&target, &train, &val, &concept_config)?;
    assert_eq!(concept.embed, target.embed);
    assert_eq!(concept.enc_w, target.enc_w);
    println!("concept model shares the target encoder bit-for-bit");

    match evaluate(&target, &test, Head::Target)? {
        EvalReport::Target(m) => println!(
            "target test accuracy {:.4}, macro F1 {:.4}",
            m.accuracy, m.macro_f1
        ),
        EvalReport::Concepts(_) => unreachable!(),
    }
    match evaluate(&concept, &test, Head::Concepts)? {
        EvalReport::Concepts(cm) => {
            for c in &cm.per_concept {
                println!(
                    "concept {:>8}: accuracy {:.4}, F1 {:.4}",
                    c.concept, c.accuracy, c.positive.f1
                );
            }
        }
        EvalReport::Target(_) => unreachable!(),
    }
    Ok(())
}
