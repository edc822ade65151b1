//! Mines the sentences the trained classifier gets wrong, extracts suspect
//! words from them, groups the words into targeted lexicon sets, and scores
//! each set's alignment with the model's concepts.
//!
//! This run uses the deterministic network-free backends (gradient-ranked
//! extraction, co-occurrence clustering); see the offline_llm_fixtures
//! example for the LLM-backed path.
//!
//! Run with: cargo run --release --example curate_lexicons

use conceptgrad::attribution::{attribute_corpus, AttributionOptions, Method, ScoreMode};
use conceptgrad::corpus::{self, SplitSpec, SynthConfig};
use conceptgrad::lexicon::{
    clean, default_stopwords, extract_words, group_words, mine_misclassified, wca,
    CorpusTokenIndex, Grouper, WordExtractor,
};
use conceptgrad::nnet::featurizer::Featurizer;
use conceptgrad::nnet::model::ModelSpec;
use conceptgrad::nnet::{derive_concept_model, train_target, TrainConfig};

fn main() -> conceptgrad::Result<()> {
    let raw = corpus::synthesize(&SynthConfig::default_planted(3, 1_200, 0.08)?, 42)?;
    let binarized = corpus::binarize(&raw, 0.5, 0.5)?;
    let (train, val, _test) = corpus::split(
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

    // Step 1: the curation pool is whatever the model misclassifies.
    let misclassified = mine_misclassified(&target, &train)?;
    println!("misclassified training samples: {}", misclassified.len());

    // Step 2: rank each misclassified sentence's tokens by |gradient x
    // input| against the target logit and keep the top few.
    let extractor = WordExtractor::GradientFallback {
        model: &target,
        top_k: 8,
    };
    let raw_words = extract_words(&misclassified, &extractor)?;
    let cleaned = clean(&raw_words, &default_stopwords())?;
    println!(
        "extracted {} raw words -> {} cleaned",
        raw_words.words.len(),
        cleaned.words.len()
    );

    // Step 3: cluster by corpus co-occurrence; sets are ranked by how many
    // training sentences contain any member word.
    let sets = group_words(&cleaned, &Grouper::ClusterFallback { seed: 5 }, 3, &train)?;
    for set in &sets {
        let preview: Vec<&str> = set.words.iter().take(6).map(String::as_str).collect();
        println!(
            "set {}: {} words, {} member sentences, e.g. {:?}",
            set.set_id,
            set.words.len(),
            set.member_sentence_count,
            preview
        );
    }

    // Step 4: word-concept alignment = mean |attribution| over the samples
    // containing each set's words.
    let records = attribute_corpus(
        &target,
        &concept,
        &train,
        Method::CgIndependent,
        &AttributionOptions::default(),
        None,
    )?;
    let index = CorpusTokenIndex::build(&train);
    for set in &sets {
        let members = index.ids_containing_words(&set.words);
        let result = wca(
            &records,
            set.set_id,
            &members,
            ScoreMode::Absolute,
            train.schema.len(),
        )?;
        let formatted: Vec<String> = train
            .schema
            .names()
            .iter()
            .zip(&result.scores)
            .map(|(name, s)| match s {
                Some(v) => format!("{name}={v:.2e}"),
                None => format!("{name}=NA"),
            })
            .collect();
        println!(
            "WCA set {} over {} sentences: {}",
            set.set_id,
            result.sentence_count,
            formatted.join(" ")
        );
    }
    Ok(())
}
