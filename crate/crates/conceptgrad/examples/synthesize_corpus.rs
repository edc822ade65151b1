//! Builds a synthetic toxicity corpus with planted concept triggers, splits
//! it, and round-trips it through the labeled JSONL format.
//!
//! Run with: cargo run --example synthesize_corpus

use conceptgrad::corpus::{self, SplitSpec, SynthConfig};

fn main() -> conceptgrad::Result<()> {
    // Three planted concepts (obscene, threat, insult) with built-in trigger
    // vocabularies; 5% of samples get flipped toxicity labels as noise.
    let config = SynthConfig::default_planted(3, 1_000, 0.05)?;
    let raw = corpus::synthesize(&config, 42)?;

    let toxic = raw
        .samples
        .iter()
        .filter(|s| s.raw_toxicity > 0.5)
        .count();
    println!("synthesized {} samples ({} toxic)", raw.len(), toxic);
    println!("concepts: {:?}", raw.schema.names());
    for s in raw.samples.iter().take(3) {
        println!(
            "  {}: {:?} toxicity={} concepts={:?}",
            s.id, s.text, s.raw_toxicity, s.raw_concepts
        );
    }

    // Thresholding raw scores gives the binary labels the models train on.
    let binarized = corpus::binarize(&raw, 0.5, 0.5)?;

    let spec = SplitSpec {
        train_fraction: 0.7,
        val_fraction: 0.15,
        test_fraction: 0.15,
        balance_classes: false,
        seed: 7,
    };
    let (train, val, test) = corpus::split(&binarized, &spec)?;
    println!(
        "split: train {} / val {} / test {}",
        train.len(),
        val.len(),
        test.len()
    );

    // The JSONL format is lossless: a write/read cycle preserves content.
    let dir = std::env::temp_dir().join("conceptgrad_example_corpus");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("train.jsonl");
    corpus::write_jsonl(&train, &path)?;
    let reloaded = corpus::read_jsonl(&path)?;
    assert_eq!(reloaded.content_hash(), train.content_hash());
    println!(
        "wrote {} and read it back (content hash {})",
        path.display(),
        &train.content_hash()[..12]
    );
    Ok(())
}
