//! conceptgrad — concept-level attribution for toxicity classifiers.
//!
//! The library trains a pair of small text classifiers that share one
//! representation (a toxicity head and a set of concept heads), explains the
//! toxicity decision in terms of the concepts via concept-gradient scores,
//! curates lexicon sets from the words that drive misclassifications, and
//! generates lexicon-free augmentation data to retrain against.
//!
//! The best way to learn the API is the `examples/` directory; each example is
//! a runnable walkthrough of one capability:
//!
//! ```text
//! examples/
//! ├── synthesize_corpus.rs       planted-trigger oracle corpus generation
//! ├── train_models.rs            prepare + target/concept training + metrics
//! ├── gradient_attribution.rs    concept-gradient records and condition tables
//! ├── cav_baseline.rs            concept-activation-vector probe baseline
//! ├── curate_lexicons.rs         misclassification mining -> lexicon sets -> WCA
//! ├── lexicon_free_augmentation.rs  constrained generation + retrain compare
//! ├── kfold_validation.rs        k-fold averages, with and without augmentation
//! └── offline_llm_fixtures.rs    record/replay fixtures for the LLM client
//! ```
//!
//! Run one with `cargo run -p conceptgrad --example synthesize_corpus`.
//!
//! The same pipeline is scriptable through the `conceptgrad` binary
//! (`prepare`, `train-target`, `train-concepts`, `eval`, `attribute`,
//! `curate`, `augment`, `kfold`, `synth`), driven by a TOML config file.

pub mod attribution;
pub mod augment;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod llm;
pub mod manifest;
pub mod nnet;
pub mod report;
pub mod text;

pub use error::{Error, Result};
