//! Command-line orchestration: nine subcommands over one TOML config, with
//! per-stage seeding and artifact manifests.
//!
//! Exit codes: 0 success, 2 configuration, 3 missing upstream artifact,
//! 4 numeric/shape/divergence, 5 LLM transport/parse/fixture, 1 other I/O.

pub mod config;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::nnet::model::Head;

pub use config::{load_config, parse_config, RunConfig};
pub use stages::Ctx;

#[derive(Debug, Parser)]
#[command(
    name = "conceptgrad",
    version,
    about = "Concept-gradient interpretability pipeline for toxicity classifiers"
)]
pub struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, default_value = "conceptgrad.toml")]
    pub config: PathBuf,

    /// Override one config field: --set dotted.key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadArg {
    Target,
    Concepts,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate the planted-trigger oracle corpus.
    Synth,
    /// Load, binarize, and split the corpus into train/val/test.
    Prepare,
    /// Train the toxicity (target) model.
    TrainTarget,
    /// Derive the concept model from the frozen target encoder.
    TrainConcepts,
    /// Evaluate a trained head on the test split.
    Eval {
        /// Which head to evaluate.
        #[arg(long, value_enum, default_value = "target")]
        head: HeadArg,
    },
    /// Compute attribution records and the comparative score table.
    Attribute,
    /// Mine misclassifications into lexicon sets with alignment scores.
    Curate,
    /// Generate lexicon-free samples, retrain, and compare before/after.
    Augment,
    /// Seeded k-fold cross-validation of the target model.
    Kfold,
}

impl Cmd {
    fn stage_name(&self) -> &'static str {
        match self {
            Cmd::Synth => "synth",
            Cmd::Prepare => "prepare",
            Cmd::TrainTarget => "train-target",
            Cmd::TrainConcepts => "train-concepts",
            Cmd::Eval { .. } => "eval",
            Cmd::Attribute => "attribute",
            Cmd::Curate => "curate",
            Cmd::Augment => "augment",
            Cmd::Kfold => "kfold",
        }
    }
}

/// Loads and validates the config, then dispatches the subcommand.
pub fn execute(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config, &cli.overrides)?;
    config.validate()?;
    let ctx = Ctx::new(config)?;
    match cli.command {
        Cmd::Synth => stages::synth(&ctx),
        Cmd::Prepare => stages::prepare(&ctx),
        Cmd::TrainTarget => stages::train_target_stage(&ctx),
        Cmd::TrainConcepts => stages::train_concepts_stage(&ctx),
        Cmd::Eval { head } => stages::eval_stage(
            &ctx,
            match head {
                HeadArg::Target => Head::Target,
                HeadArg::Concepts => Head::Concepts,
            },
        ),
        Cmd::Attribute => stages::attribute(&ctx),
        Cmd::Curate => stages::curate(&ctx),
        Cmd::Augment => stages::augment(&ctx),
        Cmd::Kfold => stages::kfold_stage(&ctx),
    }
    .inspect_err(|_| {
        // Prefix the failing stage so pipeline scripts can tell stages apart.
        eprintln!("stage {} failed", cli.command.stage_name());
    })
}
