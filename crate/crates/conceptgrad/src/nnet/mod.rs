//! Shared-representation classifier: hashed n-gram featurizer, tanh encoder,
//! a target (toxicity) head and per-concept heads, plus training, evaluation,
//! and analytic logit gradients for attribution.

pub mod featurizer;
pub mod metrics;
pub mod model;
pub mod train;

pub use featurizer::Featurizer;
pub use metrics::{evaluate, ClassPrf, ConceptMetrics, Confusion, EvalReport, Metrics};
pub use model::{gradients, GradientBundle, Head, Mat, ModelParams, ModelSpec};
pub use train::{derive_concept_model, train_target, TrainConfig, TrainLog};
