//! Evaluation: confusion matrices, accuracy, precision/recall/F1.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nnet::model::{Head, ModelParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (0, 0) => self.tn += 1,
            (0, _) => self.fp += 1,
            (_, 0) => self.fn_ += 1,
            _ => self.tp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn accuracy(&self) -> f64 {
        (self.tn + self.tp) as f64 / self.total() as f64
    }

    /// Precision for a class (0 or 1); 0.0 when undefined.
    pub fn precision(&self, class: u8) -> f64 {
        let (hit, all) = match class {
            0 => (self.tn, self.tn + self.fn_),
            _ => (self.tp, self.tp + self.fp),
        };
        if all == 0 {
            0.0
        } else {
            hit as f64 / all as f64
        }
    }

    pub fn recall(&self, class: u8) -> f64 {
        let (hit, all) = match class {
            0 => (self.tn, self.tn + self.fp),
            _ => (self.tp, self.tp + self.fn_),
        };
        if all == 0 {
            0.0
        } else {
            hit as f64 / all as f64
        }
    }

    pub fn f1(&self, class: u8) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Unweighted mean of the two per-class F1 scores.
    pub fn macro_f1(&self) -> f64 {
        (self.f1(0) + self.f1(1)) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: [ClassPrf; 2],
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion) -> Result<Self> {
        if confusion.total() == 0 {
            return Err(Error::EmptyInput("empty confusion matrix".into()));
        }
        let prf = |c: u8| ClassPrf {
            precision: confusion.precision(c),
            recall: confusion.recall(c),
            f1: confusion.f1(c),
        };
        Ok(Self {
            confusion,
            accuracy: confusion.accuracy(),
            macro_f1: confusion.macro_f1(),
            per_class: [prf(0), prf(1)],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptMetric {
    pub concept: String,
    pub confusion: Confusion,
    /// Positive-class precision/recall/F1.
    pub positive: ClassPrf,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptMetrics {
    pub per_concept: Vec<ConceptMetric>,
    pub macro_f1: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EvalReport {
    Target(Metrics),
    Concepts(ConceptMetrics),
}

/// Evaluates the requested head over a binarized corpus.
pub fn evaluate(params: &ModelParams, corpus: &Corpus, head: Head) -> Result<EvalReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("evaluation corpus is empty".into()));
    }
    if !corpus.is_binarized() {
        return Err(Error::Config("evaluation requires a binarized corpus".into()));
    }
    match head {
        Head::Target => {
            let mut confusion = Confusion::default();
            for s in &corpus.samples {
                let x = params.represent_text(&s.text)?;
                confusion.record(s.label.unwrap(), params.predict_label(&x)?);
            }
            Ok(EvalReport::Target(Metrics::from_confusion(confusion)?))
        }
        Head::Concepts => {
            let m = corpus.schema.len();
            if params.n_concepts() != m {
                return Err(Error::Shape(format!(
                    "model has {} concept heads, schema has {m}",
                    params.n_concepts()
                )));
            }
            let mut confusions = vec![Confusion::default(); m];
            for s in &corpus.samples {
                let x = params.represent_text(&s.text)?;
                let probs = params.predict(&x, Head::Concepts)?;
                let labels = s.concept_labels.as_ref().unwrap();
                for j in 0..m {
                    confusions[j].record(labels[j], u8::from(probs[j] > 0.5));
                }
            }
            let per_concept: Vec<ConceptMetric> = corpus
                .schema
                .names()
                .iter()
                .zip(&confusions)
                .map(|(name, c)| ConceptMetric {
                    concept: name.clone(),
                    confusion: *c,
                    positive: ClassPrf {
                        precision: c.precision(1),
                        recall: c.recall(1),
                        f1: c.f1(1),
                    },
                    accuracy: c.accuracy(),
                })
                .collect();
            let macro_f1 =
                per_concept.iter().map(|c| c.positive.f1).sum::<f64>() / m as f64;
            let mean_accuracy =
                per_concept.iter().map(|c| c.accuracy).sum::<f64>() / m as f64;
            Ok(EvalReport::Concepts(ConceptMetrics {
                per_concept,
                macro_f1,
                mean_accuracy,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_matches_reference_confusion() {
        // tn=4929 fp=71 fn=161 tp=4839 over 10,000 samples.
        let confusion = Confusion {
            tn: 4929,
            fp: 71,
            fn_: 161,
            tp: 4839,
        };
        assert_eq!(confusion.total(), 10_000);
        assert_eq!(confusion.accuracy(), 0.9768);
    }

    #[test]
    fn all_correct_predictions_give_unit_macro_f1() {
        let confusion = Confusion {
            tn: 7,
            fp: 0,
            fn_: 0,
            tp: 5,
        };
        assert_eq!(confusion.macro_f1(), 1.0);
        assert_eq!(confusion.accuracy(), 1.0);
    }

    #[test]
    fn degenerate_classes_define_zero_not_nan() {
        // No positive predictions and no positive truth.
        let confusion = Confusion {
            tn: 10,
            fp: 0,
            fn_: 0,
            tp: 0,
        };
        assert_eq!(confusion.precision(1), 0.0);
        assert_eq!(confusion.recall(1), 0.0);
        assert_eq!(confusion.f1(1), 0.0);
        assert!(confusion.macro_f1().is_finite());
    }

    #[test]
    fn f1_hand_check() {
        let confusion = Confusion {
            tn: 95,
            fp: 9,
            fn_: 9,
            tp: 87,
        };
        let p = 87.0 / 96.0;
        let r = 87.0 / 96.0;
        assert!((confusion.f1(1) - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }

    #[test]
    fn metrics_from_empty_confusion_errors() {
        assert!(matches!(
            Metrics::from_confusion(Confusion::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn evaluate_runs_end_to_end_on_planted_corpus() {
        use crate::corpus::{synthesize, SynthConfig};
        use crate::nnet::model::ModelSpec;
        use crate::nnet::train::{train_target, TrainConfig};

        let config = SynthConfig::default_planted(2, 600, 0.0).unwrap();
        let corpus = synthesize(&config, 8).unwrap();
        let (train, val, test) = crate::corpus::split(
            &corpus,
            &crate::corpus::SplitSpec {
                train_fraction: 0.7,
                val_fraction: 0.15,
                test_fraction: 0.15,
                balance_classes: false,
                seed: 2,
            },
        )
        .unwrap();
        let spec = ModelSpec {
            featurizer: crate::nnet::featurizer::Featurizer {
                n_gram_orders: vec![1],
                hash_dim: 512,
                lowercase: true,
            },
            embed_dim: 24,
            hidden_dim: 24,
        };
        let tc = TrainConfig {
            epochs: 30,
            lr_multiplier: 1e5,
            patience: 100,
            seed: 4,
            ..TrainConfig::default()
        };
        let (params, _) = train_target(&train, &val, &spec, &tc).unwrap();
        match evaluate(&params, &test, Head::Target).unwrap() {
            EvalReport::Target(m) => {
                assert!(m.accuracy > 0.9, "accuracy {}", m.accuracy);
                assert_eq!(m.confusion.total() as usize, test.len());
            }
            _ => unreachable!(),
        }
    }
}
