//! Mini-batch gradient-descent training for the target head (class-weighted
//! BCE, full backprop) and for concept heads on a frozen encoder.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{class_weights, Corpus};
use crate::error::{Error, Result};
use crate::nnet::model::{dot, sigmoid, Mat, ModelParams, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Base learning rate; the effective rate is `learning_rate * lr_multiplier`.
    pub learning_rate: f64,
    pub lr_multiplier: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub freeze_encoder: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            learning_rate: 2e-5,
            lr_multiplier: 1.0,
            patience: 3,
            seed: 0,
            freeze_encoder: false,
        }
    }
}

impl TrainConfig {
    /// Zero learning rate is allowed here (it makes training the identity);
    /// the CLI config layer is stricter and requires a positive rate.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("lr_multiplier", self.lr_multiplier),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn effective_lr(&self) -> f64 {
        self.learning_rate * self.lr_multiplier
    }
}

/// Per-epoch loss record returned alongside trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

struct Prepared {
    features: Vec<Vec<(usize, f64)>>,
    labels: Vec<u8>,
    concept_labels: Vec<Vec<u8>>,
}

fn prepare(corpus: &Corpus) -> Result<Prepared> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("training corpus is empty".into()));
    }
    if !corpus.is_binarized() {
        return Err(Error::Config("training requires a binarized corpus".into()));
    }
    Ok(Prepared {
        features: Vec::new(),
        labels: corpus.samples.iter().map(|s| s.label.unwrap()).collect(),
        concept_labels: corpus
            .samples
            .iter()
            .map(|s| s.concept_labels.clone().unwrap())
            .collect(),
    })
}

fn featurize_all(corpus: &Corpus, params: &ModelParams) -> Result<Vec<Vec<(usize, f64)>>> {
    corpus
        .samples
        .iter()
        .map(|s| params.featurizer.features(&s.text))
        .collect()
}

/// Weighted binary cross-entropy from the logit, numerically stable:
/// `w * (max(l,0) - l*y + ln(1 + exp(-|l|)))`.
fn bce_from_logit(logit: f64, y: f64, w: f64) -> f64 {
    w * (logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p())
}

/// Trains embed, encoder, and target head with class-weighted BCE.
/// Early stopping restores the best-validation-loss checkpoint.
/// Deterministic: same corpora, spec, and config give bit-identical params.
pub fn train_target(
    train: &Corpus,
    val: &Corpus,
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    config.validate()?;
    spec.validate()?;
    let mut prep = prepare(train)?;
    if val.is_empty() || !val.is_binarized() {
        return Err(Error::Config("validation corpus must be non-empty and binarized".into()));
    }
    let weights = class_weights(train)?;
    let mut params = ModelParams::init(spec, train.schema.len(), config.seed)?;
    prep.features = featurize_all(train, &params)?;
    let val_features = featurize_all(val, &params)?;
    let val_labels: Vec<u8> = val.samples.iter().map(|s| s.label.unwrap()).collect();

    let lr = config.effective_lr();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = TrainLog {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let batch_loss = target_batch_step(
                &mut params,
                &prep,
                batch,
                weights,
                lr,
                config.freeze_encoder,
            );
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_loss += batch_loss * batch.len() as f64;
        }
        log.train_loss.push(epoch_loss / train.len() as f64);

        let vloss = target_loss(&params, &val_features, &val_labels, weights);
        if !vloss.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0 });
        }
        log.val_loss.push(vloss);
        if vloss < best_loss {
            best_loss = vloss;
            best = params.clone();
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, log))
}

fn target_loss(
    params: &ModelParams,
    features: &[Vec<(usize, f64)>],
    labels: &[u8],
    weights: [f64; 2],
) -> f64 {
    let mut total = 0.0;
    for (f, &y) in features.iter().zip(labels) {
        let x = params.represent(f);
        let logit = dot(&params.target_w, &tanh_layer(params, &x)) + params.target_b;
        total += bce_from_logit(logit, f64::from(y), weights[usize::from(y)]);
    }
    total / labels.len() as f64
}

fn tanh_layer(params: &ModelParams, x: &[f64]) -> Vec<f64> {
    let mut z = params.enc_w.matvec(x);
    for (zi, b) in z.iter_mut().zip(&params.enc_b) {
        *zi = (*zi + b).tanh();
    }
    z
}

/// One mini-batch update of the target objective; returns the mean batch loss.
fn target_batch_step(
    params: &mut ModelParams,
    prep: &Prepared,
    batch: &[usize],
    weights: [f64; 2],
    lr: f64,
    freeze_encoder: bool,
) -> f64 {
    let d = params.repr_dim();
    let hidden = params.hidden_dim();
    let scale = 1.0 / batch.len() as f64;

    let mut g_target_w = vec![0.0; hidden];
    let mut g_target_b = 0.0;
    let mut g_enc_w = Mat::zeros(hidden, d);
    let mut g_enc_b = vec![0.0; hidden];
    // Sparse embed gradient: (row index, d-vector) accumulated per batch.
    let mut g_embed = std::collections::BTreeMap::<usize, Vec<f64>>::new();

    let mut loss = 0.0;
    for &i in batch {
        let f = &prep.features[i];
        let y = f64::from(prep.labels[i]);
        let w = weights[usize::from(prep.labels[i])];
        let x = params.represent(f);
        let z = tanh_layer(params, &x);
        let logit = dot(&params.target_w, &z) + params.target_b;
        loss += bce_from_logit(logit, y, w);

        let dl = w * (sigmoid(logit) - y); // dL/dlogit
        for (g, zi) in g_target_w.iter_mut().zip(&z) {
            *g += dl * zi;
        }
        g_target_b += dl;

        if !freeze_encoder {
            // da = dl * target_w .* (1 - z^2)
            let da: Vec<f64> = params
                .target_w
                .iter()
                .zip(&z)
                .map(|(wi, zi)| dl * wi * (1.0 - zi * zi))
                .collect();
            for (r, &dar) in da.iter().enumerate() {
                let grow = g_enc_w.row_mut(r);
                for (g, xi) in grow.iter_mut().zip(&x) {
                    *g += dar * xi;
                }
            }
            for (g, &dar) in g_enc_b.iter_mut().zip(&da) {
                *g += dar;
            }
            // dx = enc_w^T da; embed rows touched by the sample get h_i * dx.
            let dx = params.enc_w.tr_matvec(&da);
            for &(idx, val) in f {
                let acc = g_embed.entry(idx).or_insert_with(|| vec![0.0; d]);
                for (a, dxi) in acc.iter_mut().zip(&dx) {
                    *a += val * dxi;
                }
            }
        }
    }

    let step = lr * scale;
    for (p, g) in params.target_w.iter_mut().zip(&g_target_w) {
        *p -= step * g;
    }
    params.target_b -= step * g_target_b;
    if !freeze_encoder {
        for (p, g) in params.enc_w.data.iter_mut().zip(&g_enc_w.data) {
            *p -= step * g;
        }
        for (p, g) in params.enc_b.iter_mut().zip(&g_enc_b) {
            *p -= step * g;
        }
        for (idx, g) in g_embed {
            let row = params.embed.row_mut(idx);
            for (p, gi) in row.iter_mut().zip(&g) {
                *p -= step * gi;
            }
        }
    }
    loss * scale
}

/// Momentum coefficient for concept-head updates. The frozen-encoder
/// objective is a set of independent logistic regressions whose features
/// (tanh activations) have small scale, so plain gradient descent converges
/// very slowly; classical momentum cuts the epoch count by roughly an order
/// of magnitude while staying deterministic.
const CONCEPT_MOMENTUM: f64 = 0.9;

/// Copies the target model and trains only the concept heads (multi-label
/// BCE, mean over concepts) with momentum gradient descent. The
/// embed/encoder stack stays bit-identical to the target's.
pub fn derive_concept_model(
    target: &ModelParams,
    train: &Corpus,
    val: &Corpus,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    config.validate()?;
    if !config.freeze_encoder {
        return Err(Error::Config(
            "derive_concept_model requires freeze_encoder = true".into(),
        ));
    }
    let prep = prepare(train)?;
    if val.is_empty() || !val.is_binarized() {
        return Err(Error::Config("validation corpus must be non-empty and binarized".into()));
    }
    let m = train.schema.len();
    if target.n_concepts() != m {
        return Err(Error::Shape(format!(
            "target model has {} concept heads, corpus schema has {m}",
            target.n_concepts()
        )));
    }

    let mut params = target.clone();
    // Representations are fixed under a frozen encoder; compute z once.
    let features = featurize_all(train, &params)?;
    let zs: Vec<Vec<f64>> = features
        .iter()
        .map(|f| tanh_layer(&params, &params.represent(f)))
        .collect();
    let val_zs: Vec<Vec<f64>> = featurize_all(val, &params)?
        .iter()
        .map(|f| tanh_layer(&params, &params.represent(f)))
        .collect();
    let val_labels: Vec<Vec<u8>> = val
        .samples
        .iter()
        .map(|s| s.concept_labels.clone().unwrap())
        .collect();

    let lr = config.effective_lr();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = TrainLog {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0usize;
    let mut vel_w = Mat::zeros(m, params.hidden_dim());
    let mut vel_b = vec![0.0; m];

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let mut g_w = Mat::zeros(m, params.hidden_dim());
            let mut g_b = vec![0.0; m];
            let mut loss = 0.0;
            for &i in batch {
                let z = &zs[i];
                for (j, gb) in g_b.iter_mut().enumerate() {
                    let logit = dot(params.concept_w.row(j), z) + params.concept_b[j];
                    let y = f64::from(prep.concept_labels[i][j]);
                    loss += bce_from_logit(logit, y, 1.0) / m as f64;
                    let dl = (sigmoid(logit) - y) / m as f64;
                    for (g, zi) in g_w.row_mut(j).iter_mut().zip(z) {
                        *g += dl * zi;
                    }
                    *gb += dl;
                }
            }
            let batch_loss = loss / batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                });
            }
            let scale = 1.0 / batch.len() as f64;
            for (v, g) in vel_w.data.iter_mut().zip(&g_w.data) {
                *v = CONCEPT_MOMENTUM * *v + scale * g;
            }
            for (v, g) in vel_b.iter_mut().zip(&g_b) {
                *v = CONCEPT_MOMENTUM * *v + scale * g;
            }
            for (p, v) in params.concept_w.data.iter_mut().zip(&vel_w.data) {
                *p -= lr * v;
            }
            for (p, v) in params.concept_b.iter_mut().zip(&vel_b) {
                *p -= lr * v;
            }
            epoch_loss += batch_loss * batch.len() as f64;
        }
        log.train_loss.push(epoch_loss / train.len() as f64);

        let mut vloss = 0.0;
        for (z, labels) in val_zs.iter().zip(&val_labels) {
            for (j, &label) in labels.iter().enumerate() {
                let logit = dot(params.concept_w.row(j), z) + params.concept_b[j];
                vloss += bce_from_logit(logit, f64::from(label), 1.0) / m as f64;
            }
        }
        vloss /= val_zs.len() as f64;
        if !vloss.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0 });
        }
        log.val_loss.push(vloss);
        if vloss < best_loss {
            best_loss = vloss;
            best = params.clone();
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synthesize, SplitSpec, SplitTag, SynthConfig};

    fn quick_spec() -> ModelSpec {
        ModelSpec {
            featurizer: crate::nnet::featurizer::Featurizer {
                n_gram_orders: vec![1, 2],
                hash_dim: 512,
                lowercase: true,
            },
            embed_dim: 24,
            hidden_dim: 24,
        }
    }

    fn quick_config() -> TrainConfig {
        TrainConfig {
            epochs: 8,
            batch_size: 32,
            learning_rate: 2e-5,
            lr_multiplier: 20_000.0,
            patience: 3,
            seed: 5,
            freeze_encoder: false,
        }
    }

    fn planted_splits(n: usize, noise: f64) -> (Corpus, Corpus, Corpus) {
        let config = SynthConfig::default_planted(2, n, noise).unwrap();
        let corpus = synthesize(&config, 17).unwrap();
        crate::corpus::split(
            &corpus,
            &SplitSpec {
                train_fraction: 0.7,
                val_fraction: 0.15,
                test_fraction: 0.15,
                balance_classes: false,
                seed: 3,
            },
        )
        .unwrap()
    }

    #[test]
    fn one_epoch_reduces_training_loss() {
        let (train, val, _) = planted_splits(400, 0.0);
        // Small rate: one epoch of descent on the separable construction
        // must lower the full training loss relative to initialization.
        let config = TrainConfig {
            epochs: 1,
            lr_multiplier: 2_000.0,
            ..quick_config()
        };
        let spec = quick_spec();
        let (after, _) = train_target(&train, &val, &spec, &config).unwrap();
        let init = ModelParams::init(&spec, train.schema.len(), config.seed).unwrap();
        let features: Vec<_> = train
            .samples
            .iter()
            .map(|s| init.featurizer.features(&s.text).unwrap())
            .collect();
        let labels: Vec<u8> = train.samples.iter().map(|s| s.label.unwrap()).collect();
        let w = class_weights(&train).unwrap();
        let loss_init = target_loss(&init, &features, &labels, w);
        let loss_after = target_loss(&after, &features, &labels, w);
        assert!(
            loss_after < loss_init,
            "loss should drop: init {loss_init}, after one epoch {loss_after}"
        );
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let (train, val, _) = planted_splits(120, 0.0);
        let spec = quick_spec();
        let config = TrainConfig {
            learning_rate: 0.0,
            lr_multiplier: 1.0,
            epochs: 3,
            ..quick_config()
        };
        let (params, _) = train_target(&train, &val, &spec, &config).unwrap();
        let init = ModelParams::init(&spec, train.schema.len(), config.seed).unwrap();
        assert_eq!(params, init);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (train, val, _) = planted_splits(200, 0.05);
        let spec = quick_spec();
        let config = quick_config();
        let (a, _) = train_target(&train, &val, &spec, &config).unwrap();
        let (b, _) = train_target(&train, &val, &spec, &config).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.embed.data.iter().zip(&b.embed.data) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn early_stopping_restores_best_checkpoint() {
        let (train, val, _) = planted_splits(300, 0.05);
        // Aggressive rate forces the validation loss to bounce.
        let config = TrainConfig {
            epochs: 30,
            lr_multiplier: 3_000_000.0,
            patience: 2,
            ..quick_config()
        };
        let (params, log) = train_target(&train, &val, &quick_spec(), &config).unwrap();
        let best = log.val_loss[log.best_epoch];
        assert!(log.val_loss.iter().all(|&v| v >= best));
        // Returned params reproduce the best epoch's validation loss.
        let features: Vec<_> = val
            .samples
            .iter()
            .map(|s| params.featurizer.features(&s.text).unwrap())
            .collect();
        let labels: Vec<u8> = val.samples.iter().map(|s| s.label.unwrap()).collect();
        let w = class_weights(&train).unwrap();
        let reloss = target_loss(&params, &features, &labels, w);
        assert!((reloss - best).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_detected() {
        // The tanh encoder and the stable BCE keep losses finite under
        // merely "too large" rates (activations saturate and gradients
        // vanish), so force genuine overflow: after one step the parameters
        // sit near 1e175, and the next forward pass multiplies two such
        // magnitudes into +/-inf whose mixed-sign sums are NaN.
        let (train, val, _) = planted_splits(120, 0.0);
        let config = TrainConfig {
            epochs: 5,
            lr_multiplier: 1e180,
            patience: 40,
            ..quick_config()
        };
        match train_target(&train, &val, &quick_spec(), &config) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:#?}"),
        }
    }

    #[test]
    fn unbinarized_corpus_is_rejected() {
        let config = SynthConfig::default_planted(2, 30, 0.0).unwrap();
        let mut corpus = synthesize(&config, 1).unwrap();
        for s in &mut corpus.samples {
            s.label = None;
        }
        let val = synthesize(&config, 2).unwrap();
        match train_target(&corpus, &val, &quick_spec(), &quick_config()) {
            Err(Error::Config(msg)) => assert!(msg.contains("binarized")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn concept_model_keeps_encoder_bits_and_learns_concepts() {
        let (train, val, test) = planted_splits(2000, 0.0);
        // Unigram features keep the planted construction separable after
        // the 64-dim embedding (the vocabulary is smaller than the
        // representation), which the per-concept accuracy bar relies on.
        let spec = ModelSpec {
            featurizer: crate::nnet::featurizer::Featurizer {
                n_gram_orders: vec![1],
                hash_dim: 4096,
                lowercase: true,
            },
            embed_dim: 64,
            hidden_dim: 64,
        };
        let target_config = TrainConfig {
            epochs: 30,
            lr_multiplier: 1e5,
            patience: 100,
            ..quick_config()
        };
        let (target, _) = train_target(&train, &val, &spec, &target_config).unwrap();
        let concept_config = TrainConfig {
            freeze_encoder: true,
            epochs: 6000,
            lr_multiplier: 5e5,
            patience: 10000,
            ..quick_config()
        };
        let (concept, _) =
            derive_concept_model(&target, &train, &val, &concept_config).unwrap();

        // Frozen stack is bit-identical.
        assert_eq!(target.embed, concept.embed);
        assert_eq!(target.enc_w, concept.enc_w);
        assert_eq!(target.enc_b, concept.enc_b);
        for (a, b) in target.embed.data.iter().zip(&concept.embed.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        // Per-concept held-out accuracy on the noise-free planted corpus.
        let m = test.schema.len();
        let mut correct = vec![0usize; m];
        for s in &test.samples {
            let x = concept.represent_text(&s.text).unwrap();
            let probs = concept
                .predict(&x, crate::nnet::model::Head::Concepts)
                .unwrap();
            for j in 0..m {
                let pred = u8::from(probs[j] > 0.5);
                if pred == s.concept_labels.as_ref().unwrap()[j] {
                    correct[j] += 1;
                }
            }
        }
        for (j, c) in correct.iter().enumerate() {
            let acc = *c as f64 / test.len() as f64;
            assert!(acc >= 0.95, "concept {j} accuracy {acc} below 0.95");
        }
    }

    #[test]
    fn derive_requires_frozen_encoder_flag() {
        let (train, val, _) = planted_splits(60, 0.0);
        let (target, _) = train_target(&train, &val, &quick_spec(), &quick_config()).unwrap();
        let config = TrainConfig {
            freeze_encoder: false,
            ..quick_config()
        };
        match derive_concept_model(&target, &train, &val, &config) {
            Err(Error::Config(msg)) => assert!(msg.contains("freeze_encoder")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn split_tags_do_not_gate_training() {
        // train() accepts any binarized corpus regardless of tag.
        let (mut train, val, _) = planted_splits(80, 0.0);
        train.split_tag = SplitTag::Unsplit;
        assert!(train_target(&train, &val, &quick_spec(), &quick_config()).is_ok());
    }
}
