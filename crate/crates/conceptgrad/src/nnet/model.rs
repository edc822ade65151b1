//! Model parameters, forward pass, prediction, analytic gradients, and
//! checkpoint round-tripping.
//!
//! Architecture: hashed features `h` -> linear embed `x = E^T h` (dim d) ->
//! tanh encoder layer (dim hidden) -> one sigmoid target head and `m`
//! sigmoid concept heads. Attribution differentiates the pre-sigmoid logits
//! with respect to the shared representation `x`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::featurizer::Featurizer;

/// Row-major dense matrix. Small and explicit; training touches embed rows
/// sparsely and everything else is tiny.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = A x  (len rows)
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// y = A^T x  (len cols)
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (row, &xr) in self.data.chunks_exact(self.cols).zip(x) {
            for (yc, a) in y.iter_mut().zip(row) {
                *yc += a * xr;
            }
        }
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Architecture knobs bundled for the training entry points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub featurizer: Featurizer,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            featurizer: Featurizer::default(),
            embed_dim: 64,
            hidden_dim: 64,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("embed_dim and hidden_dim must be >= 1".into()));
        }
        Ok(())
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub version: u32,
    pub featurizer: Featurizer,
    /// d_in x d
    pub embed: Mat,
    /// hidden x d
    pub enc_w: Mat,
    pub enc_b: Vec<f64>,
    /// hidden
    pub target_w: Vec<f64>,
    pub target_b: f64,
    /// m x hidden
    pub concept_w: Mat,
    pub concept_b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Target,
    Concepts,
}

impl ModelParams {
    /// Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization,
    /// biases zero. Deterministic for a given seed.
    pub fn init(spec: &ModelSpec, n_concepts: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        if n_concepts == 0 {
            return Err(Error::Config("model needs at least one concept head".into()));
        }
        let d_in = spec.featurizer.hash_dim;
        let d = spec.embed_dim;
        let hidden = spec.hidden_dim;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut fill = |mat: &mut Mat, fan_in: usize| {
            let s = 1.0 / (fan_in as f64).sqrt();
            for v in &mut mat.data {
                *v = rng.gen_range(-s..s);
            }
        };
        let mut embed = Mat::zeros(d_in, d);
        fill(&mut embed, d_in);
        let mut enc_w = Mat::zeros(hidden, d);
        fill(&mut enc_w, d);
        let mut target = Mat::zeros(1, hidden);
        fill(&mut target, hidden);
        let mut concept_w = Mat::zeros(n_concepts, hidden);
        fill(&mut concept_w, hidden);
        Ok(Self {
            version: CHECKPOINT_VERSION,
            featurizer: spec.featurizer.clone(),
            embed,
            enc_w,
            enc_b: vec![0.0; hidden],
            target_w: target.data,
            target_b: 0.0,
            concept_w,
            concept_b: vec![0.0; n_concepts],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.embed.rows
    }

    pub fn repr_dim(&self) -> usize {
        self.embed.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.enc_w.rows
    }

    pub fn n_concepts(&self) -> usize {
        self.concept_w.rows
    }

    /// x = E^T h for a sparse feature vector.
    pub fn represent(&self, features: &[(usize, f64)]) -> Vec<f64> {
        let mut x = vec![0.0; self.repr_dim()];
        for &(idx, val) in features {
            let row = self.embed.row(idx);
            for (xi, ei) in x.iter_mut().zip(row) {
                *xi += val * ei;
            }
        }
        x
    }

    /// Featurize + embed in one step.
    pub fn represent_text(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.represent(&self.featurizer.features(text)?))
    }

    /// Hidden activations z = tanh(W x + b).
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.repr_dim() {
            return Err(Error::Shape(format!(
                "representation has length {}, model expects {}",
                x.len(),
                self.repr_dim()
            )));
        }
        let mut z = self.enc_w.matvec(x);
        for (zi, b) in z.iter_mut().zip(&self.enc_b) {
            *zi = (*zi + b).tanh();
        }
        Ok(z)
    }

    pub fn target_logit(&self, x: &[f64]) -> Result<f64> {
        let z = self.hidden(x)?;
        Ok(dot(&self.target_w, &z) + self.target_b)
    }

    pub fn concept_logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.hidden(x)?;
        let mut logits = self.concept_w.matvec(&z);
        for (l, b) in logits.iter_mut().zip(&self.concept_b) {
            *l += b;
        }
        Ok(logits)
    }

    /// Sigmoid probabilities for the requested head.
    pub fn predict(&self, x: &[f64], head: Head) -> Result<Vec<f64>> {
        match head {
            Head::Target => Ok(vec![sigmoid(self.target_logit(x)?)]),
            Head::Concepts => Ok(self
                .concept_logits(x)?
                .into_iter()
                .map(sigmoid)
                .collect()),
        }
    }

    /// Binary decision at probability 0.5 (exactly 0.5 maps to 0).
    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.target_logit(x)? > 0.0))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let params: ModelParams = serde_json::from_str(&raw)?;
        if params.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                params.version
            )));
        }
        Ok(params)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-sample gradient package: the representation, the target-logit
/// gradient, and the concept-logit Jacobian (one row per concept), all with
/// respect to `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBundle {
    pub sample_id: String,
    pub x: Vec<f64>,
    pub grad_f: Vec<f64>,
    /// m x d
    pub jac_g: Mat,
}

/// Analytic logit gradients at `x`. `target` supplies the target head and
/// `concept` the concept heads; the two models must share the
/// representation dimension.
pub fn gradients(
    target: &ModelParams,
    concept: &ModelParams,
    x: &[f64],
    sample_id: &str,
) -> Result<GradientBundle> {
    if target.repr_dim() != concept.repr_dim() {
        return Err(Error::Shape(format!(
            "representation dims differ: target {} vs concept {}",
            target.repr_dim(),
            concept.repr_dim()
        )));
    }
    let grad_f = logit_grad_x(target, x, &target.target_w)?;
    let m = concept.n_concepts();
    let mut jac_g = Mat::zeros(m, x.len());
    for j in 0..m {
        let row = logit_grad_x(concept, x, concept.concept_w.row(j))?;
        jac_g.row_mut(j).copy_from_slice(&row);
    }
    for v in grad_f.iter().chain(jac_g.data.iter()) {
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient for sample {sample_id}"
            )));
        }
    }
    Ok(GradientBundle {
        sample_id: sample_id.to_string(),
        x: x.to_vec(),
        grad_f,
        jac_g,
    })
}

/// d(head_w . tanh(Wx+b)) / dx = W^T diag(1 - z^2) head_w
fn logit_grad_x(params: &ModelParams, x: &[f64], head_w: &[f64]) -> Result<Vec<f64>> {
    let z = params.hidden(x)?;
    let weighted: Vec<f64> = z
        .iter()
        .zip(head_w)
        .map(|(zi, wi)| wi * (1.0 - zi * zi))
        .collect();
    Ok(params.enc_w.tr_matvec(&weighted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ModelSpec {
        ModelSpec {
            featurizer: Featurizer {
                n_gram_orders: vec![1],
                hash_dim: 64,
                lowercase: true,
            },
            embed_dim: 8,
            hidden_dim: 6,
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = small_spec();
        let a = ModelParams::init(&spec, 3, 9).unwrap();
        let b = ModelParams::init(&spec, 3, 9).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::init(&spec, 3, 10).unwrap();
        assert_ne!(a.embed.data, c.embed.data);
        let bound = 1.0 / (spec.embed_dim as f64).sqrt();
        assert!(a.enc_w.data.iter().all(|v| v.abs() < bound));
        assert!(a.enc_b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_params_predict_half() {
        let spec = small_spec();
        let mut p = ModelParams::init(&spec, 2, 0).unwrap();
        p.target_w.iter_mut().for_each(|v| *v = 0.0);
        p.target_b = 0.0;
        p.concept_w.data.iter_mut().for_each(|v| *v = 0.0);
        let x = vec![0.0; spec.embed_dim];
        assert_eq!(p.predict(&x, Head::Target).unwrap(), vec![0.5]);
        assert_eq!(p.predict(&x, Head::Concepts).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let p = ModelParams::init(&small_spec(), 2, 0).unwrap();
        let x = vec![0.0; 3];
        assert!(matches!(p.predict(&x, Head::Target), Err(Error::Shape(_))));
    }

    #[test]
    fn decision_threshold_at_half() {
        let spec = small_spec();
        let mut p = ModelParams::init(&spec, 1, 0).unwrap();
        p.target_w.iter_mut().for_each(|v| *v = 0.0);
        p.target_b = 0.0;
        let x = vec![0.1; spec.embed_dim];
        assert_eq!(p.predict_label(&x).unwrap(), 0, "probability exactly 0.5 -> 0");
        p.target_b = 0.04; // sigmoid(0.04) ~ 0.51
        assert_eq!(p.predict_label(&x).unwrap(), 1);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let p = ModelParams::init(&small_spec(), 3, 1234).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        p.save(&path).unwrap();
        let q = ModelParams::load(&path).unwrap();
        assert_eq!(p, q);
        // Bit-exactness, not just approximate equality.
        for (a, b) in p.embed.data.iter().zip(&q.embed.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn checkpoint_version_is_checked() {
        let mut p = ModelParams::init(&small_spec(), 1, 0).unwrap();
        p.version = 999;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, serde_json::to_string(&p).unwrap()).unwrap();
        assert!(matches!(ModelParams::load(&path), Err(Error::Schema(_))));
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let spec = small_spec();
        let p = ModelParams::init(&spec, 3, 77).unwrap();
        let x: Vec<f64> = (0..spec.embed_dim).map(|i| 0.1 * (i as f64) - 0.3).collect();
        let bundle = gradients(&p, &p, &x, "s").unwrap();
        let delta = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += delta;
            xm[i] -= delta;
            let fd = (p.target_logit(&xp).unwrap() - p.target_logit(&xm).unwrap()) / (2.0 * delta);
            assert!(
                (fd - bundle.grad_f[i]).abs() <= 1e-6 * fd.abs().max(1.0),
                "component {i}: fd {fd} vs analytic {}",
                bundle.grad_f[i]
            );
        }
    }

    #[test]
    fn gradients_reject_mismatched_models() {
        let a = ModelParams::init(&small_spec(), 2, 0).unwrap();
        let wide = ModelSpec {
            embed_dim: 12,
            ..small_spec()
        };
        let b = ModelParams::init(&wide, 2, 0).unwrap();
        let x = vec![0.0; 8];
        assert!(matches!(gradients(&a, &b, &x, "s"), Err(Error::Shape(_))));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
