//! Concept-gradient attribution and the concept-activation-vector baseline.
//!
//! For a sample with target-logit gradient `grad_f` and concept-logit
//! Jacobian rows `jac_g[j]` (all with respect to the shared representation),
//! the independent score per concept is `(row_j . grad_f) / ||row_j||^2` and
//! the joint score vector is `pinv(J) grad_f` with the Jacobian columns
//! stacked per concept. Scoring orients `grad_f` along the logit of the
//! *predicted* class (the class-0 logit is the negated class-1 logit), so a
//! positive score means the concept pushes toward the model's decision and a
//! negative score means it pushes against it.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nnet::model::{dot, gradients, GradientBundle, ModelParams};

/// Rows with L2 norm below this are treated as degenerate (score 0, flagged).
pub const DEFAULT_ROW_EPS: f64 = 1e-12;
/// Singular values below `tol * sigma_max` are truncated in the joint pinv.
pub const DEFAULT_SVD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CgIndependent,
    CgJoint,
    Cav,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CgIndependent => "cg_independent",
            Method::CgJoint => "cg_joint",
            Method::Cav => "cav",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    Signed,
    Absolute,
}

impl ScoreMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreMode::Signed => "signed",
            ScoreMode::Absolute => "absolute",
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        match self {
            ScoreMode::Signed => v,
            ScoreMode::Absolute => v.abs(),
        }
    }
}

/// One attribution result: per-concept scores for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub sample_id: String,
    pub method: Method,
    pub scores: Vec<f64>,
    pub true_label: u8,
    pub predicted_label: u8,
    /// True when any concept row was too small to normalize against.
    pub degenerate: bool,
}

// ===========================================================================
// Concept-gradient scores
// ===========================================================================

/// Per-concept scores treating each concept row independently:
/// `(row_j . grad_f) / ||row_j||^2`. Rows with norm below `row_eps` score 0
/// and set the degeneracy flag.
pub fn cg_independent(bundle: &GradientBundle, row_eps: f64) -> (Vec<f64>, bool) {
    let m = bundle.jac_g.rows;
    let mut scores = Vec::with_capacity(m);
    let mut degenerate = false;
    for j in 0..m {
        let row = bundle.jac_g.row(j);
        let norm_sq: f64 = row.iter().map(|v| v * v).sum();
        if norm_sq.sqrt() < row_eps {
            degenerate = true;
            scores.push(0.0);
        } else {
            scores.push(dot(row, &bundle.grad_f) / norm_sq);
        }
    }
    (scores, degenerate)
}

/// Joint scores through the Moore-Penrose pseudoinverse of the concept
/// Jacobian (columns = concept gradients): `pinv(J) grad_f`.
///
/// `svd_tolerance` is relative: singular values below `svd_tolerance *
/// sigma_max` are truncated. A single concept uses the closed-form rank-1
/// pseudoinverse, which makes the one-concept joint score bit-identical to
/// the independent score.
pub fn cg_joint(bundle: &GradientBundle, svd_tolerance: f64) -> Result<(Vec<f64>, bool)> {
    if !(svd_tolerance.is_finite() && svd_tolerance >= 0.0) {
        return Err(Error::Config(format!(
            "svd_tolerance must be finite and >= 0, got {svd_tolerance}"
        )));
    }
    let m = bundle.jac_g.rows;
    let d = bundle.jac_g.cols;
    if m == 1 {
        return Ok(cg_independent(bundle, DEFAULT_ROW_EPS));
    }

    // d x m matrix whose columns are the concept gradients.
    let cols = DMatrix::from_fn(d, m, |r, c| bundle.jac_g.row(c)[r]);
    let svd = cols.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        // Entire Jacobian is zero: every score is zero and degenerate.
        return Ok((vec![0.0; m], true));
    }
    let cutoff = svd_tolerance * sigma_max;
    let pinv = svd
        .pseudo_inverse(cutoff)
        .map_err(|e| Error::Numeric(format!("svd pseudoinverse failed: {e}")))?;
    let grad = nalgebra::DVector::from_column_slice(&bundle.grad_f);
    let scores = pinv * grad;

    let degenerate = (0..m).any(|j| {
        let row = bundle.jac_g.row(j);
        row.iter().map(|v| v * v).sum::<f64>().sqrt() < DEFAULT_ROW_EPS
    });
    let out: Vec<f64> = scores.iter().cloned().collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite joint score for sample {}",
            bundle.sample_id
        )));
    }
    Ok((out, degenerate))
}

// ===========================================================================
// CAV baseline
// ===========================================================================

/// A concept-activation vector: the weight direction of a logistic probe
/// trained to detect the concept in representation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavVector {
    pub concept_index: usize,
    pub v: Vec<f64>,
    /// Accuracy of the probe on its 20% held-out split.
    pub probe_accuracy: f64,
}

impl CavVector {
    pub fn new(concept_index: usize, v: Vec<f64>, probe_accuracy: f64) -> Result<Self> {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Degeneracy(
                "CAV direction must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            concept_index,
            v,
            probe_accuracy,
        })
    }
}

/// Trains a logistic probe on (representation, concept-label) pairs with a
/// seeded 80/20 train/held-out split; the probe weights become the CAV and
/// the held-out accuracy is recorded.
pub fn train_cav(
    examples: &[(Vec<f64>, u8)],
    concept_index: usize,
    seed: u64,
) -> Result<CavVector> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if examples.len() < 5 {
        return Err(Error::Sizing(format!(
            "CAV probe needs at least 5 examples, got {}",
            examples.len()
        )));
    }
    let d = examples[0].0.len();
    if examples.iter().any(|(x, _)| x.len() != d) {
        return Err(Error::Shape("representations have mixed lengths".into()));
    }
    let pos = examples.iter().filter(|(_, y)| *y == 1).count();
    if pos == 0 || pos == examples.len() {
        return Err(Error::Degeneracy(
            "CAV probe needs both concept classes present".into(),
        ));
    }

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let held = (examples.len() / 5).max(1);
    let (held_idx, train_idx) = order.split_at(held);

    // Full-batch logistic regression; plenty for a linear probe.
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let lr = 1.0;
    let n = train_idx.len() as f64;
    for _ in 0..500 {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for &i in train_idx {
            let (x, y) = &examples[i];
            let p = crate::nnet::model::sigmoid(dot(&w, x) + b);
            let dl = p - f64::from(*y);
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += dl * xi;
            }
            gb += dl;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g / n;
        }
        b -= lr * gb / n;
    }

    let mut correct = 0usize;
    for &i in held_idx {
        let (x, y) = &examples[i];
        let pred = u8::from(dot(&w, x) + b > 0.0);
        if pred == *y {
            correct += 1;
        }
    }
    let probe_accuracy = correct as f64 / held_idx.len() as f64;
    CavVector::new(concept_index, w, probe_accuracy)
}

/// Projection of the target-logit gradient onto the unit CAV direction.
/// Invariant under positive rescaling of `v`.
pub fn cav_score(grad_f: &[f64], cav: &CavVector) -> Result<f64> {
    if grad_f.len() != cav.v.len() {
        return Err(Error::Shape(format!(
            "gradient length {} vs CAV length {}",
            grad_f.len(),
            cav.v.len()
        )));
    }
    let norm: f64 = cav.v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(dot(grad_f, &cav.v) / norm)
}

// ===========================================================================
// Condition slices and aggregation
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    CorrectNontoxic,
    MisNontoxic,
    CorrectToxic,
    MisToxic,
}

pub const CONDITIONS: [Condition; 4] = [
    Condition::CorrectNontoxic,
    Condition::MisNontoxic,
    Condition::CorrectToxic,
    Condition::MisToxic,
];

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::CorrectNontoxic => "correct_nontoxic",
            Condition::MisNontoxic => "mis_nontoxic",
            Condition::CorrectToxic => "correct_toxic",
            Condition::MisToxic => "mis_toxic",
        }
    }

    /// Slice naming follows the true label: `mis_nontoxic` is true-nontoxic
    /// predicted-toxic, `mis_toxic` is true-toxic predicted-nontoxic.
    fn of(truth: u8, pred: u8) -> Condition {
        match (truth, pred) {
            (0, 0) => Condition::CorrectNontoxic,
            (0, _) => Condition::MisNontoxic,
            (_, 0) => Condition::MisToxic,
            _ => Condition::CorrectToxic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSlices {
    /// Sample ids per condition, in corpus order; indexed by `CONDITIONS`.
    pub ids: [Vec<String>; 4],
}

impl ConditionSlices {
    pub fn counts(&self) -> [usize; 4] {
        [
            self.ids[0].len(),
            self.ids[1].len(),
            self.ids[2].len(),
            self.ids[3].len(),
        ]
    }
}

/// Partitions a binarized corpus by (true label, predicted label).
/// `predictions` must contain one label per sample id.
pub fn condition_slices(
    corpus: &Corpus,
    predictions: &BTreeMap<String, u8>,
) -> Result<ConditionSlices> {
    if !corpus.is_binarized() {
        return Err(Error::Config("condition slices need binarized labels".into()));
    }
    let mut ids: [Vec<String>; 4] = Default::default();
    for s in &corpus.samples {
        let pred = predictions.get(&s.id).ok_or_else(|| {
            Error::Pairing(format!("no prediction for sample {}", s.id))
        })?;
        let condition = Condition::of(s.label.unwrap(), *pred);
        let slot = CONDITIONS.iter().position(|c| c == &condition).unwrap();
        ids[slot].push(s.id.clone());
    }
    Ok(ConditionSlices { ids })
}

/// Mean concept scores per condition. Empty slices yield `None` (reported
/// as NA downstream), never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub method: Method,
    pub mode: ScoreMode,
    pub concepts: Vec<String>,
    /// Indexed `[condition][concept]`, following `CONDITIONS` order.
    pub table: Vec<Vec<Option<f64>>>,
    pub counts: [usize; 4],
}

pub fn mean_scores(
    records: &[AttributionRecord],
    slices: &ConditionSlices,
    mode: ScoreMode,
    concepts: &[String],
) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no attribution records".into()));
    }
    let method = records[0].method;
    let m = records[0].scores.len();
    if m != concepts.len() {
        return Err(Error::Shape(format!(
            "records carry {m} scores but {} concept names given",
            concepts.len()
        )));
    }
    if records.iter().any(|r| r.method != method || r.scores.len() != m) {
        return Err(Error::Config(
            "records mix methods or concept counts".into(),
        ));
    }
    let by_id: BTreeMap<&str, &AttributionRecord> =
        records.iter().map(|r| (r.sample_id.as_str(), r)).collect();

    let mut table = Vec::with_capacity(4);
    for slice_ids in &slices.ids {
        if slice_ids.is_empty() {
            table.push(vec![None; m]);
            continue;
        }
        let mut sums = vec![0.0; m];
        for id in slice_ids {
            let record = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Pairing(format!("no attribution record for sample {id}"))
            })?;
            for (acc, &s) in sums.iter_mut().zip(&record.scores) {
                *acc += mode.apply(s);
            }
        }
        let n = slice_ids.len() as f64;
        table.push(sums.into_iter().map(|s| Some(s / n)).collect());
    }
    Ok(AggregateReport {
        method,
        mode,
        concepts: concepts.to_vec(),
        table,
        counts: slices.counts(),
    })
}

// ===========================================================================
// Corpus-level pipeline
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributionOptions {
    pub row_eps: f64,
    pub svd_tolerance: f64,
}

impl Default for AttributionOptions {
    fn default() -> Self {
        Self {
            row_eps: DEFAULT_ROW_EPS,
            svd_tolerance: DEFAULT_SVD_TOLERANCE,
        }
    }
}

/// Computes one attribution record per sample for the given method.
/// For `Method::Cav`, `cavs` must hold one vector per schema concept.
pub fn attribute_corpus(
    target: &ModelParams,
    concept: &ModelParams,
    corpus: &Corpus,
    method: Method,
    options: &AttributionOptions,
    cavs: Option<&[CavVector]>,
) -> Result<Vec<AttributionRecord>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("attribution corpus is empty".into()));
    }
    if !corpus.is_binarized() {
        return Err(Error::Config("attribution needs binarized labels".into()));
    }
    if concept.n_concepts() != corpus.schema.len() {
        return Err(Error::Shape(format!(
            "concept model has {} heads, schema has {}",
            concept.n_concepts(),
            corpus.schema.len()
        )));
    }
    if method == Method::Cav {
        let cavs = cavs.ok_or_else(|| {
            Error::Config("CAV attribution requires trained CAV vectors".into())
        })?;
        if cavs.len() != corpus.schema.len() {
            return Err(Error::Shape(format!(
                "{} CAV vectors for {} concepts",
                cavs.len(),
                corpus.schema.len()
            )));
        }
    }

    let mut records = Vec::with_capacity(corpus.len());
    for s in &corpus.samples {
        let x = target.represent_text(&s.text)?;
        let predicted = target.predict_label(&x)?;
        let mut bundle = gradients(target, concept, &x, &s.id)?;
        // Orient along the predicted class's logit.
        if predicted == 0 {
            for g in &mut bundle.grad_f {
                *g = -*g;
            }
        }
        let (scores, degenerate) = match method {
            Method::CgIndependent => cg_independent(&bundle, options.row_eps),
            Method::CgJoint => cg_joint(&bundle, options.svd_tolerance)?,
            Method::Cav => {
                let cavs = cavs.unwrap();
                let mut out = Vec::with_capacity(cavs.len());
                for cav in cavs {
                    out.push(cav_score(&bundle.grad_f, cav)?);
                }
                (out, false)
            }
        };
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite attribution score for sample {}",
                s.id
            )));
        }
        records.push(AttributionRecord {
            sample_id: s.id.clone(),
            method,
            scores,
            true_label: s.label.unwrap(),
            predicted_label: predicted,
            degenerate,
        });
    }
    Ok(records)
}

/// Collects (representation, concept-label) pairs and trains one CAV per
/// schema concept on the target model's representation space.
pub fn train_cavs_for_corpus(
    target: &ModelParams,
    corpus: &Corpus,
    seed: u64,
) -> Result<Vec<CavVector>> {
    if !corpus.is_binarized() {
        return Err(Error::Config("CAV training needs binarized labels".into()));
    }
    let mut reps = Vec::with_capacity(corpus.len());
    for s in &corpus.samples {
        reps.push(target.represent_text(&s.text)?);
    }
    let mut cavs = Vec::with_capacity(corpus.schema.len());
    for j in 0..corpus.schema.len() {
        let examples: Vec<(Vec<f64>, u8)> = reps
            .iter()
            .zip(&corpus.samples)
            .map(|(x, s)| (x.clone(), s.concept_labels.as_ref().unwrap()[j]))
            .collect();
        cavs.push(train_cav(&examples, j, seed.wrapping_add(j as u64))?);
    }
    Ok(cavs)
}

/// Serializes attribution records as JSONL (one record per line).
pub fn write_records_jsonl(records: &[AttributionRecord], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::model::Mat;
    use rand::Rng;
    use rand::SeedableRng;

    fn bundle_from(grad_f: Vec<f64>, rows: Vec<Vec<f64>>) -> GradientBundle {
        let m = rows.len();
        let d = grad_f.len();
        let mut jac = Mat::zeros(m, d);
        for (j, row) in rows.iter().enumerate() {
            jac.row_mut(j).copy_from_slice(row);
        }
        GradientBundle {
            sample_id: "t".into(),
            x: vec![0.0; d],
            grad_f,
            jac_g: jac,
        }
    }

    #[test]
    fn identical_f_and_g_score_one() {
        let g = vec![0.3, -0.7, 0.2];
        let bundle = bundle_from(g.clone(), vec![g]);
        let (scores, degenerate) = cg_independent(&bundle, DEFAULT_ROW_EPS);
        assert!(!degenerate);
        assert!((scores[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_scores_zero_and_flags() {
        let bundle = bundle_from(vec![1.0, 2.0], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let (scores, degenerate) = cg_independent(&bundle, DEFAULT_ROW_EPS);
        assert!(degenerate);
        assert_eq!(scores[0], 0.0);
        assert_eq!(scores[1], 1.0);
    }

    #[test]
    fn independent_matches_hand_computed_projection() {
        let bundle = bundle_from(vec![2.0, 0.0], vec![vec![1.0, 1.0]]);
        let (scores, _) = cg_independent(&bundle, DEFAULT_ROW_EPS);
        // (row . grad) / ||row||^2 = 2 / 2 = 1
        assert!((scores[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_concept_joint_is_bitwise_independent() {
        let bundle = bundle_from(vec![0.4, -1.1, 0.9], vec![vec![0.5, 0.25, -0.75]]);
        let (ind, _) = cg_independent(&bundle, DEFAULT_ROW_EPS);
        let (joint, _) = cg_joint(&bundle, DEFAULT_SVD_TOLERANCE).unwrap();
        assert_eq!(ind[0].to_bits(), joint[0].to_bits());
    }

    #[test]
    fn joint_recovers_planted_linear_combination() {
        // f = a*g1 + b*g2 with independent rows: joint scores are (a, b).
        let g1 = vec![1.0, 0.0, 2.0, -1.0];
        let g2 = vec![0.0, 1.0, -1.0, 3.0];
        let (a, b) = (2.5, -0.75);
        let grad: Vec<f64> = g1
            .iter()
            .zip(&g2)
            .map(|(u, v)| a * u + b * v)
            .collect();
        let bundle = bundle_from(grad, vec![g1, g2]);
        let (scores, degenerate) = cg_joint(&bundle, DEFAULT_SVD_TOLERANCE).unwrap();
        assert!(!degenerate);
        assert!((scores[0] - a).abs() < 1e-10);
        assert!((scores[1] - b).abs() < 1e-10);
    }

    #[test]
    fn joint_with_orthonormal_rows_matches_independent() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let bundle = bundle_from(vec![0.3, -0.6, 0.5], rows);
        let (ind, _) = cg_independent(&bundle, DEFAULT_ROW_EPS);
        let (joint, _) = cg_joint(&bundle, DEFAULT_SVD_TOLERANCE).unwrap();
        for (a, b) in ind.iter().zip(&joint) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_all_zero_jacobian_is_degenerate_zero() {
        let bundle = bundle_from(vec![1.0, 1.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let (scores, degenerate) = cg_joint(&bundle, DEFAULT_SVD_TOLERANCE).unwrap();
        assert!(degenerate);
        assert_eq!(scores, vec![0.0, 0.0]);
    }

    #[test]
    fn pinv_satisfies_defining_property_over_random_jacobians() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(31);
        for _ in 0..100 {
            let m = rng.gen_range(1..5usize);
            let d = rng.gen_range(m..8usize.max(m + 1));
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let grad: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let bundle = bundle_from(grad, rows);

            // J J+ J = J in Frobenius norm, with J the d x m column stack.
            let cols = DMatrix::from_fn(d, m, |r, c| bundle.jac_g.row(c)[r]);
            let svd = cols.clone().svd(true, true);
            let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
            let pinv = svd.pseudo_inverse(DEFAULT_SVD_TOLERANCE * smax).unwrap();
            let residual = (&cols * &pinv * &cols) - &cols;
            assert!(
                residual.norm() < 1e-8,
                "pinv defining property violated: {}",
                residual.norm()
            );
            // And the joint scores are finite.
            let (scores, _) = cg_joint(&bundle, DEFAULT_SVD_TOLERANCE).unwrap();
            assert!(scores.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn cav_probe_recovers_planted_axis() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let d = 16;
        let examples: Vec<(Vec<f64>, u8)> = (0..600)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y = u8::from(x[0] > 0.0);
                (x, y)
            })
            .collect();
        let cav = train_cav(&examples, 0, 9).unwrap();
        assert!(cav.probe_accuracy >= 0.95, "accuracy {}", cav.probe_accuracy);
        let norm: f64 = cav.v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = cav.v[0] / norm;
        assert!(
            cos >= (8.0f64.to_radians()).cos(),
            "angle to planted axis too large (cos {cos})"
        );
    }

    #[test]
    fn cav_score_is_scale_invariant() {
        let cav1 = CavVector::new(0, vec![0.4, -0.2, 0.1], 1.0).unwrap();
        let cav2 = CavVector::new(0, cav1.v.iter().map(|x| x * 7.5).collect(), 1.0).unwrap();
        let grad = vec![0.3, 0.9, -1.2];
        let a = cav_score(&grad, &cav1).unwrap();
        let b = cav_score(&grad, &cav2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cav_shuffled_labels_score_near_chance() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(12);
        let examples: Vec<(Vec<f64>, u8)> = (0..800)
            .map(|_| {
                let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (x, u8::from(rng.gen::<bool>()))
            })
            .collect();
        let cav = train_cav(&examples, 0, 3).unwrap();
        assert!(
            (cav.probe_accuracy - 0.5).abs() <= 0.1,
            "random labels gave accuracy {}",
            cav.probe_accuracy
        );
    }

    #[test]
    fn cav_single_class_is_degenerate() {
        let examples: Vec<(Vec<f64>, u8)> =
            (0..10).map(|i| (vec![i as f64, 1.0], 1)).collect();
        assert!(matches!(
            train_cav(&examples, 0, 0),
            Err(Error::Degeneracy(_))
        ));
    }

    #[test]
    fn zero_cav_vector_is_rejected() {
        assert!(matches!(
            CavVector::new(0, vec![0.0, 0.0], 0.9),
            Err(Error::Degeneracy(_))
        ));
    }

    fn toy_corpus() -> Corpus {
        use crate::corpus::{ConceptSchema, Sample, SplitTag};
        let schema = ConceptSchema::new(vec!["c0".into()]).unwrap();
        let samples = (0..4)
            .map(|i| Sample {
                id: format!("s{i}"),
                text: format!("text {i}"),
                raw_toxicity: f64::from(i % 2),
                raw_concepts: vec![0.0],
                label: Some((i % 2) as u8),
                concept_labels: Some(vec![0]),
                origin: None,
            })
            .collect();
        Corpus {
            schema,
            samples,
            split_tag: SplitTag::Test,
        }
    }

    #[test]
    fn condition_slices_partition_by_truth_and_prediction() {
        let corpus = toy_corpus();
        // s0 true 0, s1 true 1, s2 true 0, s3 true 1.
        let mut preds = BTreeMap::new();
        preds.insert("s0".to_string(), 0u8); // correct_nontoxic
        preds.insert("s1".to_string(), 0u8); // mis_toxic
        preds.insert("s2".to_string(), 1u8); // mis_nontoxic
        preds.insert("s3".to_string(), 1u8); // correct_toxic
        let slices = condition_slices(&corpus, &preds).unwrap();
        assert_eq!(slices.ids[0], vec!["s0"]);
        assert_eq!(slices.ids[1], vec!["s2"]);
        assert_eq!(slices.ids[2], vec!["s3"]);
        assert_eq!(slices.ids[3], vec!["s1"]);
        assert_eq!(slices.counts(), [1, 1, 1, 1]);
    }

    #[test]
    fn missing_prediction_is_pairing_error() {
        let corpus = toy_corpus();
        let preds = BTreeMap::new();
        assert!(matches!(
            condition_slices(&corpus, &preds),
            Err(Error::Pairing(_))
        ));
    }

    #[test]
    fn mean_scores_empty_slice_is_na_not_zero() {
        let corpus = toy_corpus();
        let mut preds = BTreeMap::new();
        for i in 0..4 {
            // Predict everything toxic: no correct_nontoxic, no mis_toxic.
            preds.insert(format!("s{i}"), 1u8);
        }
        let slices = condition_slices(&corpus, &preds).unwrap();
        let records: Vec<AttributionRecord> = (0..4)
            .map(|i| AttributionRecord {
                sample_id: format!("s{i}"),
                method: Method::CgIndependent,
                scores: vec![0.5],
                true_label: (i % 2) as u8,
                predicted_label: 1,
                degenerate: false,
            })
            .collect();
        let report = mean_scores(
            &records,
            &slices,
            ScoreMode::Signed,
            &["c0".to_string()],
        )
        .unwrap();
        assert_eq!(report.table[0][0], None, "empty slice must be NA");
        assert_eq!(report.table[1][0], Some(0.5));
        assert_eq!(report.table[3][0], None);
    }

    #[test]
    fn mean_scores_absolute_vs_signed() {
        let corpus = toy_corpus();
        let mut preds = BTreeMap::new();
        for i in 0..4 {
            preds.insert(format!("s{i}"), (i % 2) as u8); // all correct
        }
        let slices = condition_slices(&corpus, &preds).unwrap();
        let records: Vec<AttributionRecord> = (0..4)
            .map(|i| AttributionRecord {
                sample_id: format!("s{i}"),
                method: Method::CgIndependent,
                scores: vec![if i < 2 { -1.0 } else { 3.0 }],
                true_label: (i % 2) as u8,
                predicted_label: (i % 2) as u8,
                degenerate: false,
            })
            .collect();
        let concepts = vec!["c0".to_string()];
        let signed = mean_scores(&records, &slices, ScoreMode::Signed, &concepts).unwrap();
        let absolute = mean_scores(&records, &slices, ScoreMode::Absolute, &concepts).unwrap();
        // correct_nontoxic slice holds s0 (-1.0) and s2 (3.0).
        assert_eq!(signed.table[0][0], Some(1.0));
        assert_eq!(absolute.table[0][0], Some(2.0));
    }

    #[test]
    fn mean_scores_missing_record_is_pairing_error() {
        let corpus = toy_corpus();
        let mut preds = BTreeMap::new();
        for i in 0..4 {
            preds.insert(format!("s{i}"), 0u8);
        }
        let slices = condition_slices(&corpus, &preds).unwrap();
        let records = vec![AttributionRecord {
            sample_id: "s0".into(),
            method: Method::CgIndependent,
            scores: vec![1.0],
            true_label: 0,
            predicted_label: 0,
            degenerate: false,
        }];
        assert!(matches!(
            mean_scores(&records, &slices, ScoreMode::Signed, &["c0".to_string()]),
            Err(Error::Pairing(_))
        ));
    }
}
