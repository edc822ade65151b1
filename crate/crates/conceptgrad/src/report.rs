//! Tabular artifacts: score-aggregate comparison tables, alignment-score
//! histograms, word-frequency tables, metric tables, and k-fold summaries.
//!
//! Everything here renders to plain CSV strings (or small serializable
//! structs) so outputs diff cleanly and reproduce byte-for-byte; plotting is
//! deliberately out of scope.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{AggregateReport, ScoreMode, CONDITIONS};
use crate::augment::{self, AugmentationBatch, BeforeAfterReport};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lexicon::LexiconSet;
use crate::nnet::metrics::{evaluate, ConceptMetrics, EvalReport, Metrics};
use crate::nnet::model::{Head, ModelSpec};
use crate::nnet::train::{train_target, TrainConfig};
use crate::text::tokenize;

// ===========================================================================
// Histograms
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramRange {
    /// Span of the (mode-transformed) data; degenerate spans widen by 0.5
    /// on each side so a histogram is always emittable.
    Auto,
    Fixed { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_count: usize,
    pub range: HistogramRange,
    pub mode: ScoreMode,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bin_count: 30,
            range: HistogramRange::Auto,
            mode: ScoreMode::Signed,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if let HistogramRange::Fixed { lo, hi } = self.range {
            // NaN bounds must be rejected too, so spell out both conditions.
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Config(format!(
                    "fixed histogram range must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Bins scores into `bin_count` equal-width bins over the requested range.
///
/// Bins are half-open `[lo, hi)` except the last, which is closed; scores
/// outside a fixed range clamp into the end bins so counts always sum to the
/// input size. Assignment compares against the emitted bin edges directly,
/// so a recount from the returned bounds reproduces the counts exactly.
pub fn histogram(scores: &[f64], spec: &HistogramSpec) -> Result<Vec<HistogramBin>> {
    spec.validate()?;
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores to bin".into()));
    }
    let values: Vec<f64> = scores.iter().map(|&s| spec.mode.apply(s)).collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score {bad} in histogram input")));
    }

    let (lo, hi) = match spec.range {
        HistogramRange::Fixed { lo, hi } => (lo, hi),
        HistogramRange::Auto => {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        }
    };

    let n = spec.bin_count;
    let width = (hi - lo) / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|i| lo + width * i as f64).collect();
    edges[n] = hi;

    let mut bins: Vec<HistogramBin> = (0..n)
        .map(|i| HistogramBin {
            lo: edges[i],
            hi: edges[i + 1],
            count: 0,
        })
        .collect();
    for &v in &values {
        let clamped = v.clamp(lo, hi);
        // Index of the first interior edge strictly above the value; the
        // closed last bin falls out of clamping to `hi`.
        let idx = edges[1..n].partition_point(|&e| clamped >= e);
        bins[idx].count += 1;
    }
    Ok(bins)
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.count));
    }
    out
}

// ===========================================================================
// Word frequencies
// ===========================================================================

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub word: String,
    pub count: usize,
}

/// Occurrence counts of lexicon words across a corpus, sorted by count
/// descending (word ascending on ties); words that never occur are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
}

/// Counts case-folded token occurrences of each set word across the corpus.
pub fn word_frequencies(corpus: &Corpus, set: &LexiconSet) -> Result<FrequencyTable> {
    if set.words.is_empty() {
        return Err(Error::EmptyInput(format!(
            "lexicon set {} has no words to count",
            set.set_id
        )));
    }
    let mut counts: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for sample in &corpus.samples {
        for token in tokenize(&sample.text, true) {
            if let Some(word) = set.words.get(token.as_str()) {
                *counts.entry(word.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut rows: Vec<FrequencyRow> = counts
        .into_iter()
        .map(|(word, count)| FrequencyRow {
            word: word.to_string(),
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    Ok(FrequencyTable { rows })
}

pub fn frequency_csv(table: &FrequencyTable) -> String {
    let mut out = String::from("word,count\n");
    for row in &table.rows {
        out.push_str(&format!("{},{}\n", row.word, row.count));
    }
    out
}

// ===========================================================================
// Comparative score table
// ===========================================================================

/// Renders aggregate reports as one CSV: a row per concept and a `counts`
/// footer per method×mode section, columns fixed to the four prediction
/// conditions. Empty slices render as `NA`, never as zero.
pub fn comparative_table(reports: &[AggregateReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no aggregate reports to tabulate".into()));
    }
    let concepts = &reports[0].concepts;
    for r in &reports[1..] {
        if &r.concepts != concepts {
            return Err(Error::Config(format!(
                "aggregate reports disagree on concepts: {:?} vs {:?}",
                concepts, r.concepts
            )));
        }
    }

    let mut out = String::from("method,mode,row");
    for c in CONDITIONS {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');

    for r in reports {
        for (j, concept) in r.concepts.iter().enumerate() {
            out.push_str(&format!("{},{},{}", r.method.as_str(), r.mode.as_str(), concept));
            for cond in 0..CONDITIONS.len() {
                match r.table[cond][j] {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("{},{},counts", r.method.as_str(), r.mode.as_str()));
        for count in r.counts {
            out.push_str(&format!(",{count}"));
        }
        out.push('\n');
    }
    Ok(out)
}

// ===========================================================================
// Metric tables
// ===========================================================================

pub fn metrics_csv(metrics: &Metrics) -> String {
    let mut out = String::from("metric,value\n");
    out.push_str(&format!("accuracy,{}\n", metrics.accuracy));
    out.push_str(&format!("macro_f1,{}\n", metrics.macro_f1));
    for (cls, prf) in ["nontoxic", "toxic"].iter().zip(&metrics.per_class) {
        out.push_str(&format!("precision_{cls},{}\n", prf.precision));
        out.push_str(&format!("recall_{cls},{}\n", prf.recall));
        out.push_str(&format!("f1_{cls},{}\n", prf.f1));
    }
    let c = &metrics.confusion;
    out.push_str(&format!("tn,{}\nfp,{}\nfn,{}\ntp,{}\n", c.tn, c.fp, c.fn_, c.tp));
    out
}

pub fn concept_metrics_csv(metrics: &ConceptMetrics) -> String {
    let mut out = String::from("concept,accuracy,precision,recall,f1,tn,fp,fn,tp\n");
    for m in &metrics.per_concept {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.concept,
            m.accuracy,
            m.positive.precision,
            m.positive.recall,
            m.positive.f1,
            m.confusion.tn,
            m.confusion.fp,
            m.confusion.fn_,
            m.confusion.tp
        ));
    }
    out.push_str(&format!("macro_f1,{},,,,,,,\n", metrics.macro_f1));
    out.push_str(&format!("mean_accuracy,{},,,,,,,\n", metrics.mean_accuracy));
    out
}

/// One row per lexicon set; one column per concept, `NA` when the set
/// matched no sentences.
pub fn wca_csv(results: &[crate::lexicon::WcaResult], concepts: &[String]) -> Result<String> {
    let mut out = String::from("set_id,mode,sentence_count");
    for c in concepts {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in results {
        if r.scores.len() != concepts.len() {
            return Err(Error::Shape(format!(
                "alignment result for set {} carries {} scores, expected {}",
                r.set_id,
                r.scores.len(),
                concepts.len()
            )));
        }
        out.push_str(&format!("{},{},{}", r.set_id, r.mode.as_str(), r.sentence_count));
        for s in &r.scores {
            match s {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push_str(",NA"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Two metric rows (before/after) plus a delta footer.
pub fn before_after_csv(report: &BeforeAfterReport) -> String {
    let mut out =
        String::from("arm,accuracy,macro_f1,toxic_f1,tn,fp,fn,tp\n");
    for (arm, m) in [
        ("before", &report.metrics_before),
        ("after", &report.metrics_after),
    ] {
        out.push_str(&format!(
            "{arm},{},{},{},{},{},{},{}\n",
            m.accuracy,
            m.macro_f1,
            m.per_class[1].f1,
            m.confusion.tn,
            m.confusion.fp,
            m.confusion.fn_,
            m.confusion.tp
        ));
    }
    out.push_str(&format!("delta_f1,{},,,,,,\n", report.delta_f1));
    out
}

// ===========================================================================
// K-fold cross-validation
// ===========================================================================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub toxic_f1: f64,
    pub macro_f1: f64,
}

/// Mean and sample standard deviation (n−1) over folds; `f1` is the
/// toxic-class F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfoldSummary {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfoldReport {
    pub k: usize,
    pub fold_sizes: Vec<usize>,
    /// Validation-fold sample ids, indexed by fold.
    pub fold_ids: Vec<Vec<String>>,
    pub before: Vec<FoldMetrics>,
    pub summary_before: KfoldSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after: Option<Vec<FoldMetrics>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_after: Option<KfoldSummary>,
}

fn summarize(folds: &[FoldMetrics]) -> KfoldSummary {
    let n = folds.len() as f64;
    let mean = |f: &dyn Fn(&FoldMetrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let std = |f: &dyn Fn(&FoldMetrics) -> f64, mu: f64| {
        if folds.len() < 2 {
            0.0
        } else {
            (folds.iter().map(|m| (f(m) - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        }
    };
    let acc = |m: &FoldMetrics| m.accuracy;
    let f1 = |m: &FoldMetrics| m.toxic_f1;
    let mean_accuracy = mean(&acc);
    let mean_f1 = mean(&f1);
    KfoldSummary {
        mean_accuracy,
        std_accuracy: std(&acc, mean_accuracy),
        mean_f1,
        std_f1: std(&f1, mean_f1),
    }
}

fn eval_fold(
    fold: usize,
    train: &Corpus,
    val: &Corpus,
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<FoldMetrics> {
    let (params, _) = train_target(train, val, spec, config)?;
    match evaluate(&params, val, Head::Target)? {
        EvalReport::Target(m) => Ok(FoldMetrics {
            fold,
            accuracy: m.accuracy,
            toxic_f1: m.per_class[1].f1,
            macro_f1: m.macro_f1,
        }),
        EvalReport::Concepts(_) => unreachable!("target head evaluation"),
    }
}

/// Seeded k-fold cross-validation of the target model: fold `i` is held out
/// for validation and evaluation, the rest trains. When an augmentation
/// batch is given, its samples merge into every fold's *training* portion
/// only and the report carries a second (after) arm over identical folds.
pub fn kfold(
    corpus: &Corpus,
    k: usize,
    spec: &ModelSpec,
    config: &TrainConfig,
    batch: Option<&AugmentationBatch>,
) -> Result<KfoldReport> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if corpus.len() < k {
        return Err(Error::Sizing(format!(
            "cannot cut {} samples into {k} folds",
            corpus.len()
        )));
    }
    if !corpus.is_binarized() {
        return Err(Error::Config("k-fold requires a binarized corpus".into()));
    }

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);

    // First (len % k) folds take one extra sample: sizes differ by at most 1.
    let base = corpus.len() / k;
    let extra = corpus.len() % k;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let mut before = Vec::with_capacity(k);
    let mut after = batch.map(|_| Vec::with_capacity(k));
    let mut fold_ids = Vec::with_capacity(k);
    for (i, fold) in folds.iter().enumerate() {
        let in_fold: std::collections::BTreeSet<usize> = fold.iter().copied().collect();
        let val = Corpus {
            schema: corpus.schema.clone(),
            samples: fold.iter().map(|&idx| corpus.samples[idx].clone()).collect(),
            split_tag: crate::corpus::SplitTag::Val,
        };
        let train = Corpus {
            schema: corpus.schema.clone(),
            samples: (0..corpus.len())
                .filter(|idx| !in_fold.contains(idx))
                .map(|idx| corpus.samples[idx].clone())
                .collect(),
            split_tag: crate::corpus::SplitTag::Train,
        };
        fold_ids.push(val.samples.iter().map(|s| s.id.clone()).collect());
        before.push(eval_fold(i, &train, &val, spec, config)?);
        if let (Some(after), Some(batch)) = (after.as_mut(), batch) {
            let augmented = augment::merge(&train, batch)?;
            after.push(eval_fold(i, &augmented, &val, spec, config)?);
        }
    }

    let summary_before = summarize(&before);
    let summary_after = after.as_deref().map(summarize);
    Ok(KfoldReport {
        k,
        fold_sizes: folds.iter().map(Vec::len).collect(),
        fold_ids,
        before,
        summary_before,
        after,
        summary_after,
    })
}

/// One summary row per arm: before always, after when an augmentation batch
/// was supplied.
pub fn kfold_csv(report: &KfoldReport) -> String {
    let mut out = String::from("arm,k,mean_accuracy,std_accuracy,mean_f1,std_f1\n");
    let row = |arm: &str, s: &KfoldSummary| {
        format!(
            "{arm},{},{},{},{},{}\n",
            report.k, s.mean_accuracy, s.std_accuracy, s.mean_f1, s.std_f1
        )
    };
    out.push_str(&row("before", &report.summary_before));
    if let Some(s) = &report.summary_after {
        out.push_str(&row("after", s));
    }
    out
}

/// Writes a rendered artifact, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

// ===========================================================================
