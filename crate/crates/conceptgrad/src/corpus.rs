//! Corpus loading, binarization, splitting, class weights, and the
//! planted-trigger synthetic generator used as a test oracle.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

// ===========================================================================
// Types
// ===========================================================================

/// Ordered list of concept names; fixes the meaning of every per-concept
/// vector in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSchema {
    names: Vec<String>,
}

impl ConceptSchema {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("concept schema must not be empty".into()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.trim().is_empty() {
                return Err(Error::Config("concept names must be non-empty".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate concept name: {name}")));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub raw_toxicity: f64,
    pub raw_concepts: Vec<f64>,
    /// Set by `binarize` (or the synthesizer); `None` on freshly loaded data.
    pub label: Option<u8>,
    pub concept_labels: Option<Vec<u8>>,
    /// Provenance tag for merged-in augmentation samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    Aug,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub schema: ConceptSchema,
    pub samples: Vec<Sample>,
    pub split_tag: SplitTag,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True once every sample carries binary labels.
    pub fn is_binarized(&self) -> bool {
        self.samples
            .iter()
            .all(|s| s.label.is_some() && s.concept_labels.is_some())
    }

    /// Content hash over (id, text, label) in sample order; identifies the
    /// exact evaluation set in downstream reports.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for s in &self.samples {
            hasher.update(s.id.as_bytes());
            hasher.update([0u8]);
            hasher.update(s.text.as_bytes());
            hasher.update([0u8]);
            hasher.update([s.label.unwrap_or(255)]);
        }
        hex_lower(&hasher.finalize())
    }
}

fn hex_lower(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub balance_classes: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("val_fraction", self.val_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must lie in (0, 1), got {f}"
                )));
            }
        }
        let sum = self.train_fraction + self.val_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1 (got {sum})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

// ===========================================================================
// Loading raw data
// ===========================================================================

/// Loads raw scored data (columns: optional `id`, `text`, `toxicity`, one
/// column per concept name). Labels stay unset until `binarize`.
pub fn load_corpus(path: &Path, schema: &ConceptSchema, format: CorpusFormat) -> Result<Corpus> {
    let samples = match format {
        CorpusFormat::Csv => load_csv(path, schema)?,
        CorpusFormat::Jsonl => load_jsonl(path, schema)?,
    };
    if samples.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no samples in {}",
            path.display()
        )));
    }
    check_unique_ids(&samples)?;
    Ok(Corpus {
        schema: schema.clone(),
        samples,
        split_tag: SplitTag::Unsplit,
    })
}

fn check_unique_ids(samples: &[Sample]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in samples {
        if !seen.insert(s.id.clone()) {
            return Err(Error::Schema(format!("duplicate sample id: {}", s.id)));
        }
    }
    Ok(())
}

fn parse_score(raw: &str, column: &str, line: usize, id: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Row {
        line,
        id: id.to_string(),
        msg: format!("unparsable {column} score: {raw:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Row {
            line,
            id: id.to_string(),
            msg: format!("non-finite {column} score"),
        });
    }
    Ok(v)
}

fn load_csv(path: &Path, schema: &ConceptSchema) -> Result<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let text_col = col("text").ok_or_else(|| Error::Schema("missing column: text".into()))?;
    let tox_col =
        col("toxicity").ok_or_else(|| Error::Schema("missing column: toxicity".into()))?;
    let id_col = col("id");
    let mut concept_cols = Vec::with_capacity(schema.len());
    for name in schema.names() {
        let idx = col(name)
            .ok_or_else(|| Error::Schema(format!("missing concept column: {name}")))?;
        concept_cols.push(idx);
    }

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Row {
            line,
            id: String::new(),
            msg: format!("malformed csv record: {e}"),
        })?;
        let id = match id_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => format!("row-{:06}", i + 1),
        };
        let text = record.get(text_col).unwrap_or("").to_string();
        if text.trim().is_empty() {
            return Err(Error::Row {
                line,
                id,
                msg: "empty text".into(),
            });
        }
        let raw_toxicity = parse_score(record.get(tox_col).unwrap_or(""), "toxicity", line, &id)?;
        let mut raw_concepts = Vec::with_capacity(schema.len());
        for (name, &c) in schema.names().iter().zip(&concept_cols) {
            raw_concepts.push(parse_score(record.get(c).unwrap_or(""), name, line, &id)?);
        }
        samples.push(Sample {
            id,
            text,
            raw_toxicity,
            raw_concepts,
            label: None,
            concept_labels: None,
            origin: None,
        });
    }
    Ok(samples)
}

fn load_jsonl(path: &Path, schema: &ConceptSchema) -> Result<Vec<Sample>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Row {
            line: line_no,
            id: String::new(),
            msg: format!("malformed json: {e}"),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Row {
            line: line_no,
            id: String::new(),
            msg: "expected a json object".into(),
        })?;
        let id = match obj.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(v) if v.is_number() => v.to_string(),
            _ => format!("row-{line_no:06}"),
        };
        let text = obj
            .get("text")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Row {
                line: line_no,
                id: id.clone(),
                msg: "missing text field".into(),
            })?
            .to_string();
        if text.trim().is_empty() {
            return Err(Error::Row {
                line: line_no,
                id,
                msg: "empty text".into(),
            });
        }
        let num = |key: &str| -> Result<f64> {
            let v = obj
                .get(key)
                .ok_or_else(|| Error::Schema(format!("missing concept column: {key}")))?;
            v.as_f64().ok_or_else(|| Error::Row {
                line: line_no,
                id: id.clone(),
                msg: format!("unparsable {key} score: {v}"),
            })
        };
        let raw_toxicity = match obj.get("toxicity") {
            Some(v) => v.as_f64().ok_or_else(|| Error::Row {
                line: line_no,
                id: id.clone(),
                msg: format!("unparsable toxicity score: {v}"),
            })?,
            None => return Err(Error::Schema("missing column: toxicity".into())),
        };
        let mut raw_concepts = Vec::with_capacity(schema.len());
        for name in schema.names() {
            raw_concepts.push(num(name)?);
        }
        samples.push(Sample {
            id,
            text,
            raw_toxicity,
            raw_concepts,
            label: None,
            concept_labels: None,
            origin: None,
        });
    }
    Ok(samples)
}

// ===========================================================================
// Binarize / split / weights
// ===========================================================================

/// Threshold raw scores into binary labels: toxicity strictly above
/// `toxicity_threshold` (a score exactly at the threshold is negative),
/// concepts strictly above `concept_threshold`.
pub fn binarize(corpus: &Corpus, toxicity_threshold: f64, concept_threshold: f64) -> Result<Corpus> {
    if !toxicity_threshold.is_finite() || !concept_threshold.is_finite() {
        return Err(Error::Config("thresholds must be finite".into()));
    }
    let mut out = corpus.clone();
    for s in &mut out.samples {
        s.label = Some(u8::from(s.raw_toxicity > toxicity_threshold));
        s.concept_labels = Some(
            s.raw_concepts
                .iter()
                .map(|&c| u8::from(c > concept_threshold))
                .collect(),
        );
    }
    Ok(out)
}

/// Splits an unsplit corpus into train/val/test partitions.
///
/// The shuffle is seeded. With `balance_classes` the train partition draws
/// equal positive/negative counts (the remainder of the majority class flows
/// into val/test, so the three parts still form an exact partition).
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus)> {
    spec.validate()?;
    if corpus.split_tag != SplitTag::Unsplit {
        return Err(Error::Config("split requires an unsplit corpus".into()));
    }
    let n = corpus.len();
    if n < 3 {
        return Err(Error::Sizing(format!(
            "cannot split {n} samples three ways"
        )));
    }
    let mut n_train = (n as f64 * spec.train_fraction).round() as usize;
    let mut n_val = (n as f64 * spec.val_fraction).round() as usize;
    if n_train + n_val >= n {
        n_val = n.saturating_sub(n_train + 1).max(1);
    }
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::Sizing(format!(
            "fractions leave an empty partition for {n} samples"
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let train_idx: Vec<usize>;
    let rest: Vec<usize>;
    if spec.balance_classes {
        if !corpus.is_binarized() {
            return Err(Error::Config(
                "balance_classes requires a binarized corpus".into(),
            ));
        }
        if n_train % 2 == 1 {
            n_train -= 1;
        }
        let need = n_train / 2;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for &i in &order {
            match corpus.samples[i].label.unwrap() {
                1 => pos.push(i),
                _ => neg.push(i),
            }
        }
        if pos.len() < need || neg.len() < need {
            return Err(Error::Sizing(format!(
                "balanced train needs {need} per class; corpus has {} positive / {} negative",
                pos.len(),
                neg.len()
            )));
        }
        let mut chosen: BTreeSet<usize> = pos[..need].iter().copied().collect();
        chosen.extend(neg[..need].iter().copied());
        train_idx = order.iter().copied().filter(|i| chosen.contains(i)).collect();
        rest = order.iter().copied().filter(|i| !chosen.contains(i)).collect();
    } else {
        train_idx = order[..n_train].to_vec();
        rest = order[n_train..].to_vec();
    }

    let take = |idx: &[usize], tag: SplitTag| Corpus {
        schema: corpus.schema.clone(),
        samples: idx.iter().map(|&i| corpus.samples[i].clone()).collect(),
        split_tag: tag,
    };
    let train = take(&train_idx, SplitTag::Train);
    let val = take(&rest[..n_val], SplitTag::Val);
    let test = take(&rest[n_val..], SplitTag::Test);
    Ok((train, val, test))
}

/// Inverse-frequency class weights `w_c = N / (2 * count_c)`; the
/// sample-weighted mean over the corpus is exactly 1.
pub fn class_weights(corpus: &Corpus) -> Result<[f64; 2]> {
    if !corpus.is_binarized() {
        return Err(Error::Config("class_weights requires binarized labels".into()));
    }
    let n = corpus.len() as f64;
    let pos = corpus
        .samples
        .iter()
        .filter(|s| s.label == Some(1))
        .count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Degeneracy(
            "class_weights needs both classes present".into(),
        ));
    }
    Ok([n / (2.0 * neg), n / (2.0 * pos)])
}

// ===========================================================================
// Synthetic planted-trigger corpus
// ===========================================================================

/// Generator settings for the planted-trigger oracle corpus: each concept
/// owns a trigger vocabulary, the ground-truth toxicity label is the OR of
/// concept presence, and label noise flips toxicity with `noise_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub concept_names: Vec<String>,
    pub triggers: Vec<Vec<String>>,
    pub filler: Vec<String>,
    pub n_samples: usize,
    pub noise_rate: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Independent probability that each concept plants a trigger.
    pub trigger_prob: f64,
}

impl SynthConfig {
    /// Built-in vocabulary with `m` concepts (up to 5) and disjoint triggers.
    pub fn default_planted(m: usize, n_samples: usize, noise_rate: f64) -> Result<Self> {
        const NAMES: [&str; 5] = ["obscene", "threat", "insult", "identity_attack", "slur"];
        const TRIGGERS: [[&str; 4]; 5] = [
            ["filthy", "grubby", "vulgar", "crude"],
            ["smash", "destroy", "hunt", "wreck"],
            ["idiot", "moron", "clown", "loser"],
            ["outsider", "vermin", "parasite", "invader"],
            ["scum", "trash", "degenerate", "lowlife"],
        ];
        if m == 0 || m > NAMES.len() {
            return Err(Error::Config(format!(
                "default planted config supports 1..=5 concepts, got {m}"
            )));
        }
        let filler = [
            "the", "a", "garden", "meeting", "report", "quiet", "river", "walk", "coffee",
            "morning", "team", "planned", "update", "notes", "weather", "bright", "lamp",
            "window", "train", "station", "paper", "signal", "bridge", "music", "gentle",
            "harbor", "yellow", "stone", "letter", "evening", "market", "cloud", "silver",
            "road", "simple", "butter", "reading", "slow", "open", "field",
        ];
        Ok(Self {
            concept_names: NAMES[..m].iter().map(|s| s.to_string()).collect(),
            triggers: TRIGGERS[..m]
                .iter()
                .map(|t| t.iter().map(|s| s.to_string()).collect())
                .collect(),
            filler: filler.iter().map(|s| s.to_string()).collect(),
            n_samples,
            noise_rate,
            // Short texts keep each trigger a large share of the normalized
            // feature vector, so the construction stays well-separated in the
            // low-dimensional embedding.
            min_tokens: 4,
            max_tokens: 8,
            trigger_prob: 0.2,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.concept_names.is_empty() {
            return Err(Error::Config("synth needs at least one concept".into()));
        }
        if self.triggers.len() != self.concept_names.len() {
            return Err(Error::Config(
                "triggers must align one list per concept".into(),
            ));
        }
        for (name, t) in self.concept_names.iter().zip(&self.triggers) {
            if t.is_empty() {
                return Err(Error::Config(format!(
                    "empty trigger vocabulary for concept {name}"
                )));
            }
        }
        if self.filler.is_empty() {
            return Err(Error::Config("filler vocabulary must not be empty".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "noise_rate must lie in [0, 1), got {}",
                self.noise_rate
            )));
        }
        if self.min_tokens == 0 || self.max_tokens < self.min_tokens {
            return Err(Error::Config("token length bounds invalid".into()));
        }
        if !(0.0..=1.0).contains(&self.trigger_prob) {
            return Err(Error::Config("trigger_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Generates the planted-trigger corpus. Deterministic for a given seed:
/// per sample the RNG draws length, filler tokens, one presence coin and
/// optional trigger choice+position per concept, then one noise coin.
///
/// `concept_labels` record exact trigger presence (no noise); the toxicity
/// label is OR(concept_labels) flipped with probability `noise_rate`, and
/// raw scores mirror the final labels so `binarize` reproduces them.
pub fn synthesize(config: &SynthConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let schema = ConceptSchema::new(config.concept_names.clone())?;
    let trigger_sets: Vec<BTreeSet<&str>> = config
        .triggers
        .iter()
        .map(|t| t.iter().map(String::as_str).collect())
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(config.n_samples);
    for i in 0..config.n_samples {
        let len = rng.gen_range(config.min_tokens..=config.max_tokens);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| config.filler[rng.gen_range(0..config.filler.len())].clone())
            .collect();
        for triggers in &config.triggers {
            if rng.gen::<f64>() < config.trigger_prob {
                let word = triggers[rng.gen_range(0..triggers.len())].clone();
                let pos = rng.gen_range(0..=tokens.len());
                tokens.insert(pos, word);
            }
        }
        // Presence is re-derived by scanning, so filler/trigger collisions
        // cannot desynchronize labels from text.
        let present: Vec<u8> = trigger_sets
            .iter()
            .map(|set| u8::from(tokens.iter().any(|t| set.contains(t.as_str()))))
            .collect();
        let clean_label = u8::from(present.contains(&1));
        let flip = rng.gen::<f64>() < config.noise_rate;
        let label = if flip { 1 - clean_label } else { clean_label };
        samples.push(Sample {
            id: format!("synth-{i:06}"),
            text: tokens.join(" "),
            raw_toxicity: f64::from(label),
            raw_concepts: present.iter().map(|&p| f64::from(p)).collect(),
            label: Some(label),
            concept_labels: Some(present),
            origin: None,
        });
    }
    Ok(Corpus {
        schema,
        samples,
        split_tag: SplitTag::Unsplit,
    })
}

// ===========================================================================
// Persistence
// ===========================================================================

#[derive(Debug, Serialize, Deserialize)]
struct CorpusHeader {
    format: String,
    schema: Vec<String>,
    split_tag: SplitTag,
}

const CORPUS_FORMAT: &str = "corpus/v1";

/// Writes the internal corpus format: a header line with schema and split
/// tag, then one sample object per line (raw scores and labels together).
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header = CorpusHeader {
        format: CORPUS_FORMAT.to_string(),
        schema: corpus.schema.names().to_vec(),
        split_tag: corpus.split_tag,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in &corpus.samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the internal corpus format written by [`write_jsonl`].
pub fn read_jsonl(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(file_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("{}: empty corpus file", path.display())))??;
    let header: CorpusHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::Schema(format!("{}: bad corpus header: {e}", path.display())))?;
    if header.format != CORPUS_FORMAT {
        return Err(Error::Schema(format!(
            "{}: unsupported corpus format {}",
            path.display(),
            header.format
        )));
    }
    let schema = ConceptSchema::new(header.schema)?;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line).map_err(|e| Error::Row {
            line: i + 2,
            id: String::new(),
            msg: format!("bad sample: {e}"),
        })?;
        if s.raw_concepts.len() != schema.len() {
            return Err(Error::Row {
                line: i + 2,
                id: s.id,
                msg: "concept vector length does not match schema".into(),
            });
        }
        samples.push(s);
    }
    check_unique_ids(&samples)?;
    Ok(Corpus {
        schema,
        samples,
        split_tag: header.split_tag,
    })
}

fn file_err(path: &Path) -> &Path {
    path
}

/// Writes raw-score JSONL in the external input shape
/// (`id`, `text`, `toxicity`, one key per concept), so the output can be fed
/// back through `load_corpus` + `binarize`.
pub fn write_external_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for s in &corpus.samples {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), serde_json::Value::String(s.id.clone()));
        obj.insert("text".into(), serde_json::Value::String(s.text.clone()));
        obj.insert("toxicity".into(), json_num(s.raw_toxicity)?);
        for (name, &score) in corpus.schema.names().iter().zip(&s.raw_concepts) {
            obj.insert(name.clone(), json_num(score)?);
        }
        serde_json::to_writer(&mut w, &serde_json::Value::Object(obj))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn json_num(v: f64) -> Result<serde_json::Value> {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .ok_or_else(|| Error::Numeric(format!("non-finite score {v} cannot be serialized")))
}

/// Case-folded token presence of `word` in `text` (exact unigram match).
pub fn contains_token(text: &str, word: &str) -> bool {
    let folded = word.to_lowercase();
    text::tokenize(text, true).contains(&folded)
}

// ===========================================================================
// Tests
// ===========================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_schema() -> ConceptSchema {
        ConceptSchema::new(vec!["obscene".into(), "threat".into()]).unwrap()
    }

    fn scored_corpus(scores: &[(f64, [f64; 2])]) -> Corpus {
        let samples = scores
            .iter()
            .enumerate()
            .map(|(i, (tox, con))| Sample {
                id: format!("s{i}"),
                text: format!("sample text number {i}"),
                raw_toxicity: *tox,
                raw_concepts: con.to_vec(),
                label: None,
                concept_labels: None,
                origin: None,
            })
            .collect();
        Corpus {
            schema: tiny_schema(),
            samples,
            split_tag: SplitTag::Unsplit,
        }
    }

    #[test]
    fn binarize_threshold_is_strict() {
        let corpus = scored_corpus(&[(0.5, [0.0, 0.01]), (0.7, [0.2, 0.0])]);
        let b = binarize(&corpus, 0.5, 0.0).unwrap();
        assert_eq!(b.samples[0].label, Some(0), "score exactly 0.5 is negative");
        assert_eq!(b.samples[1].label, Some(1));
        assert_eq!(b.samples[0].concept_labels, Some(vec![0, 1]));
        assert_eq!(b.samples[1].concept_labels, Some(vec![1, 0]));
    }

    #[test]
    fn binarize_is_idempotent() {
        let corpus = scored_corpus(&[(0.9, [0.3, 0.0]), (0.1, [0.0, 0.0])]);
        let once = binarize(&corpus, 0.5, 0.0).unwrap();
        let twice = binarize(&once, 0.5, 0.0).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn split_partitions_and_matches_expected_sizes() {
        let scores: Vec<(f64, [f64; 2])> = (0..50_000)
            .map(|i| (if i % 2 == 0 { 0.9 } else { 0.1 }, [0.0, 0.0]))
            .collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        let spec = SplitSpec {
            train_fraction: 0.72,
            val_fraction: 0.08,
            test_fraction: 0.20,
            balance_classes: false,
            seed: 7,
        };
        let (train, val, test) = split(&corpus, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (36_000, 4_000, 10_000));

        let mut all: Vec<&str> = train
            .samples
            .iter()
            .chain(&val.samples)
            .chain(&test.samples)
            .map(|s| s.id.as_str())
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 50_000, "three partitions must cover every id once");
        assert_eq!(train.split_tag, SplitTag::Train);
        assert_eq!(val.split_tag, SplitTag::Val);
        assert_eq!(test.split_tag, SplitTag::Test);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let scores: Vec<(f64, [f64; 2])> = (0..200).map(|i| ((i % 3) as f64 / 2.0, [0.0, 0.0])).collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        let spec = SplitSpec {
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            balance_classes: false,
            seed: 11,
        };
        let a = split(&corpus, &spec).unwrap();
        let b = split(&corpus, &spec).unwrap();
        assert_eq!(a, b);
        let other = split(
            &corpus,
            &SplitSpec {
                seed: 12,
                ..spec
            },
        )
        .unwrap();
        assert_ne!(a.0.samples, other.0.samples, "different seed, different draw");
    }

    #[test]
    fn balanced_split_equalizes_train_classes() {
        let scores: Vec<(f64, [f64; 2])> = (0..50_000)
            .map(|i| (if i % 2 == 0 { 0.9 } else { 0.1 }, [0.0, 0.0]))
            .collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        let spec = SplitSpec {
            train_fraction: 0.72,
            val_fraction: 0.08,
            test_fraction: 0.20,
            balance_classes: true,
            seed: 7,
        };
        let (train, val, test) = split(&corpus, &spec).unwrap();
        let pos = train.samples.iter().filter(|s| s.label == Some(1)).count();
        assert_eq!(train.len(), 36_000);
        assert_eq!(pos, 18_000);
        assert_eq!(train.len() + val.len() + test.len(), 50_000);
    }

    #[test]
    fn balanced_split_rejects_short_class() {
        let scores: Vec<(f64, [f64; 2])> = (0..100)
            .map(|i| (if i < 5 { 0.9 } else { 0.1 }, [0.0, 0.0]))
            .collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        let spec = SplitSpec {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            balance_classes: true,
            seed: 1,
        };
        match split(&corpus, &spec) {
            Err(Error::Sizing(_)) => {}
            other => panic!("expected sizing error, got {other:?}"),
        }
    }

    #[test]
    fn class_weights_inverse_frequency() {
        let scores: Vec<(f64, [f64; 2])> = (0..40_000)
            .map(|i| (if i < 10_000 { 0.9 } else { 0.1 }, [0.0, 0.0]))
            .collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        let [w0, w1] = class_weights(&corpus).unwrap();
        assert!((w0 - 40_000.0 / (2.0 * 30_000.0)).abs() < 1e-12);
        assert!((w1 - 2.0).abs() < 1e-12);
        // Sample-weighted mean is exactly one.
        let mean = (w0 * 30_000.0 + w1 * 10_000.0) / 40_000.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_weights_balanced_are_unit() {
        let scores: Vec<(f64, [f64; 2])> = (0..10)
            .map(|i| (if i % 2 == 0 { 0.9 } else { 0.1 }, [0.0, 0.0]))
            .collect();
        let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
        assert_eq!(class_weights(&corpus).unwrap(), [1.0, 1.0]);
    }

    #[test]
    fn class_weights_single_class_is_degenerate() {
        let corpus = binarize(&scored_corpus(&[(0.9, [0.0, 0.0]); 4]), 0.5, 0.0).unwrap();
        match class_weights(&corpus) {
            Err(Error::Degeneracy(_)) => {}
            other => panic!("expected degeneracy error, got {other:?}"),
        }
    }

    #[test]
    fn synthesize_or_rule_and_noise_recount() {
        let config = SynthConfig::default_planted(3, 2_000, 0.05).unwrap();
        let corpus = synthesize(&config, 99).unwrap();
        assert_eq!(corpus.len(), 2_000);

        // Independent recount: concept presence by scanning the text, OR rule
        // for the clean label, flips counted as disagreements.
        let mut flips = 0usize;
        for s in &corpus.samples {
            let toks = crate::text::token_set(&s.text);
            let present: Vec<u8> = config
                .triggers
                .iter()
                .map(|t| u8::from(t.iter().any(|w| toks.contains(w.as_str()))))
                .collect();
            assert_eq!(s.concept_labels.as_ref().unwrap(), &present);
            let clean = u8::from(present.contains(&1));
            if s.label.unwrap() != clean {
                flips += 1;
            }
            assert_eq!(s.raw_toxicity, f64::from(s.label.unwrap()));
        }
        let rate = flips as f64 / corpus.len() as f64;
        assert!(
            (rate - 0.05).abs() < 0.02,
            "observed flip rate {rate} too far from configured 0.05"
        );
    }

    #[test]
    fn synthesize_zero_noise_matches_or_exactly() {
        let config = SynthConfig::default_planted(2, 500, 0.0).unwrap();
        let corpus = synthesize(&config, 3).unwrap();
        for s in &corpus.samples {
            let or = u8::from(s.concept_labels.as_ref().unwrap().contains(&1));
            assert_eq!(s.label, Some(or));
        }
    }

    #[test]
    fn synthesize_is_deterministic() {
        let config = SynthConfig::default_planted(3, 300, 0.1).unwrap();
        assert_eq!(synthesize(&config, 42).unwrap(), synthesize(&config, 42).unwrap());
        assert_ne!(
            synthesize(&config, 42).unwrap().samples,
            synthesize(&config, 43).unwrap().samples
        );
    }

    #[test]
    fn synthesize_rejects_empty_triggers() {
        let mut config = SynthConfig::default_planted(2, 10, 0.0).unwrap();
        config.triggers[1].clear();
        match synthesize(&config, 0) {
            Err(Error::Config(msg)) => assert!(msg.contains("empty trigger vocabulary")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_round_trip_preserves_corpus() {
        let config = SynthConfig::default_planted(2, 50, 0.1).unwrap();
        let corpus = synthesize(&config, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_jsonl(&corpus, &path).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(corpus, back);
    }

    #[test]
    fn external_jsonl_reloads_through_load_and_binarize() {
        let config = SynthConfig::default_planted(2, 40, 0.1).unwrap();
        let corpus = synthesize(&config, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.jsonl");
        write_external_jsonl(&corpus, &path).unwrap();
        let loaded = load_corpus(&path, &corpus.schema, CorpusFormat::Jsonl).unwrap();
        let b = binarize(&loaded, 0.5, 0.0).unwrap();
        for (orig, round) in corpus.samples.iter().zip(&b.samples) {
            assert_eq!(orig.label, round.label);
            assert_eq!(orig.concept_labels, round.concept_labels);
            assert_eq!(orig.text, round.text);
        }
    }

    #[test]
    fn load_csv_reports_missing_concept_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "text,toxicity,obscene\nhello there,0.1,0.0\n").unwrap();
        match load_corpus(&path, &tiny_schema(), CorpusFormat::Csv) {
            Err(Error::Schema(msg)) => assert!(msg.contains("missing concept column: threat")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_reports_bad_score_with_line_and_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(
            &path,
            "id,text,toxicity,obscene,threat\na,ok text,0.1,0.0,0.0\nb,bad,oops,0.0,0.0\n",
        )
        .unwrap();
        match load_corpus(&path, &tiny_schema(), CorpusFormat::Csv) {
            Err(Error::Row { line, id, msg }) => {
                assert_eq!(line, 3);
                assert_eq!(id, "b");
                assert!(msg.contains("toxicity"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_happy_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(
            &path,
            "id,text,toxicity,obscene,threat\nx1,\"You, friend\",0.62,0.7,0.0\n",
        )
        .unwrap();
        let corpus = load_corpus(&path, &tiny_schema(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 1);
        let s = &corpus.samples[0];
        assert_eq!(s.id, "x1");
        assert_eq!(s.text, "You, friend");
        assert_eq!(s.raw_toxicity, 0.62);
        assert_eq!(s.raw_concepts, vec![0.7, 0.0]);
        assert_eq!(s.label, None, "labels stay unset until binarize");
    }

    #[test]
    fn load_jsonl_rejects_duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"id\":\"a\",\"text\":\"one two\",\"toxicity\":0.1,\"obscene\":0,\"threat\":0}\n",
                "{\"id\":\"a\",\"text\":\"three four\",\"toxicity\":0.2,\"obscene\":0,\"threat\":0}\n",
            ),
        )
        .unwrap();
        match load_corpus(&path, &tiny_schema(), CorpusFormat::Jsonl) {
            Err(Error::Schema(msg)) => assert!(msg.contains("duplicate sample id")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn binarize_idempotent_property(scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..40)) {
            let samples: Vec<(f64, [f64; 2])> = scores.iter().map(|&(t, a, b)| (t, [a, b])).collect();
            let corpus = scored_corpus(&samples);
            let once = binarize(&corpus, 0.5, 0.0).unwrap();
            let twice = binarize(&once, 0.5, 0.0).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn split_always_partitions(n in 30usize..200, seed in 0u64..1000) {
            let scores: Vec<(f64, [f64; 2])> = (0..n).map(|i| ((i % 2) as f64, [0.0, 0.0])).collect();
            let corpus = binarize(&scored_corpus(&scores), 0.5, 0.0).unwrap();
            let spec = SplitSpec {
                train_fraction: 0.6,
                val_fraction: 0.2,
                test_fraction: 0.2,
                balance_classes: false,
                seed,
            };
            let (train, val, test) = split(&corpus, &spec).unwrap();
            prop_assert_eq!(train.len() + val.len() + test.len(), n);
            let mut ids: Vec<&str> = train.samples.iter()
                .chain(&val.samples)
                .chain(&test.samples)
                .map(|s| s.id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
        }
    }
}
