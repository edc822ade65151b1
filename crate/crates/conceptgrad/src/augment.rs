//! Lexicon-free augmentation: generate toxic sentences guaranteed to avoid a
//! lexicon set, merge them into training data, retrain, and compare metrics
//! before and after.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    attribute_corpus, condition_slices, mean_scores, AggregateReport, AttributionOptions, Method,
    ScoreMode,
};
use crate::corpus::{Corpus, Sample};
use crate::error::{Error, Result};
use crate::lexicon::LexiconSet;
use crate::llm::{self, LlmClient};
use crate::nnet::metrics::{evaluate, Confusion, EvalReport, Metrics};
use crate::nnet::model::{Head, ModelParams, ModelSpec};
use crate::nnet::train::{derive_concept_model, train_target, TrainConfig};
use crate::text;

/// One generated sentence with its validation outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<String>,
}

/// Candidates generated against one excluded lexicon set, with bookkeeping
/// for how many of the requested sentences were actually accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationBatch {
    pub set_id: usize,
    pub candidates: Vec<Candidate>,
    pub accepted_count: usize,
    pub requested: usize,
    pub shortfall: usize,
}

impl AugmentationBatch {
    pub fn empty(set_id: usize) -> Self {
        Self {
            set_id,
            candidates: Vec::new(),
            accepted_count: 0,
            requested: 0,
            shortfall: 0,
        }
    }

    pub fn accepted_texts(&self) -> impl Iterator<Item = &str> {
        self.candidates
            .iter()
            .filter(|c| c.accepted)
            .map(|c| c.text.as_str())
    }
}

/// Accept unless a case-folded unigram token of `text_in` appears in
/// `set.words`; a rejection names the offending token. An empty set accepts
/// everything.
pub fn validate_lexicon_free(text_in: &str, set: &LexiconSet) -> Option<String> {
    for token in text::tokenize(text_in, true) {
        if set.words.contains(&token) {
            return Some(format!("contains excluded word {token:?}"));
        }
    }
    None
}

/// Generation backend: LLM prompt asking for toxic sentences avoiding the
/// set, or a seeded template grammar whose vocabulary is filtered against
/// the set. Both paths run every candidate through `validate_lexicon_free`.
pub enum SentenceGenerator<'a> {
    Llm(&'a LlmClient),
    TemplateFallback,
}

/// LLM retry budget: distinct prompts per call (each re-ask requests only
/// the remaining count, so a no-progress round would repeat verbatim and is
/// cut short).
const LLM_ATTEMPT_BUDGET: usize = 4;
/// Fallback attempt budget per requested sentence.
const FALLBACK_BUDGET_PER_SENTENCE: usize = 20;

/// Template grammar for the network-free path. Every template has a noun
/// slot; slot vocabularies are filtered against the excluded set before
/// generation.
const TEMPLATES_WITH_ADJ: &[&str] = &[
    "you are a {adj} {noun}",
    "only a {adj} {noun} would say that",
    "what a {adj} {noun} you are",
    "go away you {adj} {noun}",
    "nobody listens to a {adj} {noun} like you",
];
const TEMPLATES_NOUN_ONLY: &[&str] = &[
    "everyone here thinks you are a {noun}",
    "stop talking, {noun}",
    "you argue like a {noun}",
];
const ADJECTIVES: &[&str] = &[
    "stupid",
    "pathetic",
    "worthless",
    "useless",
    "miserable",
    "dreadful",
    "insufferable",
    "laughable",
];
const NOUNS: &[&str] = &[
    "idiot",
    "fool",
    "moron",
    "clown",
    "loser",
    "coward",
    "buffoon",
    "dimwit",
];

/// Generates candidates until `n` are accepted or the budget runs out; a
/// partial batch records the shortfall rather than erroring.
pub fn generate_lexicon_free(
    set: &LexiconSet,
    n: usize,
    generator: &SentenceGenerator,
    seed: u64,
) -> Result<AugmentationBatch> {
    if n == 0 {
        return Err(Error::Config("must request at least one sentence".into()));
    }
    let mut candidates = Vec::new();
    let mut accepted = 0usize;
    match generator {
        SentenceGenerator::Llm(client) => {
            let words: Vec<String> = set.words.iter().cloned().collect();
            for _ in 0..LLM_ATTEMPT_BUDGET {
                if accepted >= n {
                    break;
                }
                let prompt = llm::render_generate_sentences(&words, n - accepted)?;
                let response = client.complete(&prompt)?;
                let sentences = llm::parse_sentences(&response)?;
                let before = accepted;
                for text_out in sentences {
                    if accepted >= n {
                        break;
                    }
                    let rejection = validate_lexicon_free(&text_out, set);
                    if rejection.is_none() {
                        accepted += 1;
                    }
                    candidates.push(Candidate {
                        text: text_out,
                        accepted: rejection.is_none(),
                        rejection_reason: rejection,
                    });
                }
                if accepted == before {
                    break;
                }
            }
        }
        SentenceGenerator::TemplateFallback => {
            let adjectives: Vec<&str> = ADJECTIVES
                .iter()
                .copied()
                .filter(|w| !set.words.contains(*w))
                .collect();
            let nouns: Vec<&str> = NOUNS
                .iter()
                .copied()
                .filter(|w| !set.words.contains(*w))
                .collect();
            let templates: Vec<&str> = if adjectives.is_empty() {
                TEMPLATES_NOUN_ONLY.to_vec()
            } else {
                TEMPLATES_WITH_ADJ
                    .iter()
                    .chain(TEMPLATES_NOUN_ONLY)
                    .copied()
                    .collect()
            };
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let budget = FALLBACK_BUDGET_PER_SENTENCE.saturating_mul(n);
            for _ in 0..budget {
                if accepted >= n || nouns.is_empty() {
                    break;
                }
                let template = templates[rng.gen_range(0..templates.len())];
                let mut sentence = template.replace("{noun}", nouns[rng.gen_range(0..nouns.len())]);
                if sentence.contains("{adj}") {
                    sentence =
                        sentence.replace("{adj}", adjectives[rng.gen_range(0..adjectives.len())]);
                }
                let rejection = validate_lexicon_free(&sentence, set);
                if rejection.is_none() {
                    accepted += 1;
                }
                candidates.push(Candidate {
                    text: sentence,
                    accepted: rejection.is_none(),
                    rejection_reason: rejection,
                });
            }
        }
    }
    Ok(AugmentationBatch {
        set_id: set.set_id,
        candidates,
        accepted_count: accepted,
        requested: n,
        shortfall: n - accepted,
    })
}

/// Appends the accepted candidates to the training corpus as toxic samples
/// (label 1, all concept labels 0) tagged with origin "aug". New ids are
/// `aug-<set>-<k>`; existing ids are never reused.
pub fn merge(train: &Corpus, batch: &AugmentationBatch) -> Result<Corpus> {
    if !train.is_binarized() {
        return Err(Error::Config("merge requires a binarized training corpus".into()));
    }
    let mut merged = train.clone();
    let mut used: BTreeSet<String> = train.samples.iter().map(|s| s.id.clone()).collect();
    let m = train.schema.len();
    let mut k = 0usize;
    for text_in in batch.accepted_texts() {
        let id = loop {
            k += 1;
            let candidate_id = format!("aug-{}-{}", batch.set_id, k);
            if used.insert(candidate_id.clone()) {
                break candidate_id;
            }
        };
        merged.samples.push(Sample {
            id,
            text: text_in.to_string(),
            raw_toxicity: 1.0,
            raw_concepts: vec![0.0; m],
            label: Some(1),
            concept_labels: Some(vec![0; m]),
            origin: Some("aug".to_string()),
        });
    }
    debug_assert_eq!(merged.len(), train.len() + batch.accepted_count);
    Ok(merged)
}

/// Optional over-attribution reassessment attached to the comparison:
/// concept heads are re-derived from each encoder on the original training
/// corpus, then per-condition mean attribution is computed on the test set.
#[derive(Debug, Clone)]
pub struct Reassessment {
    pub concept_config: TrainConfig,
    pub method: Method,
    pub mode: ScoreMode,
    pub options: AttributionOptions,
}

/// Paired evaluation of the target model trained without and with the
/// augmentation batch, on the identical test corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeforeAfterReport {
    pub metrics_before: Metrics,
    pub metrics_after: Metrics,
    pub confusion_before: Confusion,
    pub confusion_after: Confusion,
    /// Toxic-class F1 after minus before.
    pub delta_f1: f64,
    pub test_corpus_hash: String,
    pub accepted_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cg_before: Option<AggregateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cg_after: Option<AggregateReport>,
}

/// Trains on `train` and on `train` merged with the batch, with identical
/// config and seed, and evaluates both on the same test corpus. An empty
/// batch therefore yields bitwise-identical before/after halves.
pub fn retrain_and_compare(
    train: &Corpus,
    val: &Corpus,
    test: &Corpus,
    batch: &AugmentationBatch,
    spec: &ModelSpec,
    config: &TrainConfig,
    reassess: Option<&Reassessment>,
) -> Result<BeforeAfterReport> {
    for (name, c) in [("train", train), ("val", val), ("test", test)] {
        if !c.is_binarized() {
            return Err(Error::Config(format!("{name} corpus must be binarized")));
        }
        if c.schema != train.schema {
            return Err(Error::Schema("corpora have mismatched concept schemas".into()));
        }
    }
    let merged = merge(train, batch)?;

    let (model_before, _) = train_target(train, val, spec, config)?;
    let (model_after, _) = train_target(&merged, val, spec, config)?;

    let metrics_of = |model: &ModelParams| -> Result<Metrics> {
        match evaluate(model, test, Head::Target)? {
            EvalReport::Target(m) => Ok(m),
            EvalReport::Concepts(_) => unreachable!("target head requested"),
        }
    };
    let metrics_before = metrics_of(&model_before)?;
    let metrics_after = metrics_of(&model_after)?;

    let aggregate_of = |model: &ModelParams, r: &Reassessment| -> Result<AggregateReport> {
        let (concept_model, _) = derive_concept_model(model, train, val, &r.concept_config)?;
        let records = attribute_corpus(model, &concept_model, test, r.method, &r.options, None)?;
        let predictions = records
            .iter()
            .map(|rec| (rec.sample_id.clone(), rec.predicted_label))
            .collect();
        let slices = condition_slices(test, &predictions)?;
        mean_scores(&records, &slices, r.mode, test.schema.names())
    };
    let (mean_cg_before, mean_cg_after) = match reassess {
        Some(r) => (
            Some(aggregate_of(&model_before, r)?),
            Some(aggregate_of(&model_after, r)?),
        ),
        None => (None, None),
    };

    Ok(BeforeAfterReport {
        confusion_before: metrics_before.confusion,
        confusion_after: metrics_after.confusion,
        delta_f1: metrics_after.per_class[1].f1 - metrics_before.per_class[1].f1,
        test_corpus_hash: test.content_hash(),
        accepted_count: batch.accepted_count,
        metrics_before,
        metrics_after,
        mean_cg_before,
        mean_cg_after,
    })
}

// ===========================================================================
// Batch persistence
// ===========================================================================

#[derive(Serialize, Deserialize)]
struct BatchHeader {
    format: String,
    set_id: usize,
    requested: usize,
    accepted_count: usize,
    shortfall: usize,
}

const BATCH_FORMAT: &str = "augbatch/v1";

/// One header line followed by one candidate per line.
pub fn write_batch_jsonl(batch: &AugmentationBatch, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = BatchHeader {
        format: BATCH_FORMAT.to_string(),
        set_id: batch.set_id,
        requested: batch.requested,
        accepted_count: batch.accepted_count,
        shortfall: batch.shortfall,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for c in &batch.candidates {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch_jsonl(path: &Path) -> Result<AugmentationBatch> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Schema("batch file is empty".into()))??;
    let header: BatchHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::Schema(format!("bad batch header: {e}")))?;
    if header.format != BATCH_FORMAT {
        return Err(Error::Schema(format!(
            "unsupported batch format {:?}",
            header.format
        )));
    }
    let mut candidates = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Candidate = serde_json::from_str(&line).map_err(|e| Error::Row {
            line: i + 2,
            id: String::new(),
            msg: e.to_string(),
        })?;
        candidates.push(c);
    }
    let accepted = candidates.iter().filter(|c| c.accepted).count();
    if accepted != header.accepted_count {
        return Err(Error::Schema(format!(
            "batch header claims {} accepted, file has {accepted}",
            header.accepted_count
        )));
    }
    Ok(AugmentationBatch {
        set_id: header.set_id,
        candidates,
        accepted_count: accepted,
        requested: header.requested,
        shortfall: header.shortfall,
    })
}
