//! Targeted lexicon curation: mine misclassified samples, extract suspect
//! words (LLM or gradient-based fallback), clean them against a pinned
//! stopword list, group them into lexicon sets (LLM or co-occurrence
//! clustering fallback), and score word-concept alignment (WCA).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::attribution::{AttributionRecord, ScoreMode};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::llm::{self, LlmClient};
use crate::nnet::model::{dot, ModelParams};
use crate::text;

/// Pinned English stopword list shipped with the crate.
pub const STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");

pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_TXT
        .lines()
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

// ===========================================================================
// Mining and word extraction
// ===========================================================================

/// Misclassified samples paired with the wrong prediction the model made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisclassifiedSample {
    pub id: String,
    pub text: String,
    pub true_label: u8,
    pub predicted_label: u8,
}

/// Runs the target model over a binarized corpus and keeps the samples whose
/// prediction disagrees with the label (both error directions).
pub fn mine_misclassified(
    model: &ModelParams,
    corpus: &Corpus,
) -> Result<Vec<MisclassifiedSample>> {
    if !corpus.is_binarized() {
        return Err(Error::Config("mining requires binarized labels".into()));
    }
    let mut out = Vec::new();
    for s in &corpus.samples {
        let x = model.represent_text(&s.text)?;
        let pred = model.predict_label(&x)?;
        let truth = s.label.unwrap();
        if pred != truth {
            out.push(MisclassifiedSample {
                id: s.id.clone(),
                text: s.text.clone(),
                true_label: truth,
                predicted_label: pred,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordStage {
    Raw,
    Cleaned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    pub stage: WordStage,
    pub words: Vec<String>,
}

/// Word extraction backend: ask an LLM per misclassified sample, or rank
/// tokens by |gradient x input| against the target model (deterministic,
/// network-free).
pub enum WordExtractor<'a> {
    Llm(&'a LlmClient),
    GradientFallback {
        model: &'a ModelParams,
        top_k: usize,
    },
}

/// Extracts suspect words from every misclassified sample. Per-sample
/// failures (unparsable LLM output) skip the sample with a warning on
/// stderr; the raw list keeps first-appearance order and may repeat words.
pub fn extract_words(
    misclassified: &[MisclassifiedSample],
    extractor: &WordExtractor,
) -> Result<WordList> {
    if misclassified.is_empty() {
        return Err(Error::EmptyInput("no misclassified samples to mine".into()));
    }
    let mut words = Vec::new();
    for m in misclassified {
        let extracted = match extractor {
            WordExtractor::Llm(client) => {
                let prompt = llm::render_extract_words(&m.text, m.predicted_label)?;
                match client.complete(&prompt).and_then(|r| llm::parse_word_list(&r)) {
                    Ok(list) => list,
                    Err(Error::FixtureMiss(h)) => return Err(Error::FixtureMiss(h)),
                    Err(e) => {
                        eprintln!("warning: skipping sample {}: {e}", m.id);
                        continue;
                    }
                }
            }
            WordExtractor::GradientFallback { model, top_k } => {
                match gradient_input_top_tokens(model, &m.text, *top_k) {
                    Ok(list) => list,
                    Err(e) => {
                        eprintln!("warning: skipping sample {}: {e}", m.id);
                        continue;
                    }
                }
            }
        };
        words.extend(extracted);
    }
    if words.is_empty() {
        return Err(Error::EmptyInput(
            "word extraction produced no words".into(),
        ));
    }
    Ok(WordList {
        stage: WordStage::Raw,
        words,
    })
}

/// Top-k distinct tokens of `text` ranked by the absolute gradient x input
/// contribution of their hashed n-gram features to the target logit.
/// Ties break toward earlier first appearance.
pub fn gradient_input_top_tokens(
    model: &ModelParams,
    text_in: &str,
    top_k: usize,
) -> Result<Vec<String>> {
    if top_k == 0 {
        return Err(Error::Config("top_k must be >= 1".into()));
    }
    let tokens = text::tokenize(text_in, model.featurizer.lowercase);
    if tokens.is_empty() {
        return Err(Error::EmptyInput("text tokenizes to zero tokens".into()));
    }
    let features = model.featurizer.features(text_in)?;
    let x = model.represent(&features);

    // d(logit)/dh = E . d(logit)/dx, evaluated only at active buckets.
    let z = model.hidden(&x)?;
    let weighted: Vec<f64> = z
        .iter()
        .zip(&model.target_w)
        .map(|(zi, wi)| wi * (1.0 - zi * zi))
        .collect();
    let dlogit_dx = model.enc_w.tr_matvec(&weighted);
    let grad_h: BTreeMap<usize, f64> = features
        .iter()
        .map(|&(idx, _)| (idx, dot(model.embed.row(idx), &dlogit_dx)))
        .collect();
    let h: BTreeMap<usize, f64> = features.iter().copied().collect();

    // Token contribution: sum of grad*input over the n-grams containing it.
    let mask = (model.featurizer.hash_dim - 1) as u64;
    let mut contributions: Vec<(String, f64)> = Vec::new();
    let mut seen = BTreeSet::new();
    for token in &tokens {
        if !seen.insert(token.clone()) {
            continue;
        }
        let mut contribution = 0.0;
        for &order in &model.featurizer.n_gram_orders {
            if order > tokens.len() {
                continue;
            }
            for window in tokens.windows(order) {
                if !window.iter().any(|t| t == token) {
                    continue;
                }
                let gram = window.join(" ");
                let idx = (text::fnv1a64(gram.as_bytes()) & mask) as usize;
                if let (Some(g), Some(v)) = (grad_h.get(&idx), h.get(&idx)) {
                    contribution += g * v;
                }
            }
        }
        contributions.push((token.clone(), contribution.abs()));
    }
    // Stable sort keeps first-appearance order among ties.
    contributions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok(contributions
        .into_iter()
        .take(top_k)
        .map(|(t, _)| t)
        .collect())
}

/// Lowercases, splits multi-word entries into unigrams, removes stopwords,
/// and deduplicates preserving first occurrence. Idempotent.
pub fn clean(raw: &WordList, stopwords: &BTreeSet<String>) -> Result<WordList> {
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    for entry in &raw.words {
        for token in text::tokenize(entry, true) {
            if stopwords.contains(&token) {
                continue;
            }
            if seen.insert(token.clone()) {
                words.push(token);
            }
        }
    }
    if words.is_empty() {
        return Err(Error::EmptyInput(
            "cleaning removed every extracted word".into(),
        ));
    }
    Ok(WordList {
        stage: WordStage::Cleaned,
        words,
    })
}

// ===========================================================================
// Grouping into lexicon sets
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Llm,
    Fallback,
}

/// A targeted lexicon set: a disjoint group of suspect words plus the count
/// of ranking-corpus sentences containing any of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSet {
    pub set_id: usize,
    pub words: BTreeSet<String>,
    pub provenance: Provenance,
    pub member_sentence_count: usize,
}

/// Grouping backend: one LLM call over the cleaned words, or seeded k-means
/// over corpus co-occurrence vectors.
pub enum Grouper<'a> {
    Llm(&'a LlmClient),
    ClusterFallback { seed: u64 },
}

/// Groups cleaned words into lexicon sets. Groups are ranked by
/// `member_sentence_count` in `ranking_corpus` (descending, earlier group on
/// ties) and the top `target_sets` are kept, re-numbered from 1.
/// Words the LLM repeats across groups stay with their first group; words
/// not in the cleaned list are dropped.
pub fn group_words(
    cleaned: &WordList,
    grouper: &Grouper,
    target_sets: usize,
    ranking_corpus: &Corpus,
) -> Result<Vec<LexiconSet>> {
    if cleaned.stage != WordStage::Cleaned {
        return Err(Error::Config("group_words needs a cleaned word list".into()));
    }
    if cleaned.words.is_empty() {
        return Err(Error::EmptyInput("no words to group".into()));
    }
    if target_sets == 0 {
        return Err(Error::Config("target_sets must be >= 1".into()));
    }

    let (raw_groups, provenance) = match grouper {
        Grouper::Llm(client) => {
            let prompt = llm::render_group_words(&cleaned.words)?;
            let response = client.complete(&prompt)?;
            (llm::parse_groups(&response)?, Provenance::Llm)
        }
        Grouper::ClusterFallback { seed } => (
            cluster_by_cooccurrence(&cleaned.words, ranking_corpus, target_sets, *seed),
            Provenance::Fallback,
        ),
    };

    // Enforce membership in the cleaned list and cross-group disjointness.
    let allowed: BTreeSet<&str> = cleaned.words.iter().map(String::as_str).collect();
    let mut claimed = BTreeSet::new();
    let mut groups: Vec<BTreeSet<String>> = Vec::new();
    for raw in raw_groups {
        let mut group = BTreeSet::new();
        for word in raw {
            let word = word.to_lowercase();
            if !allowed.contains(word.as_str()) {
                continue;
            }
            if claimed.contains(&word) {
                eprintln!("warning: word {word:?} already grouped; keeping first group");
                continue;
            }
            claimed.insert(word.clone());
            group.insert(word);
        }
        if !group.is_empty() {
            groups.push(group);
        }
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput("grouping produced no usable groups".into()));
    }

    // Rank by member sentence count in the ranking corpus.
    let index = CorpusTokenIndex::build(ranking_corpus);
    let mut ranked: Vec<(usize, BTreeSet<String>, usize)> = groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let count = index.ids_containing_words(&g).len();
            (i, g, count)
        })
        .collect();
    ranked.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    ranked.truncate(target_sets);

    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(rank, (_, words, count))| LexiconSet {
            set_id: rank + 1,
            words,
            provenance,
            member_sentence_count: count,
        })
        .collect())
}

/// Seeded k-means over row-normalized co-occurrence vectors (words x words,
/// counted once per sample, with the word's own occurrence count on the
/// diagonal so that mutually co-occurring pairs share a direction).
/// k-means++ init, hard assignments, empty clusters dropped.
fn cluster_by_cooccurrence(
    words: &[String],
    corpus: &Corpus,
    k: usize,
    seed: u64,
) -> Vec<Vec<String>> {
    use rand::Rng;
    use rand::SeedableRng;

    let n = words.len();
    let k = k.min(n).max(1);
    let pos: BTreeMap<&str, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();

    // Co-occurrence counts, one increment per sample; the diagonal holds
    // the word's own sample count.
    let mut cooc = vec![vec![0.0f64; n]; n];
    for s in &corpus.samples {
        let present: Vec<usize> = text::token_set(&s.text)
            .iter()
            .filter_map(|t| pos.get(t.as_str()).copied())
            .collect();
        for (a_i, &a) in present.iter().enumerate() {
            cooc[a][a] += 1.0;
            for &b in &present[a_i + 1..] {
                cooc[a][b] += 1.0;
                cooc[b][a] += 1.0;
            }
        }
    }
    let rows: Vec<Vec<f64>> = cooc
        .into_iter()
        .map(|row| {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                row
            } else {
                row.into_iter().map(|v| v / norm).collect()
            }
        })
        .collect();

    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    // k-means++ seeding.
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = vec![rows[rng.gen_range(0..n)].clone()];
    while centroids.len() < k {
        let d2: Vec<f64> = rows
            .iter()
            .map(|r| {
                centroids
                    .iter()
                    .map(|c| dist(r, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total == 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.push(rows[next].clone());
    }

    let mut assign = vec![0usize; n];
    for _ in 0..50 {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let best = (0..centroids.len())
                .min_by(|&a, &b| {
                    dist(row, &centroids[a])
                        .partial_cmp(&dist(row, &centroids[b]))
                        .unwrap()
                })
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(r, _)| r)
                .collect();
            if members.is_empty() {
                continue;
            }
            for j in 0..n {
                centroid[j] = members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }

    let mut groups = vec![Vec::new(); centroids.len()];
    for (i, &a) in assign.iter().enumerate() {
        groups[a].push(words[i].clone());
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

// ===========================================================================
// Sentence matching and WCA
// ===========================================================================

/// Inverted token index over a corpus for repeated lexicon matching.
pub struct CorpusTokenIndex {
    /// token -> sample positions (ascending corpus order)
    postings: BTreeMap<String, Vec<usize>>,
    ids: Vec<String>,
}

impl CorpusTokenIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut postings: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in corpus.samples.iter().enumerate() {
            for token in text::token_set(&s.text) {
                postings.entry(token).or_default().push(i);
            }
        }
        Self {
            postings,
            ids: corpus.samples.iter().map(|s| s.id.clone()).collect(),
        }
    }

    /// Sample ids containing at least one of the words (case-folded exact
    /// token match), in corpus order without duplicates.
    pub fn ids_containing_words(&self, words: &BTreeSet<String>) -> Vec<String> {
        let mut hits = BTreeSet::new();
        for word in words {
            let folded = word.to_lowercase();
            if let Some(positions) = self.postings.get(&folded) {
                hits.extend(positions.iter().copied());
            }
        }
        hits.into_iter().map(|i| self.ids[i].clone()).collect()
    }
}

/// Samples of `corpus` containing any word of `set`, in corpus order.
pub fn sentences_containing(corpus: &Corpus, set: &LexiconSet) -> Vec<String> {
    CorpusTokenIndex::build(corpus).ids_containing_words(&set.words)
}

/// Word-concept alignment for one lexicon set: per-concept mean attribution
/// over the member samples. Empty membership gives `None` scores (reported
/// NA), never zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcaResult {
    pub set_id: usize,
    pub mode: ScoreMode,
    pub sentence_count: usize,
    pub scores: Vec<Option<f64>>,
}

pub fn wca(
    records: &[AttributionRecord],
    set_id: usize,
    member_ids: &[String],
    mode: ScoreMode,
    n_concepts: usize,
) -> Result<WcaResult> {
    if member_ids.is_empty() {
        return Ok(WcaResult {
            set_id,
            mode,
            sentence_count: 0,
            scores: vec![None; n_concepts],
        });
    }
    let by_id: BTreeMap<&str, &AttributionRecord> =
        records.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let mut sums = vec![0.0; n_concepts];
    for id in member_ids {
        let record = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Pairing(format!("no attribution record for member {id}")))?;
        if record.scores.len() != n_concepts {
            return Err(Error::Shape(format!(
                "record {id} has {} scores, expected {n_concepts}",
                record.scores.len()
            )));
        }
        for (acc, &s) in sums.iter_mut().zip(&record.scores) {
            *acc += mode.apply(s);
        }
    }
    let n = member_ids.len() as f64;
    Ok(WcaResult {
        set_id,
        mode,
        sentence_count: member_ids.len(),
        scores: sums.into_iter().map(|s| Some(s / n)).collect(),
    })
}
