//! Run configuration: one TOML file drives every subcommand, with any field
//! overridable from the command line via `--set dotted.key=value`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::{Method, ScoreMode};
use crate::corpus::{CorpusFormat, SplitSpec, SynthConfig};
use crate::error::{Error, Result};
use crate::llm::{ClientConfig, Mode, NO_NETWORK_ENV};
use crate::manifest::stage_seed;
use crate::nnet::featurizer::Featurizer;
use crate::nnet::model::ModelSpec;
use crate::nnet::train::TrainConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Every artifact and manifest lands under this directory.
    pub output_dir: PathBuf,
    /// External input corpus; when unset, `prepare` consumes the `synth`
    /// stage's output.
    pub corpus: Option<PathBuf>,
    /// Recorded LLM fixtures for offline mode.
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub concepts: Vec<String>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self {
            concepts: vec!["obscene".into(), "threat".into(), "insult".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub toxicity: f64,
    pub concept: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            toxicity: 0.5,
            concept: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// `internal` (labeled JSONL written by this tool), or raw `jsonl`/`csv`
    /// ingested through the schema and thresholds.
    pub format: String,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            format: "internal".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub balance_classes: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            val_fraction: 0.15,
            test_fraction: 0.15,
            balance_classes: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizerConfig {
    pub n_gram_orders: Vec<usize>,
    pub hash_dim: usize,
    pub lowercase: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            n_gram_orders: vec![1],
            hash_dim: 4096,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden_dim: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_multiplier: f64,
    pub patience: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 2e-5,
            lr_multiplier: 1e5,
            patience: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub target: TrainParams,
    pub concepts: TrainParams,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            target: TrainParams::default(),
            concepts: TrainParams {
                epochs: 6000,
                lr_multiplier: 5e5,
                patience: 10_000,
                ..TrainParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSection {
    /// Any of `cg_independent`, `cg_joint`, `cav`.
    pub methods: Vec<String>,
    /// Which prepared split to attribute: `train`, `val`, or `test`.
    pub split: String,
    pub row_eps: f64,
    pub svd_tolerance: f64,
}

impl Default for AttributionSection {
    fn default() -> Self {
        Self {
            methods: vec!["cg_independent".into(), "cg_joint".into(), "cav".into()],
            split: "test".into(),
            row_eps: crate::attribution::DEFAULT_ROW_EPS,
            svd_tolerance: crate::attribution::DEFAULT_SVD_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSection {
    /// `llm` or `fallback` (gradient-based).
    pub extractor: String,
    /// `llm` or `fallback` (co-occurrence clustering).
    pub grouper: String,
    pub target_sets: usize,
    /// Tokens kept per sample by the gradient fallback extractor.
    pub top_k_tokens: usize,
    /// `signed` or `absolute` alignment scores.
    pub wca_mode: String,
    pub histogram_bins: usize,
}

impl Default for LexiconSection {
    fn default() -> Self {
        Self {
            extractor: "fallback".into(),
            grouper: "fallback".into(),
            target_sets: 3,
            top_k_tokens: 8,
            wca_mode: "absolute".into(),
            histogram_bins: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    /// Which curated lexicon set the generated samples must avoid.
    pub set_id: usize,
    pub n_sentences: usize,
    /// `llm` or `fallback` (template grammar).
    pub generator: String,
    /// Also compare mean attribution before/after the retrain.
    pub reassess: bool,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            set_id: 1,
            n_sentences: 20,
            generator: "fallback".into(),
            reassess: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    /// `offline` replays fixtures; `live` calls the endpoint (refused when
    /// NO_NETWORK=1).
    pub mode: String,
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: usize,
    pub backoff_base_secs: f64,
}

impl Default for LlmSection {
    fn default() -> Self {
        let c = ClientConfig::default();
        Self {
            mode: "offline".into(),
            endpoint: c.endpoint,
            model: c.model,
            timeout_secs: c.timeout_secs,
            max_retries: c.max_retries,
            backoff_base_secs: c.backoff_base_secs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfoldSection {
    pub k: usize,
    /// Merge the `augment` stage's batch into every training fold.
    pub with_augmentation: bool,
}

impl Default for KfoldSection {
    fn default() -> Self {
        Self {
            k: 5,
            with_augmentation: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Number of planted concepts (1..=5, built-in vocabularies).
    pub m: usize,
    pub n_samples: usize,
    pub noise_rate: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub trigger_prob: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let base = SynthConfig::default_planted(3, 4_000, 0.05).expect("built-in config");
        Self {
            m: 3,
            n_samples: base.n_samples,
            noise_rate: base.noise_rate,
            min_tokens: base.min_tokens,
            max_tokens: base.max_tokens,
            trigger_prob: base.trigger_prob,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; each stage derives its own stream from it.
    pub seed: u64,
    pub paths: PathsConfig,
    pub schema: SchemaConfig,
    pub thresholds: Thresholds,
    pub input: InputConfig,
    pub split: SplitConfig,
    pub featurizer: FeaturizerConfig,
    pub model: ModelDims,
    pub train: TrainSection,
    pub attribution: AttributionSection,
    pub lexicon: LexiconSection,
    pub augment: AugmentSection,
    pub llm: LlmSection,
    pub kfold: KfoldSection,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: PathsConfig {
                output_dir: PathBuf::from("runs/out"),
                corpus: None,
                fixtures: None,
            },
            schema: SchemaConfig::default(),
            thresholds: Thresholds::default(),
            input: InputConfig::default(),
            split: SplitConfig::default(),
            featurizer: FeaturizerConfig::default(),
            model: ModelDims::default(),
            train: TrainSection::default(),
            attribution: AttributionSection::default(),
            lexicon: LexiconSection::default(),
            augment: AugmentSection::default(),
            llm: LlmSection::default(),
            kfold: KfoldSection::default(),
            synth: SynthSection::default(),
        }
    }
}

/// Parses the config file, applies `--set key=value` overrides onto the
/// TOML tree, and deserializes the result.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| Error::Config(format!("config is not valid TOML: {e}")))?;
    for raw in overrides {
        apply_override(&mut value, raw)?;
    }
    value
        .try_into()
        .map_err(|e| Error::Config(format!("config does not match the expected shape: {e}")))
}

/// Sets `a.b.c=value` in the TOML tree, creating intermediate tables. The
/// value parses as native TOML when possible (numbers, booleans, arrays)
/// and falls back to a string.
fn apply_override(root: &mut toml::Value, raw: &str) -> Result<()> {
    let (key, value) = raw.split_once('=').ok_or_else(|| {
        Error::Config(format!("override '{raw}' must look like key.path=value"))
    })?;
    let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").unwrap(),
        Err(_) => toml::Value::String(value.to_string()),
    };

    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("override key '{key}' has empty segments")));
    }
    let mut node = root;
    for segment in &segments[..segments.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override key '{key}' crosses a non-table value"))
        })?;
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| {
        Error::Config(format!("override key '{key}' crosses a non-table value"))
    })?;
    table.insert(segments[segments.len() - 1].to_string(), parsed);
    Ok(())
}

fn parse_mode(s: &str) -> Option<ScoreMode> {
    match s {
        "signed" => Some(ScoreMode::Signed),
        "absolute" => Some(ScoreMode::Absolute),
        _ => None,
    }
}

fn parse_method(s: &str) -> Option<Method> {
    match s {
        "cg_independent" => Some(Method::CgIndependent),
        "cg_joint" => Some(Method::CgJoint),
        "cav" => Some(Method::Cav),
        _ => None,
    }
}

impl RunConfig {
    /// Collects every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };

        check(
            !self.schema.concepts.is_empty(),
            "schema.concepts must name at least one concept".into(),
        );
        {
            let mut seen = std::collections::BTreeSet::new();
            for c in &self.schema.concepts {
                check(!c.trim().is_empty(), "schema.concepts contains an empty name".into());
                check(seen.insert(c.clone()), format!("schema.concepts repeats '{c}'"));
            }
        }

        for (name, v) in [
            ("thresholds.toxicity", self.thresholds.toxicity),
            ("thresholds.concept", self.thresholds.concept),
        ] {
            check(
                v.is_finite() && (0.0..=1.0).contains(&v),
                format!("{name} must lie in [0, 1], got {v}"),
            );
        }

        check(
            matches!(self.input.format.as_str(), "internal" | "jsonl" | "csv"),
            format!(
                "input.format must be internal, jsonl, or csv, got '{}'",
                self.input.format
            ),
        );

        let s = &self.split;
        for (name, f) in [
            ("split.train_fraction", s.train_fraction),
            ("split.val_fraction", s.val_fraction),
            ("split.test_fraction", s.test_fraction),
        ] {
            check(
                f.is_finite() && f > 0.0 && f < 1.0,
                format!("{name} must lie in (0, 1), got {f}"),
            );
        }
        let total = s.train_fraction + s.val_fraction + s.test_fraction;
        check(
            (total - 1.0).abs() < 1e-9,
            format!("split fractions must sum to 1, got {total}"),
        );

        check(
            !self.featurizer.n_gram_orders.is_empty()
                && self.featurizer.n_gram_orders.iter().all(|&o| o >= 1),
            "featurizer.n_gram_orders must list orders >= 1".into(),
        );
        check(
            self.featurizer.hash_dim >= 2,
            format!("featurizer.hash_dim must be >= 2, got {}", self.featurizer.hash_dim),
        );
        check(self.model.embed_dim >= 1, "model.embed_dim must be >= 1".into());
        check(self.model.hidden_dim >= 1, "model.hidden_dim must be >= 1".into());

        for (name, t) in [("train.target", &self.train.target), ("train.concepts", &self.train.concepts)] {
            check(t.epochs >= 1, format!("{name}.epochs must be >= 1"));
            check(t.batch_size >= 1, format!("{name}.batch_size must be >= 1"));
            check(
                t.learning_rate.is_finite() && t.learning_rate > 0.0,
                format!("{name}.learning_rate must be > 0"),
            );
            check(
                t.lr_multiplier.is_finite() && t.lr_multiplier > 0.0,
                format!("{name}.lr_multiplier must be > 0"),
            );
        }

        check(
            !self.attribution.methods.is_empty(),
            "attribution.methods must list at least one method".into(),
        );
        for m in &self.attribution.methods {
            check(
                parse_method(m).is_some(),
                format!("attribution.methods contains unknown method '{m}'"),
            );
        }
        check(
            matches!(self.attribution.split.as_str(), "train" | "val" | "test"),
            format!(
                "attribution.split must be train, val, or test, got '{}'",
                self.attribution.split
            ),
        );
        check(
            self.attribution.row_eps > 0.0,
            "attribution.row_eps must be > 0".into(),
        );
        check(
            self.attribution.svd_tolerance > 0.0,
            "attribution.svd_tolerance must be > 0".into(),
        );

        for (name, v) in [
            ("lexicon.extractor", &self.lexicon.extractor),
            ("lexicon.grouper", &self.lexicon.grouper),
            ("augment.generator", &self.augment.generator),
        ] {
            check(
                matches!(v.as_str(), "llm" | "fallback"),
                format!("{name} must be llm or fallback, got '{v}'"),
            );
        }
        check(self.lexicon.target_sets >= 1, "lexicon.target_sets must be >= 1".into());
        check(self.lexicon.top_k_tokens >= 1, "lexicon.top_k_tokens must be >= 1".into());
        check(
            parse_mode(&self.lexicon.wca_mode).is_some(),
            format!("lexicon.wca_mode must be signed or absolute, got '{}'", self.lexicon.wca_mode),
        );
        check(self.lexicon.histogram_bins >= 1, "lexicon.histogram_bins must be >= 1".into());

        check(self.augment.set_id >= 1, "augment.set_id must be >= 1".into());
        check(self.augment.n_sentences >= 1, "augment.n_sentences must be >= 1".into());

        check(
            matches!(self.llm.mode.as_str(), "offline" | "live"),
            format!("llm.mode must be offline or live, got '{}'", self.llm.mode),
        );
        check(!self.llm.endpoint.trim().is_empty(), "llm.endpoint must not be empty".into());
        check(!self.llm.model.trim().is_empty(), "llm.model must not be empty".into());
        if self.uses_llm() && self.effective_llm_mode() == Mode::Offline {
            match &self.paths.fixtures {
                None => check(
                    false,
                    "paths.fixtures is required when an llm stage runs offline".into(),
                ),
                Some(p) => check(
                    p.exists(),
                    format!("paths.fixtures '{}' does not exist", p.display()),
                ),
            }
        }
        if let Some(c) = &self.paths.corpus {
            check(c.exists(), format!("paths.corpus '{}' does not exist", c.display()));
        }

        check(self.kfold.k >= 2, format!("kfold.k must be >= 2, got {}", self.kfold.k));

        check(
            (1..=5).contains(&self.synth.m),
            format!("synth.m must lie in 1..=5, got {}", self.synth.m),
        );
        check(self.synth.n_samples >= 1, "synth.n_samples must be >= 1".into());
        check(
            self.synth.noise_rate.is_finite()
                && (0.0..1.0).contains(&self.synth.noise_rate),
            format!("synth.noise_rate must lie in [0, 1), got {}", self.synth.noise_rate),
        );
        check(self.synth.min_tokens >= 1, "synth.min_tokens must be >= 1".into());
        check(
            self.synth.max_tokens >= self.synth.min_tokens,
            "synth.max_tokens must be >= synth.min_tokens".into(),
        );
        check(
            self.synth.trigger_prob > 0.0 && self.synth.trigger_prob <= 1.0,
            format!("synth.trigger_prob must lie in (0, 1], got {}", self.synth.trigger_prob),
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid configuration ({} problem{}): {}",
                bad.len(),
                if bad.len() == 1 { "" } else { "s" },
                bad.join("; ")
            )))
        }
    }

    fn uses_llm(&self) -> bool {
        self.lexicon.extractor == "llm"
            || self.lexicon.grouper == "llm"
            || self.augment.generator == "llm"
    }

    /// NO_NETWORK=1 forces offline regardless of the configured mode.
    pub fn effective_llm_mode(&self) -> Mode {
        if std::env::var(NO_NETWORK_ENV).as_deref() == Ok("1") {
            return Mode::Offline;
        }
        match self.llm.mode.as_str() {
            "live" => Mode::Live,
            _ => Mode::Offline,
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            featurizer: Featurizer {
                n_gram_orders: self.featurizer.n_gram_orders.clone(),
                hash_dim: self.featurizer.hash_dim,
                lowercase: self.featurizer.lowercase,
            },
            embed_dim: self.model.embed_dim,
            hidden_dim: self.model.hidden_dim,
        }
    }

    /// Stage-seeded training config; `stage` names the subcommand so reruns
    /// of one stage reproduce without replaying the pipeline.
    pub fn train_config(&self, params: &TrainParams, stage: &str, freeze_encoder: bool) -> TrainConfig {
        TrainConfig {
            epochs: params.epochs,
            batch_size: params.batch_size,
            learning_rate: params.learning_rate,
            lr_multiplier: params.lr_multiplier,
            patience: params.patience,
            seed: stage_seed(self.seed, stage),
            freeze_encoder,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            val_fraction: self.split.val_fraction,
            test_fraction: self.split.test_fraction,
            balance_classes: self.split.balance_classes,
            seed: stage_seed(self.seed, "prepare"),
        }
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut c = SynthConfig::default_planted(self.synth.m, self.synth.n_samples, self.synth.noise_rate)?;
        c.min_tokens = self.synth.min_tokens;
        c.max_tokens = self.synth.max_tokens;
        c.trigger_prob = self.synth.trigger_prob;
        Ok(c)
    }

    pub fn client_config(&self) -> ClientConfig {
        ClientConfig {
            endpoint: self.llm.endpoint.clone(),
            model: self.llm.model.clone(),
            timeout_secs: self.llm.timeout_secs,
            max_retries: self.llm.max_retries,
            backoff_base_secs: self.llm.backoff_base_secs,
            max_concurrent: ClientConfig::default().max_concurrent,
            mode: self.effective_llm_mode(),
            seed: stage_seed(self.seed, "llm"),
        }
    }

    pub fn input_format(&self) -> Option<CorpusFormat> {
        match self.input.format.as_str() {
            "jsonl" => Some(CorpusFormat::Jsonl),
            "csv" => Some(CorpusFormat::Csv),
            _ => None,
        }
    }

    pub fn wca_mode(&self) -> ScoreMode {
        parse_mode(&self.lexicon.wca_mode).unwrap_or(ScoreMode::Absolute)
    }

    pub fn attribution_methods(&self) -> Vec<Method> {
        self.attribution
            .methods
            .iter()
            .filter_map(|m| parse_method(m))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let config = parse_config("", &[]).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.kfold.k, 5);
        assert_eq!(config.train.target.epochs, 30);
        config.validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_fields_with_native_types() {
        let config = parse_config(
            "seed = 7\n",
            &[
                "train.target.epochs=3".into(),
                "split.balance_classes=true".into(),
                "lexicon.wca_mode=signed".into(),
                "featurizer.n_gram_orders=[1, 2]".into(),
            ],
        )
        .unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.train.target.epochs, 3);
        assert!(config.split.balance_classes);
        assert_eq!(config.lexicon.wca_mode, "signed");
        assert_eq!(config.featurizer.n_gram_orders, vec![1, 2]);
    }

    #[test]
    fn override_without_equals_is_rejected() {
        match parse_config("", &["train.target.epochs".into()]) {
            Err(Error::Config(msg)) => assert!(msg.contains("key.path=value")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        match parse_config("[trian]\ntarget = 1\n", &[]) {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn validation_collects_every_violation() {
        let config = parse_config(
            "",
            &[
                "kfold.k=1".into(),
                "synth.m=9".into(),
                "train.target.learning_rate=0.0".into(),
                "thresholds.toxicity=2.0".into(),
            ],
        )
        .unwrap();
        match config.validate() {
            Err(Error::Config(msg)) => {
                assert!(msg.contains("4 problems"), "message: {msg}");
                assert!(msg.contains("kfold.k"));
                assert!(msg.contains("synth.m"));
                assert!(msg.contains("learning_rate"));
                assert!(msg.contains("thresholds.toxicity"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn llm_stage_offline_requires_fixtures() {
        let config = parse_config("", &["lexicon.extractor=llm".into()]).unwrap();
        match config.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("paths.fixtures")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn seeds_fan_out_per_stage() {
        let config = parse_config("", &[]).unwrap();
        let target = config.train_config(&config.train.target, "train-target", false);
        let concepts = config.train_config(&config.train.concepts, "train-concepts", true);
        assert_ne!(target.seed, concepts.seed);
        assert!(concepts.freeze_encoder);
        assert_eq!(
            target.seed,
            config.train_config(&config.train.target, "train-target", false).seed
        );
    }
}
