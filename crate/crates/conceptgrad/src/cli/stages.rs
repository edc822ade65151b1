//! Pipeline stages behind the subcommands. Each stage reads its inputs from
//! the output directory (or errors naming the subcommand that produces
//! them), writes fixed-name artifacts, and records a manifest.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::attribution::{
    attribute_corpus, condition_slices, mean_scores, train_cavs_for_corpus, write_records_jsonl,
    AggregateReport, AttributionOptions, Method, ScoreMode,
};
use crate::augment::{
    generate_lexicon_free, merge, read_batch_jsonl, retrain_and_compare, write_batch_jsonl,
    Reassessment, SentenceGenerator,
};
use crate::corpus::{
    binarize, load_corpus, read_jsonl, split, synthesize, write_jsonl, ConceptSchema, Corpus,
    SplitTag,
};
use crate::error::{Error, Result};
use crate::lexicon::{
    clean, default_stopwords, extract_words, group_words, mine_misclassified, wca,
    CorpusTokenIndex, Grouper, LexiconSet, WcaResult, WordExtractor,
};
use crate::llm::client::HttpTransport;
use crate::llm::{sha256_hex, LlmClient, Mode};
use crate::manifest::{stage_seed, Manifest};
use crate::nnet::metrics::{evaluate, EvalReport};
use crate::nnet::model::{Head, ModelParams};
use crate::nnet::train::{derive_concept_model, train_target};
use crate::report::{
    before_after_csv, comparative_table, concept_metrics_csv, frequency_csv, histogram,
    histogram_csv, kfold_csv, metrics_csv, wca_csv, word_frequencies, write_text,
    HistogramRange, HistogramSpec,
};

use super::config::RunConfig;

// Fixed artifact names; stages locate each other's outputs through these.
pub const CORPUS_RAW: &str = "corpus_raw.jsonl";
pub const TRAIN_SPLIT: &str = "train.jsonl";
pub const VAL_SPLIT: &str = "val.jsonl";
pub const TEST_SPLIT: &str = "test.jsonl";
pub const TARGET_MODEL: &str = "target_model.json";
pub const TARGET_LOG: &str = "target_log.json";
pub const CONCEPT_MODEL: &str = "concept_model.json";
pub const CONCEPT_LOG: &str = "concept_log.json";
pub const COMPARATIVE_TABLE: &str = "comparative_table.csv";
pub const AGGREGATES_JSON: &str = "aggregates.json";
pub const MISCLASSIFIED: &str = "misclassified.jsonl";
pub const LEXICONS: &str = "lexicons.json";
pub const WCA_CSV: &str = "wca.csv";
pub const BATCH: &str = "batch.jsonl";
pub const TRAIN_AUGMENTED: &str = "train_augmented.jsonl";
pub const BEFORE_AFTER_JSON: &str = "before_after.json";
pub const BEFORE_AFTER_CSV: &str = "before_after.csv";
pub const KFOLD_JSON: &str = "kfold.json";
pub const KFOLD_CSV: &str = "kfold.csv";

pub fn records_file(method: Method) -> String {
    format!("records_{}.jsonl", method.as_str())
}

pub fn metrics_json_file(head: Head) -> &'static str {
    match head {
        Head::Target => "metrics_target.json",
        Head::Concepts => "metrics_concepts.json",
    }
}

pub fn metrics_csv_file(head: Head) -> &'static str {
    match head {
        Head::Target => "metrics_target.csv",
        Head::Concepts => "metrics_concepts.csv",
    }
}

/// Shared stage context: validated config, output directory, config hash.
pub struct Ctx {
    pub config: RunConfig,
    out: PathBuf,
    config_sha: String,
}

impl Ctx {
    pub fn new(config: RunConfig) -> Result<Self> {
        let canonical = toml::to_string(&config)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        let config_sha = sha256_hex(canonical.as_bytes());
        let out = config.paths.output_dir.clone();
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            config,
            out,
            config_sha,
        })
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Path to an upstream artifact, or a dependency error naming the
    /// subcommand that produces it.
    fn require(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let path = self.artifact(name);
        if !path.exists() {
            return Err(Error::Dependency {
                artifact: name.to_string(),
                producer: producer.to_string(),
            });
        }
        Ok(path)
    }

    fn manifest(&self, stage: &str) -> Manifest {
        Manifest::new(stage, self.config.seed, &self.config_sha)
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<PathBuf> {
        let name = format!("manifest_{}.json", manifest.stage.replace('-', "_"));
        let path = self.artifact(&name);
        manifest.write(&path)?;
        Ok(path)
    }

    fn llm_client(&self) -> Result<LlmClient> {
        let client_config = self.config.client_config();
        match client_config.mode {
            Mode::Offline => {
                let path = self.config.paths.fixtures.as_ref().ok_or_else(|| {
                    Error::Config("paths.fixtures is required for offline llm mode".into())
                })?;
                LlmClient::offline_from_file(client_config, path)
            }
            Mode::Live => LlmClient::live(client_config, Box::new(HttpTransport)),
        }
    }

    fn read_split(&self, name: &str) -> Result<Corpus> {
        read_jsonl(&self.require(name, "prepare")?)
    }
}

// ===========================================================================
// Stages
// ===========================================================================

pub fn synth(ctx: &Ctx) -> Result<()> {
    let config = ctx.config.synth_config()?;
    let seed = stage_seed(ctx.config.seed, "synth");
    let corpus = synthesize(&config, seed)?;
    let path = ctx.artifact(CORPUS_RAW);
    write_jsonl(&corpus, &path)?;

    let mut m = ctx.manifest("synth");
    m.parameter("m", config.concept_names.len())
        .parameter("n_samples", config.n_samples)
        .parameter("noise_rate", config.noise_rate)
        .parameter("min_tokens", config.min_tokens)
        .parameter("max_tokens", config.max_tokens)
        .parameter("trigger_prob", config.trigger_prob);
    m.add_output(&path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!("synth: {} samples -> {}", corpus.len(), path.display());
    Ok(())
}

pub fn prepare(ctx: &Ctx) -> Result<()> {
    let mut manifest = ctx.manifest("prepare");
    let (source_path, corpus) = match &ctx.config.paths.corpus {
        Some(path) => {
            let corpus = match ctx.config.input_format() {
                Some(format) => {
                    let schema = ConceptSchema::new(ctx.config.schema.concepts.clone())?;
                    let raw = load_corpus(path, &schema, format)?;
                    binarize(
                        &raw,
                        ctx.config.thresholds.toxicity,
                        ctx.config.thresholds.concept,
                    )?
                }
                None => read_jsonl(path)?,
            };
            (path.clone(), corpus)
        }
        None => {
            let path = ctx.require(CORPUS_RAW, "synth")?;
            (path.clone(), read_jsonl(&path)?)
        }
    };

    let spec = ctx.config.split_spec();
    let (train, val, test) = split(&corpus, &spec)?;
    let paths = [
        (TRAIN_SPLIT, &train),
        (VAL_SPLIT, &val),
        (TEST_SPLIT, &test),
    ];
    for (name, part) in paths {
        write_jsonl(part, &ctx.artifact(name))?;
    }

    manifest
        .parameter("train_fraction", spec.train_fraction)
        .parameter("val_fraction", spec.val_fraction)
        .parameter("test_fraction", spec.test_fraction)
        .parameter("balance_classes", spec.balance_classes)
        .parameter("toxicity_threshold", ctx.config.thresholds.toxicity)
        .parameter("concept_threshold", ctx.config.thresholds.concept);
    manifest.add_input(&source_path, &ctx.out)?;
    for (name, _) in paths {
        manifest.add_output(&ctx.artifact(name), &ctx.out)?;
    }
    ctx.write_manifest(&manifest)?;
    println!(
        "prepare: {} -> train {} / val {} / test {}",
        source_path.display(),
        train.len(),
        val.len(),
        test.len()
    );
    Ok(())
}

pub fn train_target_stage(ctx: &Ctx) -> Result<()> {
    let train = ctx.read_split(TRAIN_SPLIT)?;
    let val = ctx.read_split(VAL_SPLIT)?;
    let spec = ctx.config.model_spec();
    let config = ctx
        .config
        .train_config(&ctx.config.train.target, "train-target", false);
    let (params, log) = train_target(&train, &val, &spec, &config)?;

    let model_path = ctx.artifact(TARGET_MODEL);
    params.save(&model_path)?;
    let log_path = ctx.artifact(TARGET_LOG);
    write_text(&log_path, &serde_json::to_string_pretty(&log)?)?;

    let mut m = ctx.manifest("train-target");
    m.parameter("epochs", config.epochs)
        .parameter("batch_size", config.batch_size)
        .parameter("effective_lr", config.effective_lr())
        .parameter("patience", config.patience)
        .parameter("best_epoch", log.best_epoch)
        .parameter("stopped_early", log.stopped_early);
    m.add_input(&ctx.artifact(TRAIN_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(VAL_SPLIT), &ctx.out)?;
    m.add_output(&model_path, &ctx.out)?;
    m.add_output(&log_path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!(
        "train-target: best epoch {} (val loss {:.6}) -> {}",
        log.best_epoch,
        log.val_loss[log.best_epoch],
        model_path.display()
    );
    Ok(())
}

pub fn train_concepts_stage(ctx: &Ctx) -> Result<()> {
    let target = ModelParams::load(&ctx.require(TARGET_MODEL, "train-target")?)?;
    let train = ctx.read_split(TRAIN_SPLIT)?;
    let val = ctx.read_split(VAL_SPLIT)?;
    let config = ctx
        .config
        .train_config(&ctx.config.train.concepts, "train-concepts", true);
    let (params, log) = derive_concept_model(&target, &train, &val, &config)?;

    let model_path = ctx.artifact(CONCEPT_MODEL);
    params.save(&model_path)?;
    let log_path = ctx.artifact(CONCEPT_LOG);
    write_text(&log_path, &serde_json::to_string_pretty(&log)?)?;

    let mut m = ctx.manifest("train-concepts");
    m.parameter("epochs", config.epochs)
        .parameter("effective_lr", config.effective_lr())
        .parameter("best_epoch", log.best_epoch);
    m.add_input(&ctx.artifact(TARGET_MODEL), &ctx.out)?;
    m.add_input(&ctx.artifact(TRAIN_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(VAL_SPLIT), &ctx.out)?;
    m.add_output(&model_path, &ctx.out)?;
    m.add_output(&log_path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!(
        "train-concepts: best epoch {} -> {}",
        log.best_epoch,
        model_path.display()
    );
    Ok(())
}

pub fn eval_stage(ctx: &Ctx, head: Head) -> Result<()> {
    let (model_name, producer) = match head {
        Head::Target => (TARGET_MODEL, "train-target"),
        Head::Concepts => (CONCEPT_MODEL, "train-concepts"),
    };
    let params = ModelParams::load(&ctx.require(model_name, producer)?)?;
    let test = ctx.read_split(TEST_SPLIT)?;
    let report = evaluate(&params, &test, head)?;

    let json_path = ctx.artifact(metrics_json_file(head));
    let csv_path = ctx.artifact(metrics_csv_file(head));
    let summary = match &report {
        EvalReport::Target(m) => {
            write_text(&json_path, &serde_json::to_string_pretty(m)?)?;
            write_text(&csv_path, &metrics_csv(m))?;
            format!("accuracy {:.4}, macro F1 {:.4}", m.accuracy, m.macro_f1)
        }
        EvalReport::Concepts(m) => {
            write_text(&json_path, &serde_json::to_string_pretty(m)?)?;
            write_text(&csv_path, &concept_metrics_csv(m))?;
            format!(
                "mean accuracy {:.4}, macro F1 {:.4}",
                m.mean_accuracy, m.macro_f1
            )
        }
    };

    let mut m = ctx.manifest("eval");
    m.parameter(
        "head",
        match head {
            Head::Target => "target",
            Head::Concepts => "concepts",
        },
    );
    m.add_input(&ctx.artifact(model_name), &ctx.out)?;
    m.add_input(&ctx.artifact(TEST_SPLIT), &ctx.out)?;
    m.add_output(&json_path, &ctx.out)?;
    m.add_output(&csv_path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!("eval: {summary} -> {}", json_path.display());
    Ok(())
}

fn attribution_split_file(ctx: &Ctx) -> &'static str {
    match ctx.config.attribution.split.as_str() {
        "train" => TRAIN_SPLIT,
        "val" => VAL_SPLIT,
        _ => TEST_SPLIT,
    }
}

pub fn attribute(ctx: &Ctx) -> Result<()> {
    let target = ModelParams::load(&ctx.require(TARGET_MODEL, "train-target")?)?;
    let concept = ModelParams::load(&ctx.require(CONCEPT_MODEL, "train-concepts")?)?;
    let corpus = ctx.read_split(attribution_split_file(ctx))?;
    let methods = ctx.config.attribution_methods();
    let options = AttributionOptions {
        row_eps: ctx.config.attribution.row_eps,
        svd_tolerance: ctx.config.attribution.svd_tolerance,
    };

    let cavs = if methods.contains(&Method::Cav) {
        let train = ctx.read_split(TRAIN_SPLIT)?;
        Some(train_cavs_for_corpus(
            &target,
            &train,
            stage_seed(ctx.config.seed, "attribute"),
        )?)
    } else {
        None
    };

    let mut manifest = ctx.manifest("attribute");
    manifest
        .parameter("split", &ctx.config.attribution.split)
        .parameter("methods", ctx.config.attribution.methods.join("+"))
        .parameter("row_eps", options.row_eps)
        .parameter("svd_tolerance", options.svd_tolerance);
    manifest.add_input(&ctx.artifact(TARGET_MODEL), &ctx.out)?;
    manifest.add_input(&ctx.artifact(CONCEPT_MODEL), &ctx.out)?;
    manifest.add_input(&ctx.artifact(attribution_split_file(ctx)), &ctx.out)?;

    let mut aggregates: Vec<AggregateReport> = Vec::new();
    let mut slices = None;
    for method in &methods {
        let records =
            attribute_corpus(&target, &concept, &corpus, *method, &options, cavs.as_deref())?;
        let records_path = ctx.artifact(&records_file(*method));
        write_records_jsonl(&records, &records_path)?;
        manifest.add_output(&records_path, &ctx.out)?;

        if slices.is_none() {
            let predictions = records
                .iter()
                .map(|r| (r.sample_id.clone(), r.predicted_label))
                .collect();
            slices = Some(condition_slices(&corpus, &predictions)?);
        }
        let slices = slices.as_ref().unwrap();
        for mode in [ScoreMode::Signed, ScoreMode::Absolute] {
            aggregates.push(mean_scores(
                &records,
                slices,
                mode,
                corpus.schema.names(),
            )?);
        }
    }

    let table_path = ctx.artifact(COMPARATIVE_TABLE);
    write_text(&table_path, &comparative_table(&aggregates)?)?;
    let agg_path = ctx.artifact(AGGREGATES_JSON);
    write_text(&agg_path, &serde_json::to_string_pretty(&aggregates)?)?;
    manifest.add_output(&table_path, &ctx.out)?;
    manifest.add_output(&agg_path, &ctx.out)?;
    ctx.write_manifest(&manifest)?;
    println!(
        "attribute: {} methods over {} samples -> {}",
        methods.len(),
        corpus.len(),
        table_path.display()
    );
    Ok(())
}

pub fn curate(ctx: &Ctx) -> Result<()> {
    let target = ModelParams::load(&ctx.require(TARGET_MODEL, "train-target")?)?;
    let concept = ModelParams::load(&ctx.require(CONCEPT_MODEL, "train-concepts")?)?;
    let train = ctx.read_split(TRAIN_SPLIT)?;
    let seed = stage_seed(ctx.config.seed, "curate");

    let misclassified = mine_misclassified(&target, &train)?;
    if misclassified.is_empty() {
        return Err(Error::EmptyInput(
            "the target model misclassifies nothing on the training split; \
             nothing to curate"
                .into(),
        ));
    }

    // The LLM client outlives both the extractor and the grouper.
    let needs_llm =
        ctx.config.lexicon.extractor == "llm" || ctx.config.lexicon.grouper == "llm";
    let client = if needs_llm { Some(ctx.llm_client()?) } else { None };

    let extractor = match ctx.config.lexicon.extractor.as_str() {
        "llm" => WordExtractor::Llm(client.as_ref().unwrap()),
        _ => WordExtractor::GradientFallback {
            model: &target,
            top_k: ctx.config.lexicon.top_k_tokens,
        },
    };
    let raw = extract_words(&misclassified, &extractor)?;
    let cleaned = clean(&raw, &default_stopwords())?;

    let grouper = match ctx.config.lexicon.grouper.as_str() {
        "llm" => Grouper::Llm(client.as_ref().unwrap()),
        _ => Grouper::ClusterFallback { seed },
    };
    let sets = group_words(&cleaned, &grouper, ctx.config.lexicon.target_sets, &train)?;

    // Attribution records over the training split drive the alignment
    // scores and histograms.
    let options = AttributionOptions {
        row_eps: ctx.config.attribution.row_eps,
        svd_tolerance: ctx.config.attribution.svd_tolerance,
    };
    let records = attribute_corpus(
        &target,
        &concept,
        &train,
        Method::CgIndependent,
        &options,
        None,
    )?;
    let mode = ctx.config.wca_mode();
    let index = CorpusTokenIndex::build(&train);
    let m = train.schema.len();

    let mut manifest = ctx.manifest("curate");
    manifest
        .parameter("extractor", &ctx.config.lexicon.extractor)
        .parameter("grouper", &ctx.config.lexicon.grouper)
        .parameter("target_sets", ctx.config.lexicon.target_sets)
        .parameter("top_k_tokens", ctx.config.lexicon.top_k_tokens)
        .parameter("wca_mode", mode.as_str())
        .parameter("histogram_bins", ctx.config.lexicon.histogram_bins)
        .parameter("histogram_range", "auto")
        .parameter("misclassified", misclassified.len());
    manifest.add_input(&ctx.artifact(TARGET_MODEL), &ctx.out)?;
    manifest.add_input(&ctx.artifact(CONCEPT_MODEL), &ctx.out)?;
    manifest.add_input(&ctx.artifact(TRAIN_SPLIT), &ctx.out)?;

    let mis_path = ctx.artifact(MISCLASSIFIED);
    {
        let mut body = String::new();
        for s in &misclassified {
            body.push_str(&serde_json::to_string(s)?);
            body.push('\n');
        }
        write_text(&mis_path, &body)?;
    }
    manifest.add_output(&mis_path, &ctx.out)?;

    let lex_path = ctx.artifact(LEXICONS);
    write_text(&lex_path, &serde_json::to_string_pretty(&sets)?)?;
    manifest.add_output(&lex_path, &ctx.out)?;

    let mut wca_results: Vec<WcaResult> = Vec::new();
    for set in &sets {
        let member_ids = index.ids_containing_words(&set.words);
        let result = wca(&records, set.set_id, &member_ids, mode, m)?;

        // Histogram of per-sentence scores for the set's dominant concept.
        let dominant = result
            .scores
            .iter()
            .enumerate()
            .filter_map(|(j, s)| s.map(|v| (j, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = dominant {
            let members: BTreeSet<&String> = member_ids.iter().collect();
            let raw_scores: Vec<f64> = records
                .iter()
                .filter(|r| members.contains(&r.sample_id))
                .map(|r| r.scores[j])
                .collect();
            let spec = HistogramSpec {
                bin_count: ctx.config.lexicon.histogram_bins,
                range: HistogramRange::Auto,
                mode,
            };
            let bins = histogram(&raw_scores, &spec)?;
            let hist_path = ctx.artifact(&format!("histogram_set{}.csv", set.set_id));
            write_text(&hist_path, &histogram_csv(&bins))?;
            manifest.add_output(&hist_path, &ctx.out)?;
        }

        let freq = word_frequencies(&train, set)?;
        let freq_path = ctx.artifact(&format!("frequencies_set{}.csv", set.set_id));
        write_text(&freq_path, &frequency_csv(&freq))?;
        manifest.add_output(&freq_path, &ctx.out)?;

        wca_results.push(result);
    }

    let wca_path = ctx.artifact(WCA_CSV);
    write_text(&wca_path, &wca_csv(&wca_results, train.schema.names())?)?;
    manifest.add_output(&wca_path, &ctx.out)?;
    ctx.write_manifest(&manifest)?;
    println!(
        "curate: {} misclassified -> {} lexicon sets -> {}",
        misclassified.len(),
        sets.len(),
        wca_path.display()
    );
    Ok(())
}

fn load_lexicon_set(ctx: &Ctx) -> Result<(PathBuf, LexiconSet)> {
    let path = ctx.require(LEXICONS, "curate")?;
    let sets: Vec<LexiconSet> = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let wanted = ctx.config.augment.set_id;
    let set = sets
        .iter()
        .find(|s| s.set_id == wanted)
        .cloned()
        .ok_or_else(|| {
            Error::Config(format!(
                "augment.set_id {wanted} not among curated sets ({})",
                sets.iter()
                    .map(|s| s.set_id.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
    Ok((path, set))
}

pub fn augment(ctx: &Ctx) -> Result<()> {
    let (lex_path, set) = load_lexicon_set(ctx)?;
    let train = ctx.read_split(TRAIN_SPLIT)?;
    let val = ctx.read_split(VAL_SPLIT)?;
    let test = ctx.read_split(TEST_SPLIT)?;
    let seed = stage_seed(ctx.config.seed, "augment");

    let client = if ctx.config.augment.generator == "llm" {
        Some(ctx.llm_client()?)
    } else {
        None
    };
    let generator = match &client {
        Some(c) => SentenceGenerator::Llm(c),
        None => SentenceGenerator::TemplateFallback,
    };
    let batch = generate_lexicon_free(&set, ctx.config.augment.n_sentences, &generator, seed)?;

    let batch_path = ctx.artifact(BATCH);
    write_batch_jsonl(&batch, &batch_path)?;
    let merged = merge(&train, &batch)?;
    let merged_path = ctx.artifact(TRAIN_AUGMENTED);
    write_jsonl(&merged, &merged_path)?;

    let spec = ctx.config.model_spec();
    let train_config = ctx
        .config
        .train_config(&ctx.config.train.target, "augment", false);
    let reassessment = if ctx.config.augment.reassess {
        Some(Reassessment {
            concept_config: ctx
                .config
                .train_config(&ctx.config.train.concepts, "augment", true),
            method: Method::CgIndependent,
            mode: ScoreMode::Signed,
            options: AttributionOptions {
                row_eps: ctx.config.attribution.row_eps,
                svd_tolerance: ctx.config.attribution.svd_tolerance,
            },
        })
    } else {
        None
    };
    let report = retrain_and_compare(
        &train,
        &val,
        &test,
        &batch,
        &spec,
        &train_config,
        reassessment.as_ref(),
    )?;

    let json_path = ctx.artifact(BEFORE_AFTER_JSON);
    write_text(&json_path, &serde_json::to_string_pretty(&report)?)?;
    let csv_path = ctx.artifact(BEFORE_AFTER_CSV);
    write_text(&csv_path, &before_after_csv(&report))?;

    let mut m = ctx.manifest("augment");
    m.parameter("set_id", set.set_id)
        .parameter("requested", batch.requested)
        .parameter("accepted", batch.accepted_count)
        .parameter("shortfall", batch.shortfall)
        .parameter("generator", &ctx.config.augment.generator)
        .parameter("reassess", ctx.config.augment.reassess)
        .parameter("delta_f1", report.delta_f1);
    m.add_input(&lex_path, &ctx.out)?;
    m.add_input(&ctx.artifact(TRAIN_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(VAL_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(TEST_SPLIT), &ctx.out)?;
    m.add_output(&batch_path, &ctx.out)?;
    m.add_output(&merged_path, &ctx.out)?;
    m.add_output(&json_path, &ctx.out)?;
    m.add_output(&csv_path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!(
        "augment: {}/{} accepted, delta toxic-F1 {:+.4} -> {}",
        batch.accepted_count,
        batch.requested,
        report.delta_f1,
        json_path.display()
    );
    Ok(())
}

pub fn kfold_stage(ctx: &Ctx) -> Result<()> {
    let train = ctx.read_split(TRAIN_SPLIT)?;
    let val = ctx.read_split(VAL_SPLIT)?;
    let test = ctx.read_split(TEST_SPLIT)?;
    let mut samples = train.samples;
    samples.extend(val.samples);
    samples.extend(test.samples);
    let corpus = Corpus {
        schema: train.schema,
        samples,
        split_tag: SplitTag::Unsplit,
    };

    let batch = if ctx.config.kfold.with_augmentation {
        Some(read_batch_jsonl(&ctx.require(BATCH, "augment")?)?)
    } else {
        None
    };

    let spec = ctx.config.model_spec();
    let config = ctx
        .config
        .train_config(&ctx.config.train.target, "kfold", false);
    let report = crate::report::kfold(&corpus, ctx.config.kfold.k, &spec, &config, batch.as_ref())?;

    let json_path = ctx.artifact(KFOLD_JSON);
    write_text(&json_path, &serde_json::to_string_pretty(&report)?)?;
    let csv_path = ctx.artifact(KFOLD_CSV);
    write_text(&csv_path, &kfold_csv(&report))?;

    let mut m = ctx.manifest("kfold");
    m.parameter("k", ctx.config.kfold.k)
        .parameter("with_augmentation", ctx.config.kfold.with_augmentation)
        .parameter("corpus_size", corpus.len());
    m.add_input(&ctx.artifact(TRAIN_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(VAL_SPLIT), &ctx.out)?;
    m.add_input(&ctx.artifact(TEST_SPLIT), &ctx.out)?;
    if ctx.config.kfold.with_augmentation {
        m.add_input(&ctx.artifact(BATCH), &ctx.out)?;
    }
    m.add_output(&json_path, &ctx.out)?;
    m.add_output(&csv_path, &ctx.out)?;
    ctx.write_manifest(&m)?;
    println!(
        "kfold: k={} mean accuracy {:.4} -> {}",
        report.k, report.summary_before.mean_accuracy, csv_path.display()
    );
    Ok(())
}
