//! Black-box checks of the command-line interface: help output, exit codes,
//! and a minimal two-stage run producing real artifacts.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_conceptgrad");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env("NO_NETWORK", "1")
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) {
    std::fs::write(dir.join("conceptgrad.toml"), body).unwrap();
}

const SMALL_CONFIG: &str = r#"
seed = 7

[paths]
output_dir = "out"

[synth]
n_samples = 200
m = 2
"#;

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["--help"]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    for sub in [
        "synth",
        "prepare",
        "train-target",
        "train-concepts",
        "eval",
        "attribute",
        "curate",
        "augment",
        "kfold",
    ] {
        assert!(text.contains(sub), "top-level help misses `{sub}`:\n{text}");
    }
    // Per-subcommand help must work without a config file present.
    let output = run_in(dir.path(), &["attribute", "--help"]);
    assert!(output.status.success());
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_flag = run_in(dir.path(), &["synth", "--bogus-flag"]);
    assert_eq!(unknown_flag.status.code(), Some(2));

    let unknown_subcommand = run_in(dir.path(), &["frobnicate"]);
    assert_eq!(unknown_subcommand.status.code(), Some(2));

    let bad_head = run_in(dir.path(), &["eval", "--head", "bogus"]);
    assert_eq!(bad_head.status.code(), Some(2));
}

#[test]
fn invalid_configuration_exits_with_code_2_and_explains() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"
seed = 7

[split]
train_fraction = 0.9
val_fraction = 0.9
test_fraction = 0.9
"#,
    );
    let output = run_in(dir.path(), &["synth"]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(
        err.contains("invalid configuration"),
        "stderr should name the problem:\n{err}"
    );
}

#[test]
fn missing_upstream_artifact_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL_CONFIG);
    // train-target needs prepared splits, which no stage has produced yet.
    let output = run_in(dir.path(), &["train-target"]);
    assert_eq!(output.status.code(), Some(3));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(
        err.contains("prepare"),
        "stderr should point at the missing stage:\n{err}"
    );
}

#[test]
fn synth_and_prepare_produce_split_files_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL_CONFIG);
    assert!(run_in(dir.path(), &["synth"]).status.success());
    assert!(run_in(dir.path(), &["prepare"]).status.success());

    let out = dir.path().join("out");
    for name in [
        "corpus_raw.jsonl",
        "train.jsonl",
        "val.jsonl",
        "test.jsonl",
        "manifest_synth.json",
        "manifest_prepare.json",
    ] {
        assert!(out.join(name).is_file(), "missing artifact {name}");
    }

    // Rerunning a stage on identical inputs rewrites identical bytes.
    let before = std::fs::read(out.join("train.jsonl")).unwrap();
    assert!(run_in(dir.path(), &["prepare"]).status.success());
    let after = std::fs::read(out.join("train.jsonl")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn config_overrides_change_behavior_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL_CONFIG);
    // One header record precedes the samples, so a corpus of n samples
    // serializes to n + 1 lines.
    let sample_lines = |dir: &Path| {
        std::fs::read_to_string(dir.join("out/corpus_raw.jsonl"))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert!(run_in(dir.path(), &["synth"]).status.success());
    assert_eq!(sample_lines(dir.path()), 200);

    let output = run_in(dir.path(), &["--set", "synth.n_samples=50", "synth"]);
    assert!(output.status.success());
    assert_eq!(sample_lines(dir.path()), 50, "--set override was not applied");
}
