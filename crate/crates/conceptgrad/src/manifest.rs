//! Per-stage artifact manifests.
//!
//! Every pipeline stage writes one manifest listing the files it read and
//! wrote (with content hashes), the seeds in effect, and a hash of the run
//! configuration. Manifests chain through those input hashes, so any
//! artifact traces back to corpus + seed + config. They carry no
//! timestamps: identical runs serialize byte-identically.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::{fnv1a64, splitmix64};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory (or as given when outside it).
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub global_seed: u64,
    pub stage_seed: u64,
    pub config_sha256: String,
    /// Free-form stage parameters worth recording (bin counts, k, modes…).
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

/// Derives a stage-specific seed from the global one: stages draw from
/// independent streams, and each stage is reproducible on its own.
pub fn stage_seed(global_seed: u64, stage: &str) -> u64 {
    splitmix64(global_seed ^ fnv1a64(stage.as_bytes()))
}

/// Streaming SHA-256 of a file's contents, lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

fn relative_to(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned()
}

impl Manifest {
    pub fn new(stage: &str, global_seed: u64, config_sha256: &str) -> Self {
        Self {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            global_seed,
            stage_seed: stage_seed(global_seed, stage),
            config_sha256: config_sha256.to_string(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Hashes an existing file and records it as a stage input; the stored
    /// path is relative to `base` when the file sits under it.
    pub fn add_input(&mut self, path: &Path, base: &Path) -> Result<&mut Self> {
        let entry = FileEntry {
            path: relative_to(path, base),
            sha256: sha256_file(path)?,
        };
        self.inputs.push(entry);
        Ok(self)
    }

    pub fn add_output(&mut self, path: &Path, base: &Path) -> Result<&mut Self> {
        let entry = FileEntry {
            path: relative_to(path, base),
            sha256: sha256_file(path)?,
        };
        self.outputs.push(entry);
        Ok(self)
    }

    /// Serializes as pretty JSON; map ordering is fixed, so equal manifests
    /// write identical bytes.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        std::fs::write(path, body)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Dependency {
                    artifact: path.to_string_lossy().into_owned(),
                    producer: "an earlier stage".into(),
                }
            } else {
                Error::Io(e)
            }
        })?;
        Ok(serde_json::from_str(&body)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_seed_is_deterministic_and_stage_specific() {
        let a = stage_seed(42, "prepare");
        assert_eq!(a, stage_seed(42, "prepare"));
        assert_ne!(a, stage_seed(42, "train-target"));
        assert_ne!(a, stage_seed(43, "prepare"));
    }

    #[test]
    fn sha256_matches_known_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty");
        std::fs::write(&empty, b"").unwrap();
        assert_eq!(
            sha256_file(&empty).unwrap(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        let abc = dir.path().join("abc");
        std::fs::write(&abc, b"abc").unwrap();
        assert_eq!(
            sha256_file(&abc).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trip_with_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("out/metrics.csv");
        std::fs::create_dir_all(artifact.parent().unwrap()).unwrap();
        std::fs::write(&artifact, "metric,value\n").unwrap();

        let mut m = Manifest::new("eval", 7, "cfghash");
        m.parameter("head", "target");
        m.add_output(&artifact, dir.path()).unwrap();
        assert_eq!(m.outputs[0].path, "out/metrics.csv");
        assert_eq!(m.stage_seed, stage_seed(7, "eval"));

        let path = dir.path().join("out/manifest_eval.json");
        m.write(&path).unwrap();
        let back = Manifest::read(&path).unwrap();
        assert_eq!(m, back);
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(!body.contains("time"), "manifests must not embed timestamps");
    }

    #[test]
    fn identical_manifests_write_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let mut m = Manifest::new("synth", 1, "x");
        m.parameter("n_samples", 100).parameter("noise", 0.05);
        m.write(&a).unwrap();
        m.write(&b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn missing_manifest_reports_dependency() {
        match Manifest::read(Path::new("/nonexistent/manifest.json")) {
            Err(Error::Dependency { .. }) => {}
            other => panic!("expected dependency error, got {other:?}"),
        }
    }
}
