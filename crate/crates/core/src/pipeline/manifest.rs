use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::overlap::ConditionType;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete,
    Failed,
}

/// One trained space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub condition: String,
    pub run: usize,
    pub shuffle_seed: u64,
    pub train_seed: u64,
    /// SHA-256 over the training config, shuffle seed, corpus and query words.
    pub config_hash: String,
    pub vectors: String,
    /// Subword-composed vectors for lexicon words outside the vocabulary.
    pub query_vectors: String,
    pub tokens: usize,
    pub vocab_size: usize,
    pub wall_time_secs: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One overlap CSV: a scheduled pair at one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub cond_a: String,
    pub run_a: usize,
    pub cond_b: String,
    pub run_b: usize,
    pub condition_type: ConditionType,
    pub k: usize,
    pub path: String,
    pub records: usize,
    pub skipped: usize,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub runs: Vec<RunEntry>,
    pub pairs: Vec<PairEntry>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Every file of the output tree, relative to it, sorted.
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(config: ExperimentConfig) -> Self {
        Manifest {
            software: format!("varspace {}", env!("CARGO_PKG_VERSION")),
            status: Status::Incomplete,
            failed_stage: None,
            error: None,
            config,
            runs: Vec::new(),
            pairs: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> io::Result<Option<Manifest>> {
        let path = dir.join(MANIFEST_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Writes through a temporary file so a crash never leaves half a manifest.
    pub fn save(&self, dir: &Path) -> io::Result<()> {
        let tmp = dir.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&tmp, text + "\n")?;
        fs::rename(tmp, dir.join(MANIFEST_FILE))
    }

    pub fn run(&self, condition: &str, run: usize) -> Option<&RunEntry> {
        self.runs
            .iter()
            .find(|r| r.condition == condition && r.run == run)
    }
}

/// Relative paths of all regular files below `dir`, sorted, with `/` separators.
pub fn list_files(dir: &Path) -> io::Result<Vec<String>> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if entry.file_type()?.is_dir() {
                walk(base, &path, out)?;
            } else {
                let rel = path.strip_prefix(base).expect("below base");
                let parts: Vec<String> = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect();
                out.push(parts.join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}
