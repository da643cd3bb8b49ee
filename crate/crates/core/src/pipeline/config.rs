use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lexicon::ColumnSpec;
use crate::overlap::DEFAULT_K_VALUES;
use crate::sgns::TrainConfig;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub label: String,
    pub corpus: PathBuf,
}

/// Bindings for the four annotation sources. Age of acquisition is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSpec {
    pub concreteness: ColumnSpec,
    #[serde(default)]
    pub aoa: Option<ColumnSpec>,
    pub pos: ColumnSpec,
    pub domain: ColumnSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub histogram_bins: usize,
    /// Threshold for flagging regression factors in the report.
    pub significance: f64,
    pub credible_level: f64,
    /// k used for the regression and the report; defaults to the largest k.
    pub primary_k: Option<usize>,
    /// Per-million boundaries for frequency strata; continuous when absent.
    pub frequency_strata: Option<Vec<f64>>,
    pub min_coverage: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            histogram_bins: 50,
            significance: 0.01,
            credible_level: 0.95,
            primary_k: None,
            frequency_strata: None,
            min_coverage: 0.9,
        }
    }
}

fn default_runs() -> usize {
    5
}

fn default_k() -> Vec<usize> {
    DEFAULT_K_VALUES.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

fn default_jobs() -> usize {
    1
}

/// A complete experiment: corpora, training, lexicon and analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub conditions: Vec<ConditionSpec>,
    #[serde(default = "default_runs")]
    pub runs_per_condition: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_k")]
    pub k_values: Vec<usize>,
    pub lexicon: LexiconSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    /// Training runs executed concurrently.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a TOML config; relative paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for c in &mut self.conditions {
            resolve(base, &mut c.corpus);
        }
        let lex = &mut self.lexicon;
        for spec in [&mut lex.concreteness, &mut lex.pos, &mut lex.domain]
            .into_iter()
            .chain(lex.aoa.as_mut())
        {
            resolve(base, &mut spec.path);
        }
        resolve(base, &mut self.output);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn labels(&self) -> Vec<String> {
        self.conditions.iter().map(|c| c.label.clone()).collect()
    }

    pub fn primary_k(&self) -> usize {
        self.analysis
            .primary_k
            .or_else(|| self.k_values.iter().copied().max())
            .unwrap_or(50)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.conditions.len() < 2 {
            return bad(format!(
                "need at least 2 conditions, got {}",
                self.conditions.len()
            ));
        }
        let mut seen = HashSet::new();
        for c in &self.conditions {
            let ok = !c.label.is_empty()
                && c.label
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.');
            if !ok {
                return bad(format!(
                    "condition label {:?} must be non-empty ASCII letters, digits, '_' or '.'",
                    c.label
                ));
            }
            if !seen.insert(&c.label) {
                return bad(format!("duplicate condition label {:?}", c.label));
            }
        }
        if self.runs_per_condition < 2 {
            return bad(format!(
                "runs_per_condition must be at least 2, got {}",
                self.runs_per_condition
            ));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k_values must be a non-empty list of positive integers".into());
        }
        if !self.k_values.contains(&self.primary_k()) {
            return bad(format!("primary_k {} is not in k_values", self.primary_k()));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        let a = &self.analysis;
        if a.histogram_bins == 0 {
            return bad("histogram_bins must be at least 1".into());
        }
        if !(a.credible_level > 0.0 && a.credible_level < 1.0) {
            return bad(format!(
                "credible_level {} is not in (0, 1)",
                a.credible_level
            ));
        }
        if !(a.significance > 0.0 && a.significance < 1.0) {
            return bad(format!("significance {} is not in (0, 1)", a.significance));
        }
        if !(0.0..=1.0).contains(&a.min_coverage) {
            return bad(format!("min_coverage {} is not in [0, 1]", a.min_coverage));
        }
        if let Some(s) = &a.frequency_strata {
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return bad("frequency_strata must be strictly increasing".into());
            }
        }
        self.train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}
