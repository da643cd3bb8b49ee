use serde::{Deserialize, Serialize};

use super::TrainError;

/// Hyperparameters for subword skip-gram training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub bucket_count: usize,
    pub window: usize,
    pub min_count: u64,
    pub seed: u64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample_threshold: f64,
    /// Single-threaded, bit-reproducible training.
    pub deterministic: bool,
    /// Worker count for lock-free training when `deterministic` is false.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            negatives: 50,
            epochs: 20,
            learning_rate: 0.05,
            ngram_min: 3,
            ngram_max: 6,
            bucket_count: 2_000_000,
            window: 5,
            min_count: 5,
            seed: 0,
            subsample_threshold: 1e-4,
            deterministic: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return bad("need 1 <= ngram_min <= ngram_max");
        }
        if self.bucket_count == 0 || self.bucket_count > u32::MAX as usize {
            return bad("bucket_count must be in 1..=2^32-1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        if !(self.subsample_threshold >= 0.0 && self.subsample_threshold.is_finite()) {
            return bad("subsample_threshold must be non-negative");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}
