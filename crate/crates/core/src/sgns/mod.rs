//! Subword skip-gram with negative sampling.

mod config;
pub mod objective;
mod space;
pub mod subword;
mod train;
pub mod vectors;
mod vocab;

pub use config::TrainConfig;
pub use space::{composition_rows, EmbeddingSpace};
pub use subword::{char_ngrams, hash_ngram};
pub use train::{train, train_with_report, TrainReport};
pub use vectors::{load_vectors, VectorError, VectorTable};
pub use vocab::{build_vocab, Vocab, NEGATIVE_POWER};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("no word occurs at least {min_count} times")]
    EmptyVocab { min_count: u64 },
    #[error(
        "training diverged (non-finite value) in epoch {epoch}, line {line}, position {position}"
    )]
    Divergence {
        epoch: usize,
        line: usize,
        position: usize,
    },
}
