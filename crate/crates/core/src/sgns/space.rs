use std::path::Path;

use super::subword::{char_ngrams, hash_ngram};
use super::vectors::{VectorError, VectorTable};
use super::{TrainConfig, Vocab};

/// A trained subword skip-gram model.
///
/// Input rows are laid out as `|vocab|` word rows followed by
/// `bucket_count` n-gram rows; output rows are per vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub(crate) config: TrainConfig,
    pub(crate) vocab: Vocab,
    pub(crate) input: Vec<f32>,
    pub(crate) output: Vec<f32>,
}

/// Input-matrix rows whose mean is the vector of `word`: its own row when
/// it is in the vocabulary, then one bucket row per character n-gram.
pub fn composition_rows(word: &str, vocab: &Vocab, config: &TrainConfig) -> Vec<usize> {
    let mut rows = Vec::new();
    if let Some(id) = vocab.id(word) {
        rows.push(id);
    }
    rows.extend(
        char_ngrams(word, config.ngram_min, config.ngram_max)
            .iter()
            .map(|g| vocab.len() + hash_ngram(g, config.bucket_count)),
    );
    rows
}

impl EmbeddingSpace {
    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn input_row(&self, row: usize) -> &[f32] {
        let d = self.config.dim;
        &self.input[row * d..(row + 1) * d]
    }

    pub fn output_row(&self, id: usize) -> &[f32] {
        let d = self.config.dim;
        &self.output[id * d..(id + 1) * d]
    }

    pub fn input_matrix(&self) -> &[f32] {
        &self.input
    }

    pub fn output_matrix(&self) -> &[f32] {
        &self.output
    }

    /// Mean of the word's composition rows; works for out-of-vocabulary words.
    pub fn word_vector(&self, word: &str) -> Vec<f32> {
        let rows = composition_rows(word, &self.vocab, &self.config);
        let mut v = vec![0.0f32; self.config.dim];
        for r in &rows {
            for (acc, x) in v.iter_mut().zip(self.input_row(*r)) {
                *acc += x;
            }
        }
        let n = rows.len() as f32;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Word vectors for every vocabulary word, in vocabulary order.
    pub fn to_table(&self) -> VectorTable {
        let mut table = VectorTable::new(self.config.dim);
        for w in self.vocab.words() {
            table
                .push(w, &self.word_vector(w))
                .expect("vocabulary words are unique");
        }
        table
    }

    pub fn save_vectors(&self, path: impl AsRef<Path>) -> Result<(), VectorError> {
        self.to_table().save(path)
    }
}
