use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::{TrainConfig, TrainError};
use crate::corpus::Corpus;

/// Exponent of the unigram distribution used for negative sampling.
pub const NEGATIVE_POWER: f64 = 0.75;

/// Retained training words and the negative-sampling distribution.
#[derive(Debug, Clone)]
pub struct Vocab {
    words: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    negative_probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
    corpus_tokens: u64,
}

impl Vocab {
    /// Builds a vocabulary from `(word, count)` pairs, keeping counts at or
    /// above `min_count`. `corpus_tokens` is the size of the source corpus.
    pub fn from_counts<I>(counts: I, min_count: u64, corpus_tokens: u64) -> Result<Self, TrainError>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut words: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        if words.is_empty() {
            return Err(TrainError::EmptyVocab { min_count });
        }
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let weights: Vec<f64> = words
            .iter()
            .map(|(_, c)| (*c as f64).powf(NEGATIVE_POWER))
            .collect();
        let total: f64 = weights.iter().sum();
        let negative_probs = weights.iter().map(|w| w / total).collect();
        let sampler = WeightedIndex::new(&weights).expect("positive weights");
        Ok(Vocab {
            words,
            index,
            negative_probs,
            sampler,
            corpus_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id].0
    }

    pub fn count(&self, id: usize) -> u64 {
        self.words[id].1
    }

    /// Words with counts, by descending count then lexicographically.
    pub fn entries(&self) -> &[(String, u64)] {
        &self.words
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|(w, _)| w.as_str())
    }

    /// Per-word negative-sampling probability, proportional to count^0.75.
    pub fn negative_probs(&self) -> &[f64] {
        &self.negative_probs
    }

    pub fn sample_negative<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn corpus_tokens(&self) -> u64 {
        self.corpus_tokens
    }

    /// Probability of keeping an occurrence of `id` under frequent-word
    /// subsampling: `sqrt(t / f) + t / f`, with `f` the relative frequency.
    pub fn keep_probability(&self, id: usize, threshold: f64) -> f64 {
        if threshold <= 0.0 {
            return 1.0;
        }
        let f = self.words[id].1 as f64 / self.corpus_tokens as f64;
        let r = threshold / f;
        r.sqrt() + r
    }
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.corpus_tokens == other.corpus_tokens
    }
}

pub fn build_vocab(corpus: &Corpus, config: &TrainConfig) -> Result<Vocab, TrainError> {
    if corpus.token_count() == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in corpus.lines().iter().flatten() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    Vocab::from_counts(
        counts.into_iter().map(|(w, c)| (w.to_owned(), c)),
        config.min_count,
        corpus.token_count() as u64,
    )
}
