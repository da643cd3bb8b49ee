//! Exact cosine k-nearest-neighbor search over a candidate pool.

use std::cmp::Ordering;

use crate::sgns::VectorTable;

use super::OverlapError;

/// Word vectors used for analysis: the vocabulary table (which provides
/// neighbor candidates) plus optional extra vectors for query words outside
/// the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    vocab: VectorTable,
    extra: Option<VectorTable>,
}

impl Embeddings {
    pub fn new(vocab: VectorTable) -> Self {
        Embeddings { vocab, extra: None }
    }

    pub fn with_extra(vocab: VectorTable, extra: VectorTable) -> Self {
        Embeddings {
            vocab,
            extra: Some(extra),
        }
    }

    pub fn vocab(&self) -> &VectorTable {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.vocab.dim()
    }

    /// Vector for a query word, vocabulary first.
    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vocab
            .get(word)
            .or_else(|| self.extra.as_ref().and_then(|t| t.get(word)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub cosine: f64,
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum()
}

pub(crate) fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Candidate words of one space with their vectors and norms.
#[derive(Debug, Clone)]
pub struct CandidatePool<'a> {
    words: Vec<&'a str>,
    vectors: Vec<&'a [f32]>,
    norms: Vec<f64>,
}

impl<'a> CandidatePool<'a> {
    /// All vocabulary words of `space`.
    pub fn full(space: &'a Embeddings) -> Self {
        Self::from_words(space, space.vocab.words().iter().map(String::as_str))
    }

    /// `words` looked up in the vocabulary of `space`; missing words are skipped.
    pub fn from_words<I: IntoIterator<Item = &'a str>>(space: &'a Embeddings, words: I) -> Self {
        let mut pool = CandidatePool {
            words: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        for w in words {
            if let Some(v) = space.vocab.get(w) {
                pool.words.push(w);
                pool.vectors.push(v);
                pool.norms.push(norm(v));
            }
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn contains(&self, word: &str) -> bool {
        self.words.contains(&word)
    }

    /// Top `k` candidates by cosine to `vector`, excluding `exclude`.
    /// Ties are broken by ascending word.
    pub fn top_k(
        &self,
        vector: &[f32],
        exclude: &str,
        k: usize,
    ) -> Result<Vec<Neighbor>, OverlapError> {
        let qn = norm(vector);
        if qn == 0.0 || !qn.is_finite() {
            return Err(OverlapError::DegenerateVector(exclude.to_string()));
        }
        let available = self.len() - usize::from(self.contains(exclude));
        if k == 0 || k > available {
            return Err(OverlapError::PoolTooSmall {
                word: exclude.to_string(),
                k,
                pool: available,
            });
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&i| self.words[i] != exclude)
            .map(|i| {
                let cos = if self.norms[i] == 0.0 {
                    0.0
                } else {
                    dot(vector, self.vectors[i]) / (qn * self.norms[i])
                };
                (cos, i)
            })
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0)
                .then_with(|| self.words[a.1].cmp(self.words[b.1]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(cosine, i)| Neighbor {
                word: self.words[i].to_string(),
                cosine,
            })
            .collect())
    }
}

/// The `k` nearest vocabulary words of `word` in `space`.
pub fn nearest_neighbors(
    space: &Embeddings,
    word: &str,
    k: usize,
) -> Result<Vec<Neighbor>, OverlapError> {
    let v = space
        .vector(word)
        .ok_or_else(|| OverlapError::MissingWord(word.to_string()))?;
    CandidatePool::full(space).top_k(v, word, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[(&str, [f32; 2])]) -> Embeddings {
        let mut t = VectorTable::new(2);
        for (w, v) in rows {
            t.push(*w, v).unwrap();
        }
        Embeddings::new(t)
    }

    #[test]
    fn ranked_by_cosine() {
        // cosines to (1,0): b 0.9, c 0.5, d 0.1
        let s = space(&[
            ("a", [1.0, 0.0]),
            ("b", [0.9, (1.0f32 - 0.81).sqrt()]),
            ("c", [0.5, (0.75f32).sqrt()]),
            ("d", [0.1, (0.99f32).sqrt()]),
        ]);
        let nn = nearest_neighbors(&s, "a", 2).unwrap();
        let words: Vec<_> = nn.iter().map(|n| n.word.as_str()).collect();
        assert_eq!(words, vec!["b", "c"]);
        assert!((nn[0].cosine - 0.9).abs() < 1e-6);
    }

    #[test]
    fn ties_break_lexicographically() {
        let s = space(&[
            ("q", [1.0, 0.0]),
            ("zeta", [2.0, 1.0]),
            ("alpha", [2.0, 1.0]),
        ]);
        let nn = nearest_neighbors(&s, "q", 1).unwrap();
        assert_eq!(nn[0].word, "alpha");
    }

    #[test]
    fn zero_query_is_degenerate() {
        let s = space(&[("q", [0.0, 0.0]), ("a", [1.0, 0.0])]);
        assert!(matches!(
            nearest_neighbors(&s, "q", 1),
            Err(OverlapError::DegenerateVector(_))
        ));
    }

    #[test]
    fn pool_smaller_than_k() {
        let s = space(&[("q", [1.0, 0.0]), ("a", [1.0, 0.0])]);
        assert!(matches!(
            nearest_neighbors(&s, "q", 2),
            Err(OverlapError::PoolTooSmall { pool: 1, .. })
        ));
    }

    #[test]
    fn oov_query_uses_extra_table() {
        let s = space(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let mut extra = VectorTable::new(2);
        extra.push("x", &[0.1, 1.0]).unwrap();
        let s = Embeddings::with_extra(s.vocab, extra);
        let nn = nearest_neighbors(&s, "x", 1).unwrap();
        assert_eq!(nn[0].word, "b");
        assert!(matches!(
            nearest_neighbors(&s, "missing", 1),
            Err(OverlapError::MissingWord(_))
        ));
    }
}
