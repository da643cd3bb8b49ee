//! Corpus ingestion, tokenization, seeded line shuffling and frequency counts.
//!
//! Shuffling uses Xoshiro256++ seeded through SplitMix64 (`seed_from_u64`)
//! and a descending Fisher–Yates pass: for `i` from `n - 1` down to `1`, an
//! index `j` is drawn uniformly from `0..=i` as a `u64` (rand 0.8
//! `gen_range`, which is width-independent for `u64`) and lines `i` and `j`
//! are swapped. Any implementation following those steps reproduces the
//! same line order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line} is not valid UTF-8")]
    Encoding { path: PathBuf, line: usize },
    #[error("{0} requires a non-empty corpus")]
    Empty(&'static str),
}

/// An ordered sequence of tokenized lines for one condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    lines: Vec<Vec<String>>,
    label: String,
    token_count: usize,
    shuffle_seed: Option<u64>,
}

impl Corpus {
    /// Builds a corpus from already tokenized lines. Empty lines are dropped.
    pub fn from_lines(label: impl Into<String>, lines: Vec<Vec<String>>) -> Self {
        let lines: Vec<Vec<String>> = lines.into_iter().filter(|l| !l.is_empty()).collect();
        let token_count = lines.iter().map(Vec::len).sum();
        Corpus {
            lines,
            label: label.into(),
            token_count,
            shuffle_seed: None,
        }
    }

    /// Tokenizes each raw line with [`tokenize`].
    pub fn from_text_lines<'a, I>(label: impl Into<String>, raw: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        Self::from_lines(label, raw.into_iter().map(tokenize).collect())
    }

    /// Concatenates corpora in order. The result carries no shuffle seed.
    pub fn concat(label: impl Into<String>, parts: &[&Corpus]) -> Self {
        let lines = parts.iter().flat_map(|c| c.lines.iter().cloned()).collect();
        Self::from_lines(label, lines)
    }

    pub fn lines(&self) -> &[Vec<String>] {
        &self.lines
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn shuffle_seed(&self) -> Option<u64> {
        self.shuffle_seed
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    /// Writes the corpus back out, one space-joined line per row.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for line in &self.lines {
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{FF01}'..='\u{FF0F}')
}

/// Lowercases, splits on Unicode whitespace and strips punctuation from
/// both ends of every token. Tokens that end up empty are removed.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace()
        .map(|t| t.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Reads a UTF-8 file with one sentence or document per line.
pub fn load_corpus(path: impl AsRef<Path>, label: &str) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = Vec::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let text = std::str::from_utf8(raw).map_err(|_| CorpusError::Encoding {
            path: path.to_path_buf(),
            line: idx + 1,
        })?;
        let tokens = tokenize(text);
        if !tokens.is_empty() {
            lines.push(tokens);
        }
    }
    Ok(Corpus::from_lines(label, lines))
}

/// Returns a line-level permutation of `corpus` determined by `seed` alone.
pub fn shuffle(corpus: &Corpus, seed: u64) -> Result<Corpus, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty("shuffle"));
    }
    let mut lines = corpus.lines.clone();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for i in (1..lines.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        lines.swap(i, j);
    }
    Ok(Corpus {
        lines,
        label: corpus.label.clone(),
        token_count: corpus.token_count,
        shuffle_seed: Some(seed),
    })
}

/// Raw and per-million counts for every word of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
    token_count: u64,
}

impl FrequencyTable {
    pub fn raw(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// Occurrences per 1,000,000 tokens; 0 for unseen words.
    pub fn per_million(&self, word: &str) -> f64 {
        self.raw(word) as f64 * 1_000_000.0 / self.token_count as f64
    }

    pub fn token_count(&self) -> u64 {
        self.token_count
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// TSV with header `word\tcount\tper_million`, by descending count then word.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut rows: Vec<(&str, u64)> = self.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        writeln!(out, "word\tcount\tper_million")?;
        for (word, count) in rows {
            writeln!(out, "{word}\t{count}\t{:.6}", self.per_million(word))?;
        }
        Ok(())
    }
}

pub fn count_frequencies(corpus: &Corpus) -> Result<FrequencyTable, CorpusError> {
    if corpus.token_count == 0 {
        return Err(CorpusError::Empty("count_frequencies"));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for token in corpus.lines.iter().flatten() {
        *counts.entry(token.as_str()).or_default() += 1;
    }
    Ok(FrequencyTable {
        counts: counts.into_iter().map(|(w, c)| (w.to_owned(), c)).collect(),
        token_count: corpus.token_count as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("The cat sat."), toks(&["the", "cat", "sat"]));
        assert!(tokenize("  ").is_empty());
        assert_eq!(tokenize("don't stop"), toks(&["don't", "stop"]));
        assert_eq!(tokenize("«Quoted» — dash ..."), toks(&["quoted", "dash"]));
        assert_eq!(
            tokenize("Über\tNAÏVE\u{3000}x"),
            toks(&["über", "naïve", "x"])
        );
    }

    #[test]
    fn load_drops_empty_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "The cat sat.\n\n").unwrap();
        let c = load_corpus(f.path(), "na").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.token_count(), 3);
        assert_eq!(c.lines()[0], toks(&["the", "cat", "sat"]));
        assert_eq!(c.label(), "na");
        assert_eq!(c.shuffle_seed(), None);
    }

    #[test]
    fn load_empty_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let c = load_corpus(f.path(), "x").unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(c.token_count(), 0);
    }

    #[test]
    fn load_preserves_disk_order() {
        let mut a = tempfile::NamedTempFile::new().unwrap();
        let mut b = tempfile::NamedTempFile::new().unwrap();
        write!(a, "one two\nthree\n").unwrap();
        write!(b, "three\none two\n").unwrap();
        let ca = load_corpus(a.path(), "x").unwrap();
        let cb = load_corpus(b.path(), "x").unwrap();
        assert_ne!(ca.lines(), cb.lines());
        let mut la = ca.lines().to_vec();
        let mut lb = cb.lines().to_vec();
        la.sort();
        lb.sort();
        assert_eq!(la, lb);
    }

    #[test]
    fn load_reports_bad_utf8_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"fine\nalso fine\nbad \xff byte\n").unwrap();
        match load_corpus(f.path(), "x") {
            Err(CorpusError::Encoding { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected encoding error, got {other:?}"),
        }
    }

    #[test]
    fn load_missing_file() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.txt", "x"),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn shuffle_is_deterministic() {
        let c = Corpus::from_text_lines("x", ["a b", "c", "d e f", "g", "h i"]);
        let s1 = shuffle(&c, 7).unwrap();
        let s2 = shuffle(&c, 7).unwrap();
        assert_eq!(s1.lines(), s2.lines());
        assert_eq!(s1.shuffle_seed(), Some(7));
        assert_eq!(s1.token_count(), c.token_count());
    }

    #[test]
    fn shuffle_single_line() {
        let c = Corpus::from_text_lines("x", ["only line here"]);
        assert_eq!(shuffle(&c, 99).unwrap().lines(), c.lines());
    }

    #[test]
    fn shuffle_five_seeds_are_permutations() {
        let c = Corpus::from_text_lines("x", ["a", "b", "c", "d", "e"]);
        let mut sorted_src = c.lines().to_vec();
        sorted_src.sort();
        let mut orders = Vec::new();
        for seed in 1..=5 {
            let s = shuffle(&c, seed).unwrap();
            let mut sorted = s.lines().to_vec();
            sorted.sort();
            assert_eq!(sorted, sorted_src);
            orders.push(s.lines().to_vec());
        }
        orders.sort();
        orders.dedup();
        assert!(orders.len() > 1);
    }

    #[test]
    fn shuffle_empty_errors() {
        let c = Corpus::from_lines("x", vec![]);
        assert!(matches!(shuffle(&c, 1), Err(CorpusError::Empty(_))));
    }

    #[test]
    fn frequencies_arithmetic() {
        let c = Corpus::from_text_lines("x", ["a a a"]);
        let f = count_frequencies(&c).unwrap();
        assert_eq!(f.raw("a"), 3);
        assert_eq!(f.per_million("a"), 1_000_000.0);

        // 2,000,000 tokens, "queue" 50 times.
        let mut lines = vec![vec!["queue".to_string()]; 50];
        lines.extend(std::iter::repeat_n(vec!["filler".to_string(); 1000], 1999));
        lines.push(vec!["filler".to_string(); 950]);
        let big = Corpus::from_lines("x", lines);
        assert_eq!(big.token_count(), 2_000_000);
        let f = count_frequencies(&big).unwrap();
        assert_eq!(f.per_million("queue"), 25.0);
        assert_eq!(f.per_million("absent"), 0.0);
    }

    #[test]
    fn frequencies_of_concat_are_sums() {
        let a = Corpus::from_text_lines("a", ["x y y", "z"]);
        let b = Corpus::from_text_lines("b", ["y z w", "w w"]);
        let both = Corpus::concat("all", &[&a, &b]);
        let fa = count_frequencies(&a).unwrap();
        let fb = count_frequencies(&b).unwrap();
        let fc = count_frequencies(&both).unwrap();
        // brute-force recount over the raw token stream
        let all_tokens: Vec<&String> = a.lines().iter().chain(b.lines()).flatten().collect();
        for w in ["x", "y", "z", "w"] {
            let brute = all_tokens.iter().filter(|t| t.as_str() == w).count() as u64;
            assert_eq!(fc.raw(w), brute);
            assert_eq!(fc.raw(w), fa.raw(w) + fb.raw(w));
        }
    }

    #[test]
    fn frequencies_empty_errors() {
        let c = Corpus::from_lines("x", vec![]);
        assert!(count_frequencies(&c).is_err());
    }

    #[test]
    fn tsv_export() {
        let c = Corpus::from_text_lines("x", ["b a b"]);
        let mut buf = Vec::new();
        count_frequencies(&c).unwrap().write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "word\tcount\tper_million\nb\t2\t666666.666667\na\t1\t333333.333333\n"
        );
    }

    fn corpus_strategy() -> impl Strategy<Value = Corpus> {
        prop::collection::vec(prop::collection::vec("[a-e]{1,3}", 1..6), 1..30)
            .prop_map(|lines| Corpus::from_lines("p", lines))
    }

    proptest! {
        #[test]
        fn shuffle_preserves_line_multiset(c in corpus_strategy(), seed in any::<u64>()) {
            let s = shuffle(&c, seed).unwrap();
            let mut a = c.lines().to_vec();
            let mut b = s.lines().to_vec();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn shuffle_is_seed_sensitive(c in corpus_strategy()) {
            let mut distinct = c.lines().to_vec();
            distinct.sort();
            distinct.dedup();
            prop_assume!(distinct.len() >= 2);
            let orders: std::collections::HashSet<Vec<Vec<String>>> =
                (0..10u64).map(|s| shuffle(&c, s).unwrap().lines().to_vec()).collect();
            prop_assert!(orders.len() >= 2);
        }

        #[test]
        fn frequency_totals(c in corpus_strategy()) {
            let f = count_frequencies(&c).unwrap();
            let total: u64 = f.iter().map(|(_, n)| n).sum();
            prop_assert_eq!(total as usize, c.token_count());
            let pm: f64 = f.iter().map(|(w, _)| f.per_million(w)).sum();
            prop_assert!((pm - 1_000_000.0).abs() / 1_000_000.0 < 1e-6);
        }
    }
}
