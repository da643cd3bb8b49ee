//! Synthetic two-dialect corpora with a known amount of semantic change.
//!
//! Words belong to collocate classes. A line is a walk over classes that
//! stays in the current class with probability `stay_probability` and
//! otherwise jumps to a uniformly drawn class; each step emits a word of the
//! current class, weighted by a Zipf-like global frequency. Corpus B uses the
//! same random stream as corpus A, except that a `divergence_rate` fraction of
//! the vocabulary is reassigned to a different class. B's lines are then
//! permuted with a derived seed, so with no divergence B holds exactly A's
//! lines in another order.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{ConditionSpec, ExperimentConfig, LexiconSpec};
use crate::corpus::{shuffle, Corpus};
use crate::lexicon::{ColumnSpec, Domain, Pos};
use crate::sgns::TrainConfig;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const MEMBERSHIP_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const PERMUTE_STREAM: u64 = 0xd1b5_4a32_d192_ed03;
const ANNOTATION_STREAM: u64 = 0x94d0_49bb_1331_11eb;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("divergence rate must lie in [0, 1], got {0}")]
    InvalidRate(f64),
    #[error("need at least 10000 tokens, got {0}")]
    TooFewTokens(usize),
    #[error("{0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub classes: usize,
    pub tokens: usize,
    pub divergence_rate: f64,
    pub seed: u64,
    pub stay_probability: f64,
    pub min_line: usize,
    pub max_line: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 2000,
            classes: 20,
            tokens: 1_000_000,
            divergence_rate: 0.2,
            seed: 0,
            stay_probability: 0.8,
            min_line: 8,
            max_line: 16,
        }
    }
}

/// Per-word annotations written alongside the synthetic corpora.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthWord {
    pub word: String,
    pub class_a: usize,
    pub class_b: usize,
    pub concreteness: f64,
    /// Missing for a few words so the lexicon exercises partial coverage.
    pub aoa: Option<f64>,
    pub pos: Pos,
    /// Absent for a few words so the join drops them.
    pub domain: Option<Domain>,
}

impl SynthWord {
    pub fn divergent(&self) -> bool {
        self.class_a != self.class_b
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDialects {
    pub a: Corpus,
    pub b: Corpus,
    pub words: Vec<SynthWord>,
}

/// Pronounceable, unique pseudo-word for index `i`.
pub fn pseudo_word(i: usize) -> String {
    let syllables = CONSONANTS.len() * VOWELS.len();
    let mut n = i;
    let mut out = String::new();
    loop {
        let s = n % syllables;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
        n /= syllables;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    // Two-letter words are too short to share n-grams sensibly.
    if out.len() == 2 {
        out.push('n');
    }
    out
}

struct Generator {
    members: Vec<Vec<usize>>,
    samplers: Vec<WeightedIndex<f64>>,
}

impl Generator {
    fn new(class_of: &[usize], classes: usize, weights: &[f64]) -> Self {
        let mut members = vec![Vec::new(); classes];
        for (w, &c) in class_of.iter().enumerate() {
            members[c].push(w);
        }
        let samplers = members
            .iter()
            .map(|m| {
                if m.is_empty() {
                    // Empty class: emit nothing; a dummy sampler keeps the
                    // random stream aligned.
                    WeightedIndex::new([1.0]).expect("positive")
                } else {
                    WeightedIndex::new(m.iter().map(|&w| weights[w])).expect("positive")
                }
            })
            .collect();
        Generator { members, samplers }
    }

    fn lines(&self, config: &SynthConfig, words: &[String]) -> Vec<Vec<String>> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
        let classes = self.members.len();
        let mut lines = Vec::new();
        let mut produced = 0;
        while produced < config.tokens {
            let len = rng.gen_range(config.min_line..=config.max_line);
            let mut class = rng.gen_range(0..classes);
            let mut line = Vec::with_capacity(len);
            for step in 0..len {
                if step > 0 && !rng.gen_bool(config.stay_probability) {
                    class = rng.gen_range(0..classes);
                }
                let pick = self.samplers[class].sample(&mut rng);
                if let Some(&w) = self.members[class].get(pick) {
                    line.push(words[w].clone());
                }
            }
            produced += line.len();
            if !line.is_empty() {
                lines.push(line);
            }
        }
        lines
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.divergence_rate) {
            return Err(SynthError::InvalidRate(self.divergence_rate));
        }
        if self.tokens < 10_000 {
            return Err(SynthError::TooFewTokens(self.tokens));
        }
        if self.classes < 2 || self.vocab_size < 2 * self.classes {
            return Err(SynthError::InvalidConfig(format!(
                "need at least 2 classes and 2 words per class ({} words, {} classes)",
                self.vocab_size, self.classes
            )));
        }
        if !(0.0..=1.0).contains(&self.stay_probability) {
            return Err(SynthError::InvalidConfig(format!(
                "stay probability {} is not in [0, 1]",
                self.stay_probability
            )));
        }
        if self.min_line == 0 || self.min_line > self.max_line {
            return Err(SynthError::InvalidConfig(format!(
                "invalid line length range {}..={}",
                self.min_line, self.max_line
            )));
        }
        Ok(())
    }
}

fn annotate(
    config: &SynthConfig,
    words: &[String],
    class_a: &[usize],
    class_b: &[usize],
) -> Vec<SynthWord> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed ^ ANNOTATION_STREAM);
    let pos_weights = WeightedIndex::new([45, 20, 15, 5, 8, 5, 2]).expect("positive");
    let pos_levels = [
        Pos::Noun,
        Pos::Verb,
        Pos::Adjective,
        Pos::Adverb,
        Pos::Name,
        Pos::Function,
        Pos::Other,
    ];
    words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let concreteness = (rng.gen_range(1.0f64..5.0) * 100.0).round() / 100.0;
            let aoa = (rng.gen_range(2.5f64..16.0) * 100.0).round() / 100.0;
            let pos = pos_levels[pos_weights.sample(&mut rng)];
            let has_aoa = rng.gen_bool(0.97);
            let has_domain = rng.gen_bool(0.95);
            SynthWord {
                word: w.clone(),
                class_a: class_a[i],
                class_b: class_b[i],
                concreteness,
                aoa: has_aoa.then_some(aoa),
                pos,
                domain: has_domain.then(|| Domain::ALL[class_a[i] % Domain::ALL.len()]),
            }
        })
        .collect()
}

/// Generates corpora A and B. Deterministic in `config`.
pub fn generate_synthetic_dialects(config: &SynthConfig) -> Result<SyntheticDialects, SynthError> {
    config.validate()?;
    let v = config.vocab_size;
    let words: Vec<String> = (0..v).map(pseudo_word).collect();
    let weights: Vec<f64> = (0..v).map(|i| 1.0 / (i as f64 + 10.0)).collect();
    let class_a: Vec<usize> = (0..v).map(|i| i % config.classes).collect();

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed ^ MEMBERSHIP_STREAM);
    let moved = (config.divergence_rate * v as f64).round() as usize;
    let mut class_b = class_a.clone();
    for w in sample(&mut rng, v, moved).into_vec() {
        let shift = rng.gen_range(1..config.classes);
        class_b[w] = (class_a[w] + shift) % config.classes;
    }

    let lines_a = Generator::new(&class_a, config.classes, &weights).lines(config, &words);
    let lines_b = Generator::new(&class_b, config.classes, &weights).lines(config, &words);
    let a = Corpus::from_lines("a", lines_a);
    let b = Corpus::from_lines("b", lines_b);
    let b = shuffle(&b, config.seed ^ PERMUTE_STREAM).expect("non-empty corpus");
    let b = Corpus::from_lines("b", b.lines().to_vec());
    let words = annotate(config, &words, &class_a, &class_b);
    Ok(SyntheticDialects { a, b, words })
}

fn write_file(path: &Path, body: &str) -> io::Result<()> {
    fs::write(path, body)
}

/// Training settings sized for the synthetic corpora: small vectors, few
/// negatives and epochs, so a 1M-token run takes seconds on one core.
pub fn desk_train_config() -> TrainConfig {
    TrainConfig {
        dim: 32,
        negatives: 5,
        epochs: 2,
        bucket_count: 100_000,
        window: 3,
        ..Default::default()
    }
}

/// Experiment config for a fixture written by
/// [`SyntheticDialects::write_fixture`], with paths relative to its directory.
pub fn fixture_config() -> ExperimentConfig {
    let spec = |file: &str, column: &str| ColumnSpec::new(file, "word", column);
    ExperimentConfig {
        conditions: vec![
            ConditionSpec {
                label: "a".into(),
                corpus: "a.txt".into(),
            },
            ConditionSpec {
                label: "b".into(),
                corpus: "b.txt".into(),
            },
        ],
        runs_per_condition: 5,
        train: desk_train_config(),
        k_values: crate::overlap::DEFAULT_K_VALUES.to_vec(),
        lexicon: LexiconSpec {
            concreteness: spec("concreteness.tsv", "concreteness"),
            aoa: Some(spec("aoa.tsv", "aoa")),
            pos: spec("pos.tsv", "pos"),
            domain: spec("domains.tsv", "domain"),
        },
        output: "output".into(),
        master_seed: 0,
        jobs: 1,
        analysis: Default::default(),
    }
}

impl SyntheticDialects {
    /// Writes `a.txt`, `b.txt`, the four annotation files, `divergent.txt`
    /// and a ready-to-run `experiment.toml` into `dir`.
    pub fn write_fixture(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, corpus) in [("a.txt", &self.a), ("b.txt", &self.b)] {
            let mut out = BufWriter::new(fs::File::create(dir.join(name))?);
            corpus.write_text(&mut out)?;
            out.flush()?;
        }
        let mut conc = String::from("word\tconcreteness\n");
        let mut aoa = String::from("word\taoa\n");
        let mut pos = String::from("word\tpos\n");
        let mut dom = String::from("word\tdomain\n");
        let mut div = String::new();
        for w in &self.words {
            writeln!(conc, "{}\t{:.2}", w.word, w.concreteness).unwrap();
            if let Some(a) = w.aoa {
                writeln!(aoa, "{}\t{a:.2}", w.word).unwrap();
            }
            writeln!(pos, "{}\t{}", w.word, w.pos).unwrap();
            if let Some(d) = w.domain {
                writeln!(dom, "{}\t{}", w.word, d).unwrap();
            }
            if w.divergent() {
                writeln!(div, "{}", w.word).unwrap();
            }
        }
        write_file(&dir.join("concreteness.tsv"), &conc)?;
        write_file(&dir.join("aoa.tsv"), &aoa)?;
        write_file(&dir.join("pos.tsv"), &pos)?;
        write_file(&dir.join("domains.tsv"), &dom)?;
        write_file(&dir.join("divergent.txt"), &div)?;
        write_file(&dir.join("experiment.toml"), &fixture_config().to_toml())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rate: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            vocab_size: 200,
            classes: 10,
            tokens: 20_000,
            divergence_rate: rate,
            seed,
            ..Default::default()
        }
    }

    fn sorted_lines(c: &Corpus) -> Vec<Vec<String>> {
        let mut l = c.lines().to_vec();
        l.sort();
        l
    }

    #[test]
    fn pseudo_words_are_unique() {
        let words: std::collections::HashSet<String> = (0..20_000).map(pseudo_word).collect();
        assert_eq!(words.len(), 20_000);
        assert!(words.iter().all(|w| w.len() >= 3));
    }

    #[test]
    fn same_seed_same_corpora() {
        let x = generate_synthetic_dialects(&small(0.3, 4)).unwrap();
        let y = generate_synthetic_dialects(&small(0.3, 4)).unwrap();
        assert_eq!(x.a, y.a);
        assert_eq!(x.b, y.b);
        assert_eq!(x.words, y.words);
    }

    #[test]
    fn zero_divergence_is_a_permutation() {
        let d = generate_synthetic_dialects(&small(0.0, 9)).unwrap();
        assert_ne!(d.a.lines(), d.b.lines());
        assert_eq!(sorted_lines(&d.a), sorted_lines(&d.b));
        assert!(d.words.iter().all(|w| !w.divergent()));
    }

    #[test]
    fn divergent_fraction_matches_rate() {
        let d = generate_synthetic_dialects(&small(0.2, 1)).unwrap();
        let moved = d.words.iter().filter(|w| w.divergent()).count();
        assert_eq!(moved, 40);
        assert!(d.a.token_count() >= 20_000);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            generate_synthetic_dialects(&small(1.5, 0)).unwrap_err(),
            SynthError::InvalidRate(1.5)
        );
        let mut c = small(0.1, 0);
        c.tokens = 50;
        assert_eq!(
            generate_synthetic_dialects(&c).unwrap_err(),
            SynthError::TooFewTokens(50)
        );
        assert!(generate_synthetic_dialects(&small(f64::NAN, 0)).is_err());
    }

    #[test]
    fn fixture_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_synthetic_dialects(&small(0.2, 2)).unwrap();
        d.write_fixture(dir.path()).unwrap();
        for f in [
            "a.txt",
            "b.txt",
            "concreteness.tsv",
            "aoa.tsv",
            "pos.tsv",
            "domains.tsv",
            "divergent.txt",
            "experiment.toml",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let divergent = fs::read_to_string(dir.path().join("divergent.txt")).unwrap();
        assert_eq!(divergent.lines().count(), 40);
        let config = ExperimentConfig::load(dir.path().join("experiment.toml")).unwrap();
        config.validate().unwrap();
        assert_eq!(config.conditions[0].corpus, dir.path().join("a.txt"));
    }
}
