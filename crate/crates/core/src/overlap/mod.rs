//! Nearest-neighbor overlap between embedding spaces and the schedule of
//! within- and between-condition comparisons.
//!
//! Overlap@k of a word is the fraction of its k nearest neighbors (cosine,
//! ties broken by word) shared by two spaces. Neighbors are drawn from the
//! vocabulary the two spaces have in common, minus the query word.

mod knn;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use knn::{nearest_neighbors, CandidatePool, Embeddings, Neighbor};

/// Neighborhood sizes reported by default; 50 is the primary one.
pub const DEFAULT_K_VALUES: [usize; 4] = [5, 10, 25, 50];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OverlapError {
    #[error("{0:?} has a zero or non-finite vector")]
    DegenerateVector(String),
    #[error("{word:?}: k = {k} but only {pool} candidate neighbors")]
    PoolTooSmall { word: String, k: usize, pool: usize },
    #[error("{0:?} has no vector")]
    MissingWord(String),
    #[error("runs_per_condition must be at least 2, got {0}")]
    TooFewRuns(usize),
    #[error("no embedding space for condition {condition:?} run {run}")]
    MissingSpace { condition: String, run: usize },
    #[error("k values must be positive")]
    InvalidK,
}

/// One side of a comparison: a condition label and a run index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunId {
    pub condition: String,
    pub run: usize,
}

impl RunId {
    pub fn new(condition: impl Into<String>, run: usize) -> Self {
        RunId {
            condition: condition.into(),
            run,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairId {
    pub a: RunId,
    pub b: RunId,
}

impl PairId {
    pub fn condition_type(&self) -> ConditionType {
        if self.a.condition == self.b.condition {
            ConditionType::Within
        } else {
            ConditionType::Between
        }
    }

    /// File-name friendly label such as `na-0__eu-1`.
    pub fn slug(&self) -> String {
        format!(
            "{}-{}__{}-{}",
            self.a.condition, self.a.run, self.b.condition, self.b.run
        )
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{} vs {}#{}",
            self.a.condition, self.a.run, self.b.condition, self.b.run
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionType {
    Within,
    Between,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRecord {
    pub word: String,
    pub pair: PairId,
    pub k: usize,
    pub overlap: f64,
}

impl OverlapRecord {
    pub fn condition_type(&self) -> ConditionType {
        self.pair.condition_type()
    }
}

/// A word that could not be measured for a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub word: String,
    pub pair: PairId,
    pub reason: String,
}

/// The pairs of runs compared for one pair of conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSchedule {
    pub pairs: Vec<PairId>,
}

/// Within a condition: every unordered pair of distinct runs. Between two
/// conditions: `(i, i)` and `(i, (i + 1) mod r)` for each run `i`.
pub fn schedule_pairs(
    runs_per_condition: usize,
    condition_a: &str,
    condition_b: &str,
) -> Result<PairSchedule, OverlapError> {
    let r = runs_per_condition;
    if r < 2 {
        return Err(OverlapError::TooFewRuns(r));
    }
    let pair = |i, j| PairId {
        a: RunId::new(condition_a, i),
        b: RunId::new(condition_b, j),
    };
    let pairs = if condition_a == condition_b {
        (0..r)
            .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
            .map(|(i, j)| pair(i, j))
            .collect()
    } else {
        (0..r)
            .flat_map(|i| [(i, i), (i, (i + 1) % r)])
            .map(|(i, j)| pair(i, j))
            .collect()
    };
    Ok(PairSchedule { pairs })
}

/// Condition pairs compared in an experiment: every unordered pair,
/// including each condition with itself, in input order.
pub fn condition_pairs(conditions: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (i, a) in conditions.iter().enumerate() {
        for b in &conditions[i..] {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

fn shared_pools<'a>(
    a: &'a Embeddings,
    b: &'a Embeddings,
) -> (CandidatePool<'a>, CandidatePool<'a>) {
    let shared: Vec<&str> = a
        .vocab()
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| b.vocab().index_of(w).is_some())
        .collect();
    (
        CandidatePool::from_words(a, shared.iter().copied()),
        CandidatePool::from_words(b, shared.iter().copied()),
    )
}

fn shared_fraction(na: &[Neighbor], nb: &[Neighbor], k: usize) -> f64 {
    let left: HashSet<&str> = na[..k].iter().map(|n| n.word.as_str()).collect();
    let hits = nb[..k]
        .iter()
        .filter(|n| left.contains(n.word.as_str()))
        .count();
    hits as f64 / k as f64
}

/// Overlap@k of `word` between two spaces.
pub fn overlap(a: &Embeddings, b: &Embeddings, word: &str, k: usize) -> Result<f64, OverlapError> {
    let (pa, pb) = shared_pools(a, b);
    let missing = || OverlapError::MissingWord(word.to_string());
    let na = pa.top_k(a.vector(word).ok_or_else(missing)?, word, k)?;
    let nb = pb.top_k(b.vector(word).ok_or_else(missing)?, word, k)?;
    Ok(shared_fraction(&na, &nb, k))
}

/// Overlap of every word at every k for one pair of spaces. Records come
/// back in word order with ascending k.
pub fn compare_pair(
    a: &Embeddings,
    b: &Embeddings,
    pair: &PairId,
    words: &[&str],
    ks: &[usize],
) -> Result<(Vec<OverlapRecord>, Vec<Skip>), OverlapError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let k_max = match ks.last() {
        Some(&k) if ks[0] > 0 => k,
        _ => return Err(OverlapError::InvalidK),
    };
    let (pa, pb) = shared_pools(a, b);
    let per_word: Vec<Result<Vec<OverlapRecord>, Skip>> = words
        .par_iter()
        .map(|&word| {
            let skip = |reason: String| Skip {
                word: word.to_string(),
                pair: pair.clone(),
                reason,
            };
            let va = a
                .vector(word)
                .ok_or_else(|| skip(format!("no vector in {}#{}", pair.a.condition, pair.a.run)))?;
            let vb = b
                .vector(word)
                .ok_or_else(|| skip(format!("no vector in {}#{}", pair.b.condition, pair.b.run)))?;
            let na = pa.top_k(va, word, k_max).map_err(|e| skip(e.to_string()))?;
            let nb = pb.top_k(vb, word, k_max).map_err(|e| skip(e.to_string()))?;
            Ok(ks
                .iter()
                .map(|&k| OverlapRecord {
                    word: word.to_string(),
                    pair: pair.clone(),
                    k,
                    overlap: shared_fraction(&na, &nb, k),
                })
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for r in per_word {
        match r {
            Ok(rs) => records.extend(rs),
            Err(s) => skipped.push(s),
        }
    }
    Ok((records, skipped))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Comparison {
    pub records: Vec<OverlapRecord>,
    pub skipped: Vec<Skip>,
}

/// Runs every scheduled pair for every condition pair (including each
/// condition with itself).
pub fn compare_conditions(
    spaces: &BTreeMap<RunId, Embeddings>,
    conditions: &[String],
    runs_per_condition: usize,
    words: &[&str],
    ks: &[usize],
) -> Result<Comparison, OverlapError> {
    let mut out = Comparison::default();
    for (ca, cb) in condition_pairs(conditions) {
        for pair in schedule_pairs(runs_per_condition, &ca, &cb)?.pairs {
            let get = |id: &RunId| {
                spaces.get(id).ok_or_else(|| OverlapError::MissingSpace {
                    condition: id.condition.clone(),
                    run: id.run,
                })
            };
            let (a, b) = (get(&pair.a)?, get(&pair.b)?);
            let (records, skipped) = compare_pair(a, b, &pair, words, ks)?;
            out.records.extend(records);
            out.skipped.extend(skipped);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    word: String,
    cond_a: String,
    run_a: usize,
    cond_b: String,
    run_b: usize,
    condition_type: ConditionType,
    k: usize,
    overlap: f64,
}

/// CSV `word,cond_a,run_a,cond_b,run_b,condition_type,k,overlap`.
pub fn write_records_csv<'a, W, I>(records: I, out: W) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a OverlapRecord>,
{
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRecord {
            word: r.word.clone(),
            cond_a: r.pair.a.condition.clone(),
            run_a: r.pair.a.run,
            cond_b: r.pair.b.condition.clone(),
            run_b: r.pair.b.run,
            condition_type: r.condition_type(),
            k: r.k,
            overlap: r.overlap,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> csv::Result<Vec<OverlapRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize::<CsvRecord>()
        .map(|r| {
            r.map(|c| OverlapRecord {
                word: c.word,
                pair: PairId {
                    a: RunId::new(c.cond_a, c.run_a),
                    b: RunId::new(c.cond_b, c.run_b),
                },
                k: c.k,
                overlap: c.overlap,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgns::VectorTable;

    fn table(rows: &[(&str, Vec<f32>)]) -> Embeddings {
        let mut t = VectorTable::new(rows[0].1.len());
        for (w, v) in rows {
            t.push(*w, v).unwrap();
        }
        Embeddings::new(t)
    }

    /// Words on a circle; `perm` reorders which word sits at which angle.
    fn circle(words: &[&str], perm: &[usize]) -> Embeddings {
        let n = words.len() as f32;
        let rows: Vec<(&str, Vec<f32>)> = perm
            .iter()
            .enumerate()
            .map(|(slot, &wi)| {
                let a = slot as f32 / n * std::f32::consts::TAU;
                (words[wi], vec![a.cos(), a.sin()])
            })
            .collect();
        table(&rows)
    }

    #[test]
    fn all_shared_is_full_overlap() {
        let words: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
        let ws: Vec<&str> = words.iter().map(String::as_str).collect();
        let id: Vec<usize> = (0..20).collect();
        let a = circle(&ws, &id);
        assert_eq!(overlap(&a, &a, "w03", 10).unwrap(), 1.0);
    }

    #[test]
    fn half_shared_is_half() {
        // Query q; in A the 10 nearest are n0..n9, in B they are n5..n14.
        let mut a_rows = vec![("q", vec![1.0, 0.0])];
        let mut b_rows = vec![("q", vec![1.0, 0.0])];
        let names: Vec<String> = (0..15).map(|i| format!("n{i:02}")).collect();
        for (i, n) in names.iter().enumerate() {
            let near = |rank: usize| vec![1.0, 0.01 * (rank as f32 + 1.0)];
            let far = vec![-1.0, 0.0];
            a_rows.push((n.as_str(), if i < 10 { near(i) } else { far.clone() }));
            b_rows.push((n.as_str(), if i >= 5 { near(i) } else { far.clone() }));
        }
        let a = table(&a_rows);
        let b = table(&b_rows);
        assert_eq!(overlap(&a, &b, "q", 10).unwrap(), 0.5);
        assert_eq!(overlap(&b, &a, "q", 10).unwrap(), 0.5);
    }

    #[test]
    fn candidate_pool_is_shared_vocabulary() {
        let a = table(&[
            ("q", vec![1.0, 0.0]),
            ("only_a", vec![1.0, 0.0]),
            ("x", vec![0.5, 0.5]),
            ("y", vec![-1.0, 0.0]),
        ]);
        let b = table(&[
            ("q", vec![1.0, 0.0]),
            ("x", vec![0.5, 0.5]),
            ("y", vec![-1.0, 0.1]),
        ]);
        // only_a is nearest in A but absent from B, so it is not a candidate.
        assert_eq!(overlap(&a, &b, "q", 1).unwrap(), 1.0);
    }

    #[test]
    fn schedules() {
        let w = schedule_pairs(5, "eu", "eu").unwrap();
        assert_eq!(w.pairs.len(), 10);
        assert!(w.pairs.iter().all(|p| p.a.run != p.b.run));
        let uniq: HashSet<_> = w.pairs.iter().collect();
        assert_eq!(uniq.len(), 10);

        let b = schedule_pairs(5, "eu", "na").unwrap();
        assert_eq!(b.pairs.len(), 10);
        let uniq: HashSet<_> = b.pairs.iter().collect();
        assert_eq!(uniq.len(), 10);
        for run in 0..5 {
            assert_eq!(b.pairs.iter().filter(|p| p.a.run == run).count(), 2);
            assert_eq!(b.pairs.iter().filter(|p| p.b.run == run).count(), 2);
        }
        assert!(b
            .pairs
            .iter()
            .all(|p| p.condition_type() == ConditionType::Between));

        assert_eq!(schedule_pairs(2, "a", "a").unwrap().pairs.len(), 1);
        assert_eq!(schedule_pairs(3, "a", "b").unwrap().pairs.len(), 6);
        assert_eq!(
            schedule_pairs(1, "a", "a"),
            Err(OverlapError::TooFewRuns(1))
        );
    }

    fn spaces_for(
        conds: &[&str],
        make: impl Fn(&str, usize) -> Embeddings,
    ) -> BTreeMap<RunId, Embeddings> {
        let mut m = BTreeMap::new();
        for c in conds {
            for r in 0..5 {
                m.insert(RunId::new(*c, r), make(c, r));
            }
        }
        m
    }

    #[test]
    fn identical_spaces_everything_one() {
        let words: Vec<String> = (0..30).map(|i| format!("w{i:02}")).collect();
        let ws: Vec<&str> = words.iter().map(String::as_str).collect();
        let id: Vec<usize> = (0..30).collect();
        let spaces = spaces_for(&["a", "b"], |_, _| circle(&ws, &id));
        let conds = vec!["a".to_string(), "b".to_string()];
        let cmp = compare_conditions(&spaces, &conds, 5, &ws, &[5, 10]).unwrap();
        // 3 condition pairs x 10 run pairs x 30 words x 2 k values
        assert_eq!(cmp.records.len(), 3 * 10 * 30 * 2);
        assert!(cmp.records.iter().all(|r| r.overlap == 1.0));
        assert!(cmp.skipped.is_empty());
    }

    #[test]
    fn disjoint_structure_between_is_zero() {
        // 40 words on a circle. Condition b interleaves the two halves, so
        // every word's 5 nearest neighbors in b are words that are far away
        // from it in a.
        let words: Vec<String> = (0..40).map(|i| format!("w{i:02}")).collect();
        let ws: Vec<&str> = words.iter().map(String::as_str).collect();
        let ident: Vec<usize> = (0..40).collect();
        let shuffled: Vec<usize> = (0..40).map(|s| (s * 11) % 40).collect();
        let spaces = spaces_for(&["a", "b"], |c, _| {
            if c == "a" {
                circle(&ws, &ident)
            } else {
                circle(&ws, &shuffled)
            }
        });
        let conds = vec!["a".to_string(), "b".to_string()];
        let cmp = compare_conditions(&spaces, &conds, 5, &ws, &[5]).unwrap();
        for r in &cmp.records {
            match r.condition_type() {
                ConditionType::Within => assert_eq!(r.overlap, 1.0),
                ConditionType::Between => assert_eq!(r.overlap, 0.0, "{}", r.word),
            }
        }
    }

    #[test]
    fn missing_words_are_skipped_with_reason() {
        let a = table(&[
            ("x", vec![1.0, 0.0]),
            ("y", vec![0.0, 1.0]),
            ("z", vec![1.0, 1.0]),
        ]);
        let pair = PairId {
            a: RunId::new("a", 0),
            b: RunId::new("a", 1),
        };
        let (records, skipped) = compare_pair(&a, &a, &pair, &["x", "nope"], &[1]).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].word, "nope");
        assert!(skipped[0].reason.contains("no vector"));
    }

    #[test]
    fn missing_space_is_config_error() {
        let spaces = BTreeMap::new();
        let conds = vec!["a".to_string()];
        assert!(matches!(
            compare_conditions(&spaces, &conds, 5, &["x"], &[5]),
            Err(OverlapError::MissingSpace { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![OverlapRecord {
            word: "a,b".into(),
            pair: PairId {
                a: RunId::new("eu", 0),
                b: RunId::new("na", 1),
            },
            k: 50,
            overlap: 0.46,
        }];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "word,cond_a,run_a,cond_b,run_b,condition_type,k,overlap\n\"a,b\",eu,0,na,1,between,50,0.46\n"
        );
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
    }
}
