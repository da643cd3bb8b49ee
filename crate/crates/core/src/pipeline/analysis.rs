//! Statistics and plot data computed from overlap records.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::AnalysisConfig;
use crate::lexicon::AnnotatedLexicon;
use crate::overlap::{condition_pairs, schedule_pairs, ConditionType, OverlapRecord, PairId};
use crate::stats::{
    bayes_mean_ci, fit_lexical_model, mean_by_word_region, paired_t_test, pearson, welch_t_test,
    write_table_csv, ModelOptions, RegressionTable, StatsError,
};

/// Overlap records grouped by k and condition pair.
pub struct RecordIndex<'a> {
    groups: BTreeMap<(usize, &'a str, &'a str), Vec<&'a OverlapRecord>>,
}

impl<'a> RecordIndex<'a> {
    pub fn new(records: &'a [OverlapRecord]) -> Self {
        let mut groups: BTreeMap<_, Vec<&OverlapRecord>> = BTreeMap::new();
        for r in records {
            groups
                .entry((
                    r.k,
                    r.pair.a.condition.as_str(),
                    r.pair.b.condition.as_str(),
                ))
                .or_default()
                .push(r);
        }
        RecordIndex { groups }
    }

    /// Records of one condition pair in either orientation.
    pub fn get(&self, k: usize, a: &str, b: &str) -> Vec<&'a OverlapRecord> {
        let mut out = self.groups.get(&(k, a, b)).cloned().unwrap_or_default();
        if a != b {
            if let Some(rev) = self.groups.get(&(k, b, a)) {
                out.extend(rev);
            }
        }
        out
    }

    /// Mean overlap per scheduled pair, in schedule order; pairs without
    /// records are left out.
    pub fn pair_means(&self, k: usize, a: &str, b: &str, runs: usize) -> Vec<f64> {
        let mut sums: BTreeMap<&PairId, (f64, usize)> = BTreeMap::new();
        for r in self.get(k, a, b) {
            let slot = sums.entry(&r.pair).or_default();
            slot.0 += r.overlap;
            slot.1 += 1;
        }
        let Ok(schedule) = schedule_pairs(runs, a, b) else {
            return Vec::new();
        };
        schedule
            .pairs
            .iter()
            .filter_map(|p| {
                let flipped = PairId {
                    a: p.b.clone(),
                    b: p.a.clone(),
                };
                sums.get(p).or_else(|| sums.get(&flipped))
            })
            .map(|(s, n)| s / *n as f64)
            .collect()
    }

    /// Mean overlap per word across all pairs of the given condition pairs.
    pub fn word_means(&self, k: usize, pairs: &[(&str, &str)]) -> BTreeMap<&'a str, f64> {
        let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for (a, b) in pairs {
            for r in self.get(k, a, b) {
                let slot = acc.entry(r.word.as_str()).or_default();
                slot.0 += r.overlap;
                slot.1 += 1;
            }
        }
        acc.into_iter()
            .map(|(w, (s, n))| (w, s / n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestRow {
    pub k: usize,
    pub cond_a: String,
    pub cond_b: String,
    /// `pair`: one observation per scheduled pair (vocabulary means).
    /// `word`: one observation per word (means over pairs).
    pub unit: String,
    pub test: String,
    pub n: usize,
    pub mean_within: f64,
    pub mean_between: f64,
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ttest_row(
    k: usize,
    a: &str,
    b: &str,
    unit: &str,
    within: &[f64],
    between: &[f64],
) -> Option<TTestRow> {
    if within.len() < 2 || between.len() < 2 {
        return None;
    }
    let paired = within.len() == between.len();
    let (t, df, p) = if paired {
        match paired_t_test(within, between) {
            Ok(r) => (r.t, r.df as f64, r.p_two_tailed),
            Err(_) => {
                let d = mean(within) - mean(between);
                (f64::INFINITY.copysign(d), (within.len() - 1) as f64, 0.0)
            }
        }
    } else {
        match welch_t_test(within, between) {
            Ok(r) => (r.t, r.df, r.p_two_tailed),
            Err(_) => {
                let d = mean(within) - mean(between);
                (f64::INFINITY.copysign(d), f64::NAN, 0.0)
            }
        }
    };
    let (mw, mb) = (mean(within), mean(between));
    Some(TTestRow {
        k,
        cond_a: a.to_string(),
        cond_b: b.to_string(),
        unit: unit.to_string(),
        test: if paired { "paired" } else { "welch" }.to_string(),
        n: within.len(),
        mean_within: mw,
        mean_between: mb,
        mean_diff: mw - mb,
        t,
        df,
        p,
    })
}

/// Within- versus between-condition tests for every pair of distinct
/// conditions. Within observations average both conditions' own pairs, so
/// each run weighs equally on both sides of the comparison.
pub fn ttest_rows(
    index: &RecordIndex,
    conditions: &[String],
    runs: usize,
    ks: &[usize],
) -> Vec<TTestRow> {
    let mut rows = Vec::new();
    for &k in ks {
        for (a, b) in condition_pairs(conditions) {
            if a == b {
                continue;
            }
            let (a, b) = (a.as_str(), b.as_str());
            let wa = index.pair_means(k, a, a, runs);
            let wb = index.pair_means(k, b, b, runs);
            let between = index.pair_means(k, a, b, runs);
            if wa.len() == wb.len() {
                let within: Vec<f64> = wa.iter().zip(&wb).map(|(x, y)| (x + y) / 2.0).collect();
                rows.extend(ttest_row(k, a, b, "pair", &within, &between));
            }

            let within = index.word_means(k, &[(a, a), (b, b)]);
            let between = index.word_means(k, &[(a, b)]);
            let (x, y): (Vec<f64>, Vec<f64>) = within
                .iter()
                .filter_map(|(w, &v)| between.get(w).map(|&u| (v, u)))
                .unzip();
            rows.extend(ttest_row(k, a, b, "word", &x, &y));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow {
    pub k: usize,
    pub cond_a: String,
    pub cond_b: String,
    pub condition_type: ConditionType,
    pub n: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Credible interval of the mean overlap over all words and pairs of each
/// condition pair.
pub fn interval_rows(
    index: &RecordIndex,
    conditions: &[String],
    ks: &[usize],
    level: f64,
) -> Vec<IntervalRow> {
    let mut rows = Vec::new();
    for &k in ks {
        for (a, b) in condition_pairs(conditions) {
            let values: Vec<f64> = index.get(k, &a, &b).iter().map(|r| r.overlap).collect();
            if values.is_empty() {
                continue;
            }
            let m = mean(&values);
            let (lo, hi) = match bayes_mean_ci(&values, level) {
                Ok(ci) => (ci.lo, ci.hi),
                Err(_) => (m, m),
            };
            rows.push(IntervalRow {
                k,
                condition_type: if a == b {
                    ConditionType::Within
                } else {
                    ConditionType::Between
                },
                cond_a: a,
                cond_b: b,
                n: values.len(),
                mean: m,
                lo,
                hi,
                level,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub cond_a: String,
    pub cond_b: String,
    pub k_a: usize,
    pub k_b: usize,
    pub n: usize,
    pub r: f64,
    pub p: f64,
}

/// Mean overlap per (comparison, word) at one k.
fn comparison_word_means<'a>(
    records: &[&'a OverlapRecord],
    k: usize,
) -> BTreeMap<(&'a str, &'a str, &'a str), f64> {
    let mut acc: BTreeMap<(&str, &str, &str), (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.k == k) {
        let key = (
            r.pair.a.condition.as_str(),
            r.pair.b.condition.as_str(),
            r.word.as_str(),
        );
        let slot = acc.entry(key).or_default();
        slot.0 += r.overlap;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(key, (s, n))| (key, s / n as f64))
        .collect()
}

fn correlate(records: &[&OverlapRecord], ka: usize, kb: usize) -> Option<(usize, f64, f64)> {
    let at_b = comparison_word_means(records, kb);
    let (x, y): (Vec<f64>, Vec<f64>) = comparison_word_means(records, ka)
        .into_iter()
        .filter_map(|(key, v)| at_b.get(&key).map(|&u| (v, u)))
        .unzip();
    match pearson(&x, &y) {
        Ok(c) => Some((c.n, c.r, c.p)),
        Err(StatsError::ConstantInput) => Some((x.len(), f64::NAN, f64::NAN)),
        Err(_) => None,
    }
}

/// Pearson r between per-word mean overlaps (over a comparison's pairs) at
/// two k values, per condition pair and pooled over all comparisons
/// (`all`, `all`).
pub fn correlation_rows(
    records: &[OverlapRecord],
    conditions: &[String],
    ks: &[usize],
) -> Vec<CorrelationRow> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut groups: Vec<(String, String, Vec<&OverlapRecord>)> = condition_pairs(conditions)
        .into_iter()
        .map(|(a, b)| {
            let rs = records
                .iter()
                .filter(|r| {
                    let (x, y) = (&r.pair.a.condition, &r.pair.b.condition);
                    (x == &a && y == &b) || (x == &b && y == &a)
                })
                .collect();
            (a, b, rs)
        })
        .collect();
    groups.push(("all".into(), "all".into(), records.iter().collect()));
    let mut rows = Vec::new();
    for (a, b, rs) in &groups {
        for (i, &ka) in ks.iter().enumerate() {
            for &kb in &ks[i + 1..] {
                if let Some((n, r, p)) = correlate(rs, ka, kb) {
                    rows.push(CorrelationRow {
                        cond_a: a.clone(),
                        cond_b: b.clone(),
                        k_a: ka,
                        k_b: kb,
                        n,
                        r,
                        p,
                    });
                }
            }
        }
    }
    rows
}

/// Regression per dialect at one k. Comparison regions are all conditions,
/// the dialect itself included (its within-condition stability).
pub fn regressions(
    index: &RecordIndex,
    lexicon: &AnnotatedLexicon,
    conditions: &[String],
    k: usize,
    options: &ModelOptions,
) -> Vec<(String, Result<RegressionTable, StatsError>)> {
    conditions
        .iter()
        .map(|dialect| {
            let mut triples = Vec::new();
            for region in conditions {
                for r in index.get(k, dialect, region) {
                    triples.push((r.word.as_str(), region.as_str(), r.overlap));
                }
            }
            let rows = mean_by_word_region(triples);
            (
                dialect.clone(),
                fit_lexical_model(&rows, lexicon, dialect, options),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub cond_a: String,
    pub cond_b: String,
    pub condition_type: ConditionType,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolinRow {
    pub cond_a: String,
    pub cond_b: String,
    pub condition_type: ConditionType,
    pub n: usize,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
    pub mean: f64,
}

/// Counts of `values` in `bins` equal-width bins on [0, 1]; 1.0 falls in
/// the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        let i = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn distribution_rows(
    index: &RecordIndex,
    conditions: &[String],
    k: usize,
    bins: usize,
) -> (Vec<HistogramRow>, Vec<ViolinRow>) {
    let mut hist = Vec::new();
    let mut violin = Vec::new();
    for (a, b) in condition_pairs(conditions) {
        let mut values: Vec<f64> = index
            .word_means(k, &[(a.as_str(), b.as_str())])
            .into_values()
            .collect();
        if values.is_empty() {
            continue;
        }
        values.sort_by(f64::total_cmp);
        let ct = if a == b {
            ConditionType::Within
        } else {
            ConditionType::Between
        };
        for (i, count) in histogram(&values, bins).into_iter().enumerate() {
            hist.push(HistogramRow {
                cond_a: a.clone(),
                cond_b: b.clone(),
                condition_type: ct,
                bin: i,
                lo: i as f64 / bins as f64,
                hi: (i + 1) as f64 / bins as f64,
                count,
            });
        }
        violin.push(ViolinRow {
            cond_a: a.clone(),
            cond_b: b.clone(),
            condition_type: ct,
            n: values.len(),
            min: values[0],
            q05: quantile(&values, 0.05),
            q25: quantile(&values, 0.25),
            median: quantile(&values, 0.5),
            q75: quantile(&values, 0.75),
            q95: quantile(&values, 0.95),
            max: values[values.len() - 1],
            mean: mean(&values),
        });
    }
    (hist, violin)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

/// Files written and non-fatal problems.
#[derive(Debug, Default)]
pub struct AnalysisOutput {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

pub struct AnalysisInput<'a> {
    pub records: &'a [OverlapRecord],
    pub lexicon: &'a AnnotatedLexicon,
    pub conditions: &'a [String],
    pub runs: usize,
    pub ks: &'a [usize],
    pub primary_k: usize,
    pub config: &'a AnalysisConfig,
}

/// Writes `stats/` and `plots/` below `dir`.
pub fn analyze(input: &AnalysisInput, dir: &Path) -> io::Result<AnalysisOutput> {
    let mut warnings = Vec::new();
    fs::create_dir_all(dir.join("stats"))?;
    fs::create_dir_all(dir.join("plots"))?;
    // A fixed record order keeps floating-point sums identical whether the
    // records come from memory or from the overlap CSVs.
    let mut records = input.records.to_vec();
    records.sort_by(|x, y| (x.k, &x.pair, &x.word).cmp(&(y.k, &y.pair, &y.word)));
    let records = &records[..];
    let index = RecordIndex::new(records);
    let mut ks = input.ks.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let mut files = Vec::new();
    let mut emit = |rel: String, write: &dyn Fn(&Path) -> io::Result<()>| -> io::Result<()> {
        write(&dir.join(&rel))?;
        files.push(rel);
        Ok(())
    };

    let tt = ttest_rows(&index, input.conditions, input.runs, &ks);
    emit("stats/ttests.csv".into(), &|p| write_csv(p, &tt))?;
    let ci = interval_rows(&index, input.conditions, &ks, input.config.credible_level);
    emit("stats/credible_intervals.csv".into(), &|p| {
        write_csv(p, &ci)
    })?;
    let kc = correlation_rows(records, input.conditions, &ks);
    emit("stats/k_correlation.csv".into(), &|p| write_csv(p, &kc))?;

    let options = ModelOptions {
        frequency_strata: input.config.frequency_strata.clone(),
        min_coverage: Some(input.config.min_coverage),
    };
    let mut tables = Vec::new();
    for (dialect, fit) in regressions(
        &index,
        input.lexicon,
        input.conditions,
        input.primary_k,
        &options,
    ) {
        match fit {
            Ok(table) => {
                let rel = format!("stats/regression_{dialect}.csv");
                emit(rel, &|p| {
                    write_table_csv(std::slice::from_ref(&table), fs::File::create(p)?)
                })?;
                tables.push(table);
            }
            Err(e) => warnings.push(format!("regression for {dialect} not fitted: {e}")),
        }
    }
    emit("stats/regression_models.json".into(), &|p| {
        let text = serde_json::to_string_pretty(&tables).map_err(io::Error::other)?;
        fs::write(p, text + "\n")
    })?;

    for &k in &ks {
        let (hist, violin) =
            distribution_rows(&index, input.conditions, k, input.config.histogram_bins);
        emit(format!("plots/histogram_k{k}.csv"), &|p| {
            write_csv(p, &hist)
        })?;
        emit(format!("plots/violin_k{k}.csv"), &|p| write_csv(p, &violin))?;
    }
    Ok(AnalysisOutput { files, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlap::RunId;

    fn rec(
        word: &str,
        a: (&str, usize),
        b: (&str, usize),
        k: usize,
        overlap: f64,
    ) -> OverlapRecord {
        OverlapRecord {
            word: word.into(),
            pair: PairId {
                a: RunId::new(a.0, a.1),
                b: RunId::new(b.0, b.1),
            },
            k,
            overlap,
        }
    }

    #[test]
    fn histogram_edges() {
        assert_eq!(histogram(&[0.0, 0.5, 0.99, 1.0], 2), vec![1, 3]);
        assert_eq!(histogram(&[0.0, 0.02, 1.0], 50)[0], 1);
        assert_eq!(histogram(&[0.0, 0.02, 1.0], 50)[1], 1);
        assert_eq!(histogram(&[0.0, 0.02, 1.0], 50)[49], 1);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn pair_means_follow_schedule_order() {
        let records = vec![
            rec("x", ("a", 1), ("a", 2), 5, 0.2),
            rec("x", ("a", 0), ("a", 1), 5, 0.6),
            rec("y", ("a", 0), ("a", 1), 5, 0.8),
            rec("x", ("a", 0), ("a", 2), 5, 0.4),
        ];
        let index = RecordIndex::new(&records);
        let m = index.pair_means(5, "a", "a", 3);
        assert_eq!(m.len(), 3);
        assert!((m[0] - 0.7).abs() < 1e-12);
        assert!((m[1] - 0.4).abs() < 1e-12);
        assert!((m[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn identical_within_and_between_is_not_significant() {
        let conditions = vec!["a".to_string(), "b".to_string()];
        let mut records = Vec::new();
        for (ca, cb) in condition_pairs(&conditions) {
            for p in schedule_pairs(5, &ca, &cb).unwrap().pairs {
                for (i, w) in ["u", "v", "w"].iter().enumerate() {
                    records.push(OverlapRecord {
                        word: w.to_string(),
                        pair: p.clone(),
                        k: 10,
                        overlap: 0.25 * (i + 1) as f64,
                    });
                }
            }
        }
        let index = RecordIndex::new(&records);
        let rows = ttest_rows(&index, &conditions, 5, &[10]);
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.p, 1.0);
            assert_eq!(r.t, 0.0);
        }
        let ci = interval_rows(&index, &conditions, &[10], 0.95);
        assert_eq!(ci.len(), 3);
        assert!((ci[0].mean - 0.5).abs() < 1e-12);
        let kc = correlation_rows(&records, &conditions, &[10]);
        assert!(kc.is_empty());
    }
}
