//! Fixed-effects least-squares model of per-word mean overlap on the
//! comparison region and the lexical covariates.
//!
//! One model is fitted per dialect. Each row is a (word, comparison region)
//! pair. Categorical factors are dummy coded against their most frequent
//! level (ties go to the alphabetically first level). Columns that are
//! constant over the rows are dropped and listed in the table metadata.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::dist::t_two_tailed;
use super::StatsError;
use crate::lexicon::AnnotatedLexicon;

/// Relative residual norm below which a column counts as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

/// Mean overlap of one word against one comparison region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOverlap {
    pub word: String,
    pub region: String,
    pub mean_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOptions {
    /// Ascending per-million boundaries. When set, frequency enters the
    /// model as stratum dummies instead of a continuous covariate.
    pub frequency_strata: Option<Vec<f64>>,
    /// Minimum fraction of words with complete covariates (default 0.9).
    pub min_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub factor: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionTable {
    pub dialect: String,
    pub dependent: String,
    pub n: usize,
    pub df_residual: usize,
    /// Factor name → level absorbed into the intercept.
    pub reference_levels: BTreeMap<String, String>,
    pub dropped_constant: Vec<String>,
    /// Words without complete covariates, excluded from the fit.
    pub dropped_words: usize,
    pub rows: Vec<Coefficient>,
}

impl RegressionTable {
    pub fn coefficient(&self, factor: &str) -> Option<&Coefficient> {
        self.rows.iter().find(|c| c.factor == factor)
    }

    /// Rows with `p < alpha`, intercept excluded.
    pub fn significant(&self, alpha: f64) -> impl Iterator<Item = &Coefficient> {
        self.rows
            .iter()
            .filter(move |c| c.factor != INTERCEPT && c.p_value < alpha)
    }
}

pub const INTERCEPT: &str = "(Intercept)";

/// A dense design matrix with named columns.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Factor name → level absorbed into the intercept.
    pub reference_levels: BTreeMap<String, String>,
    pub dropped_constant: Vec<String>,
    pub dropped_words: usize,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub residuals: DVector<f64>,
    pub df_residual: usize,
}

fn reference_level(values: &[String]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    // BTreeMap iterates alphabetically, so max_by_key keeps the last max;
    // iterate in reverse to prefer the alphabetically first on ties.
    counts
        .iter()
        .rev()
        .max_by_key(|(_, &c)| c)
        .map(|(l, _)| l.to_string())
        .unwrap_or_default()
}

struct DesignBuilder {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    dropped_constant: Vec<String>,
    reference_levels: BTreeMap<String, String>,
}

impl DesignBuilder {
    fn push(&mut self, name: String, col: Vec<f64>) {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            self.dropped_constant.push(name);
        } else {
            self.names.push(name);
            self.columns.push(col);
        }
    }

    fn categorical(&mut self, factor: &str, values: Vec<String>) {
        let reference = reference_level(&values);
        let levels: BTreeSet<&String> = values.iter().collect();
        if levels.len() < 2 {
            self.dropped_constant.push(factor.to_string());
            return;
        }
        self.reference_levels
            .insert(factor.to_string(), reference.clone());
        for level in levels {
            if *level == reference {
                continue;
            }
            let col = values
                .iter()
                .map(|v| f64::from(u8::from(v == level)))
                .collect();
            self.push(format!("{factor}: {level}"), col);
        }
    }
}

fn stratum(per_million: f64, bounds: &[f64]) -> String {
    let i = bounds.iter().filter(|&&b| per_million >= b).count();
    match i {
        0 => format!("< {}", bounds[0]),
        i if i == bounds.len() => format!(">= {}", bounds[i - 1]),
        i => format!("[{}, {})", bounds[i - 1], bounds[i]),
    }
}

/// Builds the design for one dialect: intercept, region, domain and POS
/// dummies, concreteness, age of acquisition and frequency.
pub fn build_design(
    rows: &[RegionOverlap],
    lexicon: &AnnotatedLexicon,
    options: &ModelOptions,
) -> Result<Design, StatsError> {
    let regions: BTreeSet<&str> = rows.iter().map(|r| r.region.as_str()).collect();
    if regions.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 2 comparison regions, got {}",
            regions.len()
        )));
    }
    let words: BTreeSet<&str> = rows.iter().map(|r| r.word.as_str()).collect();
    let complete = |w: &str| lexicon.get(w).is_some_and(|e| e.aoa.is_some());
    let usable = words.iter().filter(|w| complete(w)).count();
    let dropped_words = words.len() - usable;
    let coverage = usable as f64 / words.len().max(1) as f64;
    let min_coverage = options.min_coverage.unwrap_or(0.9);
    if coverage < min_coverage {
        return Err(StatsError::InsufficientCoverage {
            coverage,
            required: min_coverage,
        });
    }
    let kept: Vec<&RegionOverlap> = rows.iter().filter(|r| complete(&r.word)).collect();
    let n = kept.len();
    let entry = |r: &RegionOverlap| lexicon.get(&r.word).expect("filtered above");

    let mut b = DesignBuilder {
        names: vec![INTERCEPT.to_string()],
        columns: vec![vec![1.0; n]],
        dropped_constant: Vec::new(),
        reference_levels: BTreeMap::new(),
    };
    b.categorical("region", kept.iter().map(|r| r.region.clone()).collect());
    b.categorical(
        "domain",
        kept.iter().map(|r| entry(r).domain.to_string()).collect(),
    );
    b.categorical(
        "pos",
        kept.iter().map(|r| entry(r).pos.to_string()).collect(),
    );
    b.push(
        "concreteness".into(),
        kept.iter().map(|r| entry(r).concreteness).collect(),
    );
    b.push(
        "aoa".into(),
        kept.iter()
            .map(|r| entry(r).aoa.expect("filtered"))
            .collect(),
    );
    match &options.frequency_strata {
        Some(bounds) if !bounds.is_empty() => b.categorical(
            "frequency",
            kept.iter()
                .map(|r| stratum(entry(r).per_million, bounds))
                .collect(),
        ),
        _ => b.push(
            "per_million".into(),
            kept.iter().map(|r| entry(r).per_million).collect(),
        ),
    }

    let p = b.columns.len();
    let x = DMatrix::from_fn(n, p, |i, j| b.columns[j][i]);
    let y = DVector::from_iterator(n, kept.iter().map(|r| r.mean_overlap));
    Ok(Design {
        names: b.names,
        x,
        y,
        reference_levels: b.reference_levels,
        dropped_constant: b.dropped_constant,
        dropped_words,
    })
}

/// Finds the first column that is (numerically) a linear combination of
/// the columns before it; returns it with the columns it depends on.
fn collinear_column(design: &Design) -> Option<(String, Vec<String>)> {
    let n = design.x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..design.x.ncols() {
        let col = design.x.column(j).into_owned();
        let norm0 = col.norm();
        let mut r = col.clone();
        for q in &basis {
            let c = q.dot(&r);
            r -= q * c;
        }
        let rn = r.norm();
        if norm0 == 0.0 || rn <= COLLINEAR_TOL * norm0 {
            let prev = design.x.columns(0, j).into_owned();
            let coef = prev
                .clone()
                .svd(true, true)
                .solve(&col, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(j));
            let deps = (0..j)
                .filter(|&i| coef[i].abs() > 1e-8)
                .map(|i| design.names[i].clone())
                .collect();
            return Some((design.names[j].clone(), deps));
        }
        basis.push(r / rn);
        if basis.len() > n {
            break;
        }
    }
    None
}

/// Ordinary least squares with classical standard errors.
pub fn ols(design: &Design) -> Result<OlsFit, StatsError> {
    let (n, p) = design.x.shape();
    if n <= p {
        return Err(StatsError::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    if let Some((column, depends_on)) = collinear_column(design) {
        return Err(StatsError::RankDeficient { column, depends_on });
    }
    let qr = design.x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &design.y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::RankDeficient {
            column: "(unknown)".into(),
            depends_on: Vec::new(),
        })?;
    let residuals = &design.y - &design.x * &coefficients;
    let df_residual = n - p;
    let sigma2 = residuals.norm_squared() / df_residual as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("full rank");
    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ; its diagonal is the squared row norms of R⁻¹
    let std_errors = DVector::from_iterator(
        p,
        (0..p).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt()),
    );
    Ok(OlsFit {
        coefficients,
        std_errors,
        residuals,
        df_residual,
    })
}

/// Fits the per-dialect lexical model and returns a Table-6 style table.
pub fn fit_lexical_model(
    rows: &[RegionOverlap],
    lexicon: &AnnotatedLexicon,
    dialect: &str,
    options: &ModelOptions,
) -> Result<RegressionTable, StatsError> {
    let design = build_design(rows, lexicon, options)?;
    let fit = ols(&design)?;
    let df = fit.df_residual as f64;
    let rows = design
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let b = fit.coefficients[j];
            let se = fit.std_errors[j];
            let (t, p) = if se > 0.0 {
                let t = b / se;
                (t, t_two_tailed(t, df))
            } else if b == 0.0 {
                (0.0, 1.0)
            } else {
                (f64::INFINITY.copysign(b), 0.0)
            };
            Coefficient {
                factor: name.clone(),
                coefficient: b,
                std_error: se,
                t,
                p_value: p,
            }
        })
        .collect();
    Ok(RegressionTable {
        dialect: dialect.to_string(),
        dependent: "mean overlap".into(),
        n: design.x.nrows(),
        df_residual: fit.df_residual,
        reference_levels: design.reference_levels,
        dropped_constant: design.dropped_constant,
        dropped_words: design.dropped_words,
        rows,
    })
}

/// Averages overlap per (word, region) from `(word, region, overlap)` triples.
pub fn mean_by_word_region<'a, I>(triples: I) -> Vec<RegionOverlap>
where
    I: IntoIterator<Item = (&'a str, &'a str, f64)>,
{
    let mut acc: HashMap<(&str, &str), (f64, usize)> = HashMap::new();
    for (w, r, v) in triples {
        let slot = acc.entry((w, r)).or_default();
        slot.0 += v;
        slot.1 += 1;
    }
    let mut out: Vec<RegionOverlap> = acc
        .into_iter()
        .map(|((w, r), (s, n))| RegionOverlap {
            word: w.to_string(),
            region: r.to_string(),
            mean_overlap: s / n as f64,
        })
        .collect();
    out.sort_by(|a, b| (&a.region, &a.word).cmp(&(&b.region, &b.word)));
    out
}

/// CSV `dialect,factor,coefficient,std_error,t,p`.
pub fn write_table_csv<W: Write>(tables: &[RegressionTable], mut out: W) -> io::Result<()> {
    writeln!(out, "dialect,factor,coefficient,std_error,t,p")?;
    for t in tables {
        for c in &t.rows {
            writeln!(
                out,
                "{},\"{}\",{:.6},{:.6},{:.4},{:.6e}",
                t.dialect, c.factor, c.coefficient, c.std_error, c.t, c.p_value
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{ConcretenessBin, Domain, LexiconEntry, Pos};

    fn entry(word: &str, conc: f64, aoa: f64, domain: Domain, pos: Pos, freq: f64) -> LexiconEntry {
        LexiconEntry {
            word: word.into(),
            concreteness: conc,
            aoa: Some(aoa),
            pos,
            domain,
            per_million: freq,
            bin: ConcretenessBin::of(conc).unwrap(),
        }
    }

    #[test]
    fn reference_is_most_frequent_then_alphabetical() {
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(reference_level(&v(&["b", "a", "b"])), "b");
        assert_eq!(reference_level(&v(&["b", "a"])), "a");
    }

    #[test]
    fn noiseless_concreteness_recovered_exactly() {
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        for i in 0..30 {
            let conc = 1.0 + (i as f64) * 4.0 / 29.0;
            let w = format!("w{i}");
            entries.push(entry(&w, conc, 7.0, Domain::Time, Pos::Noun, 3.0));
            for region in ["a", "b"] {
                rows.push(RegionOverlap {
                    word: w.clone(),
                    region: region.into(),
                    mean_overlap: 2.0 * conc,
                });
            }
        }
        let lex = AnnotatedLexicon::from_entries(entries).unwrap();
        let t = fit_lexical_model(&rows, &lex, "a", &ModelOptions::default()).unwrap();
        let c = t.coefficient("concreteness").unwrap();
        assert!((c.coefficient - 2.0).abs() < 1e-10);
        assert!(t.coefficient("aoa").is_none());
        for dropped in ["domain", "pos", "aoa", "per_million"] {
            assert!(t.dropped_constant.iter().any(|d| d == dropped), "{dropped}");
        }
        assert_eq!(t.reference_levels["region"], "a");
        assert!(t.coefficient("region: b").unwrap().coefficient.abs() < 1e-10);
    }

    #[test]
    fn collinear_columns_are_named() {
        // aoa = 2 * concreteness exactly
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        for i in 0..20 {
            let conc = 1.0 + i as f64 * 0.2;
            let w = format!("w{i}");
            entries.push(entry(&w, conc, 2.0 * conc, Domain::Time, Pos::Noun, 1.0));
            for region in ["a", "b"] {
                rows.push(RegionOverlap {
                    word: w.clone(),
                    region: region.into(),
                    mean_overlap: 0.1 * i as f64 + if region == "a" { 0.2 } else { 0.0 },
                });
            }
        }
        let lex = AnnotatedLexicon::from_entries(entries).unwrap();
        match fit_lexical_model(&rows, &lex, "a", &ModelOptions::default()) {
            Err(StatsError::RankDeficient { column, depends_on }) => {
                assert_eq!(column, "aoa");
                assert_eq!(depends_on, vec!["concreteness".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_two_regions_and_coverage() {
        let lex = AnnotatedLexicon::from_entries(vec![entry(
            "w",
            2.0,
            5.0,
            Domain::Time,
            Pos::Noun,
            1.0,
        )])
        .unwrap();
        let rows = vec![RegionOverlap {
            word: "w".into(),
            region: "a".into(),
            mean_overlap: 0.5,
        }];
        assert!(matches!(
            fit_lexical_model(&rows, &lex, "a", &ModelOptions::default()),
            Err(StatsError::InsufficientData(_))
        ));
        let rows: Vec<RegionOverlap> = ["w", "x", "y"]
            .iter()
            .flat_map(|w| {
                ["a", "b"].map(|r| RegionOverlap {
                    word: w.to_string(),
                    region: r.into(),
                    mean_overlap: 0.5,
                })
            })
            .collect();
        assert!(matches!(
            fit_lexical_model(&rows, &lex, "a", &ModelOptions::default()),
            Err(StatsError::InsufficientCoverage { .. })
        ));
    }

    #[test]
    fn frequency_strata_become_dummies() {
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        for i in 0..40 {
            let w = format!("w{i}");
            let freq = [0.5, 5.0, 50.0][i % 3];
            entries.push(entry(
                &w,
                1.0 + (i % 7) as f64 * 0.5,
                4.0 + (i % 5) as f64,
                Domain::Time,
                Pos::Noun,
                freq,
            ));
            for region in ["a", "b"] {
                rows.push(RegionOverlap {
                    word: w.clone(),
                    region: region.into(),
                    mean_overlap: 0.3
                        + 0.01 * ((i * 7) % 11) as f64
                        + if freq > 10.0 { 0.2 } else { 0.0 },
                });
            }
        }
        let lex = AnnotatedLexicon::from_entries(entries).unwrap();
        let opts = ModelOptions {
            frequency_strata: Some(vec![1.0, 10.0]),
            ..Default::default()
        };
        let t = fit_lexical_model(&rows, &lex, "a", &opts).unwrap();
        assert!(t.coefficient("per_million").is_none());
        assert!(t.rows.iter().any(|c| c.factor.starts_with("frequency: ")));
    }

    #[test]
    fn mean_by_word_region_averages() {
        let rows = mean_by_word_region([("x", "a", 0.2), ("x", "a", 0.4), ("x", "b", 1.0)]);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].mean_overlap - 0.3).abs() < 1e-12);
    }
}
