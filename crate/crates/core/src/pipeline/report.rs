//! Markdown summary of an output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::manifest::{Manifest, Status};

pub const REPORT_FILE: &str = "report.md";

const REQUIRED: [&str; 2] = ["stats/credible_intervals.csv", "stats/ttests.csv"];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing analysis artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),
    #[error("{path}: {message}")]
    Read { path: String, message: String },
}

/// The rendered summary and whether the run it describes is complete.
#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub problems: Vec<String>,
}

impl Report {
    pub fn is_complete(&self) -> bool {
        self.problems.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct IntervalRow {
    k: usize,
    cond_a: String,
    cond_b: String,
    n: usize,
    mean: f64,
    lo: f64,
    hi: f64,
    level: f64,
}

#[derive(Debug, Deserialize)]
struct TTestRow {
    k: usize,
    cond_a: String,
    cond_b: String,
    unit: String,
    test: String,
    n: usize,
    mean_within: f64,
    mean_between: f64,
    t: f64,
    df: f64,
    p: f64,
}

#[derive(Debug, Deserialize)]
struct CoefRow {
    factor: String,
    coefficient: f64,
    p: f64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let err = |e: csv::Error| ReportError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(err)
}

fn coef(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

/// Renders `report.md` for `dir` and writes it there. Missing statistics
/// are an error; failed runs or pairs recorded in the manifest are listed
/// as problems.
pub fn emit_report(dir: &Path) -> Result<Report, ReportError> {
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ReportError::MissingArtifacts(missing));
    }
    let manifest = Manifest::load(dir).map_err(|e| ReportError::Read {
        path: dir.join("manifest.json").display().to_string(),
        message: e.to_string(),
    })?;
    let intervals: Vec<IntervalRow> = read_csv(&dir.join(REQUIRED[0]))?;
    let tests: Vec<TTestRow> = read_csv(&dir.join(REQUIRED[1]))?;

    let mut problems = Vec::new();
    let mut conditions: Vec<String> = Vec::new();
    let mut significance = 0.01;
    let mut primary_k = intervals.iter().map(|r| r.k).max();
    if let Some(m) = &manifest {
        conditions = m.config.labels();
        significance = m.config.analysis.significance;
        primary_k = Some(m.config.primary_k());
        if m.status != Status::Complete {
            let stage = m.failed_stage.as_deref().unwrap_or("unknown");
            problems.push(format!("run is not complete (stage {stage})"));
        }
        for r in m.runs.iter().filter(|r| r.status != Status::Complete) {
            problems.push(format!(
                "training run {}#{} is {:?}",
                r.condition, r.run, r.status
            ));
        }
        for p in m.pairs.iter().filter(|p| p.status != Status::Complete) {
            problems.push(format!(
                "pair {}-{}__{}-{} at k={} is {:?}",
                p.cond_a, p.run_a, p.cond_b, p.run_b, p.k, p.status
            ));
        }
    }
    if conditions.is_empty() {
        for r in &intervals {
            for c in [&r.cond_a, &r.cond_b] {
                if !conditions.contains(c) {
                    conditions.push(c.clone());
                }
            }
        }
    }
    let k = primary_k.unwrap_or(50);

    let mut s = String::new();
    writeln!(s, "# Overlap report\n").unwrap();
    let status = if problems.is_empty() {
        "complete"
    } else {
        "INCOMPLETE"
    };
    writeln!(s, "Status: {status}\n").unwrap();
    if let Some(m) = &manifest {
        writeln!(
            s,
            "{} conditions, {} runs each, k = {:?}, master seed {}, {}.\n",
            conditions.len(),
            m.config.runs_per_condition,
            m.config.k_values,
            m.config.master_seed,
            m.software
        )
        .unwrap();
    }

    let cell: BTreeMap<(&str, &str), &IntervalRow> = intervals
        .iter()
        .filter(|r| r.k == k)
        .flat_map(|r| {
            [
                ((r.cond_a.as_str(), r.cond_b.as_str()), r),
                ((r.cond_b.as_str(), r.cond_a.as_str()), r),
            ]
        })
        .collect();
    let level = intervals.first().map_or(0.95, |r| r.level);
    writeln!(
        s,
        "## Mean overlap at k={k} (%, {:.0}% credible interval)\n",
        100.0 * level
    )
    .unwrap();
    write!(s, "| |").unwrap();
    for c in &conditions {
        write!(s, " {c} |").unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "|---|{}", "---|".repeat(conditions.len())).unwrap();
    for a in &conditions {
        write!(s, "| **{a}** |").unwrap();
        for b in &conditions {
            match cell.get(&(a.as_str(), b.as_str())) {
                Some(r) => write!(
                    s,
                    " {} [{}, {}] (n={}) |",
                    pct(r.mean),
                    pct(r.lo),
                    pct(r.hi),
                    r.n
                ),
                None => write!(s, " - |"),
            }
            .unwrap();
        }
        writeln!(s).unwrap();
    }

    writeln!(s, "\n## Within vs between conditions at k={k}\n").unwrap();
    writeln!(
        s,
        "| conditions | unit | test | n | within | between | t | df | p |"
    )
    .unwrap();
    writeln!(s, "|---|---|---|---|---|---|---|---|---|").unwrap();
    for t in tests.iter().filter(|t| t.k == k) {
        writeln!(
            s,
            "| {} vs {} | {} | {} | {} | {} | {} | {:.3} | {:.1} | {:.3e} |",
            t.cond_a,
            t.cond_b,
            t.unit,
            t.test,
            t.n,
            pct(t.mean_within),
            pct(t.mean_between),
            t.t,
            t.df,
            t.p
        )
        .unwrap();
    }

    writeln!(s, "\n## Lexical factors with p < {significance}\n").unwrap();
    let mut any_model = false;
    for c in &conditions {
        let path = dir.join(format!("stats/regression_{c}.csv"));
        if !path.is_file() {
            continue;
        }
        any_model = true;
        let rows: Vec<CoefRow> = read_csv(&path)?;
        writeln!(s, "### {c}\n").unwrap();
        let sig: Vec<&CoefRow> = rows
            .iter()
            .filter(|r| r.factor != "(Intercept)" && r.p < significance)
            .collect();
        if sig.is_empty() {
            writeln!(s, "None.\n").unwrap();
            continue;
        }
        writeln!(s, "| factor | coefficient | p |\n|---|---|---|").unwrap();
        for r in sig {
            writeln!(
                s,
                "| {} | {} | {:.2e} |",
                r.factor,
                coef(r.coefficient),
                r.p
            )
            .unwrap();
        }
        writeln!(s).unwrap();
    }
    if !any_model {
        writeln!(s, "No regression tables.\n").unwrap();
    }

    writeln!(s, "## Plot data\n").unwrap();
    let mut plots: Vec<String> = fs::read_dir(dir.join("plots"))
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| format!("plots/{}", e.file_name().to_string_lossy()))
                .collect()
        })
        .unwrap_or_default();
    plots.sort();
    if plots.is_empty() {
        writeln!(s, "None.").unwrap();
    }
    for p in &plots {
        writeln!(s, "- `{p}`").unwrap();
    }

    if let Some(m) = manifest.as_ref().filter(|m| !m.warnings.is_empty()) {
        writeln!(s, "\n## Warnings\n").unwrap();
        for w in &m.warnings {
            writeln!(s, "- {w}").unwrap();
        }
    }

    if !problems.is_empty() {
        writeln!(s, "\n## Problems\n").unwrap();
        for p in &problems {
            writeln!(s, "- {p}").unwrap();
        }
    }

    fs::write(dir.join(REPORT_FILE), &s).map_err(|e| ReportError::Read {
        path: dir.join(REPORT_FILE).display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Report { text: s, problems })
}
