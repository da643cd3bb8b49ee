use serde::Serialize;

use super::dist::{t_quantile, t_two_tailed};
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
    /// Mean of `x - y`.
    pub mean_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CredibleInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
fn sample_sd(v: &[f64], m: f64) -> f64 {
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Paired t-test on `d = x - y` with `n - 1` degrees of freedom.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: x.len(),
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len();
    let m = mean(&d);
    let sd = sample_sd(&d, m);
    if sd == 0.0 {
        if m == 0.0 {
            return Ok(TTestResult {
                t: 0.0,
                df: n - 1,
                p_two_tailed: 1.0,
                mean_diff: 0.0,
            });
        }
        return Err(StatsError::DegenerateVariance);
    }
    let t = m / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        t,
        df: n - 1,
        p_two_tailed: t_two_tailed(t, (n - 1) as f64),
        mean_diff: m,
    })
}

/// Welch's unequal-variance two-sample t-test of `mean(x) - mean(y)`,
/// with Welch–Satterthwaite degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_two_tailed: f64,
    pub mean_diff: f64,
}

pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<WelchResult, StatsError> {
    for v in [x, y] {
        if v.len() < 2 {
            return Err(StatsError::TooFew {
                need: 2,
                got: v.len(),
            });
        }
    }
    let (mx, my) = (mean(x), mean(y));
    let vx = sample_sd(x, mx).powi(2) / x.len() as f64;
    let vy = sample_sd(y, my).powi(2) / y.len() as f64;
    let se2 = vx + vy;
    let diff = mx - my;
    if se2 == 0.0 {
        if diff == 0.0 {
            return Ok(WelchResult {
                t: 0.0,
                df: (x.len() + y.len() - 2) as f64,
                p_two_tailed: 1.0,
                mean_diff: 0.0,
            });
        }
        return Err(StatsError::DegenerateVariance);
    }
    let df = se2 * se2 / (vx * vx / (x.len() - 1) as f64 + vy * vy / (y.len() - 1) as f64);
    let t = diff / se2.sqrt();
    Ok(WelchResult {
        t,
        df,
        p_two_tailed: t_two_tailed(t, df),
        mean_diff: diff,
    })
}

/// Posterior interval for a normal mean under the Jeffreys prior: the
/// posterior is Student-t, so the interval is `mean ± t_{(1+level)/2, n-1} s/√n`.
pub fn bayes_mean_ci(values: &[f64], level: f64) -> Result<CredibleInterval, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFew { need: 2, got: n });
    }
    let m = mean(values);
    let sd = sample_sd(values, m);
    if sd == 0.0 || !sd.is_finite() {
        return Err(StatsError::DegenerateVariance);
    }
    let half = t_quantile((1.0 + level) / 2.0, (n - 1) as f64) * sd / (n as f64).sqrt();
    Ok(CredibleInterval {
        mean: m,
        lo: m - half,
        hi: m + half,
        level,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with a two-tailed p from `t = r √((n-2)/(1-r²))`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_tailed(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p, n })
}
