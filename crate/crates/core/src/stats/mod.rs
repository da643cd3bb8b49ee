//! Paired t-tests, Bayesian credible intervals, correlations and the
//! fixed-effects lexical regression.

pub mod dist;
mod inference;
mod regression;

pub use inference::{
    bayes_mean_ci, paired_t_test, pearson, welch_t_test, Correlation, CredibleInterval,
    TTestResult, WelchResult,
};
pub use regression::{
    build_design, fit_lexical_model, mean_by_word_region, ols, write_table_csv, Coefficient,
    Design, ModelOptions, OlsFit, RegionOverlap, RegressionTable, INTERCEPT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("differences have zero variance but nonzero mean")]
    DegenerateVariance,
    #[error("credible level {0} is not in (0, 1)")]
    InvalidLevel(f64),
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("only {coverage:.3} of words have complete covariates (need {required})")]
    InsufficientCoverage { coverage: f64, required: f64 },
    #[error("design is rank deficient: column `{column}` is a combination of {depends_on:?}")]
    RankDeficient {
        column: String,
        depends_on: Vec<String>,
    },
}
