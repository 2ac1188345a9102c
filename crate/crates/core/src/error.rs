use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient b_{index} is negative")]
    NegativeCoefficient { index: usize },
    #[error("series is constant: no positive coefficient of positive index")]
    ConstantSeries,
    #[error("nonzero constant term b_0; exact exponentiation needs b_0 = 0, use the evaluator instead")]
    NonzeroConstantTerm,
    #[error("zero constant term; the logarithm is undefined")]
    ZeroConstantTerm,
    #[error("coefficient b_{index} is inexact; exact arithmetic required")]
    InexactCoefficient { index: usize },
    #[error("unknown builtin series `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("point t = {t} is outside (0, {radius})")]
    Domain { t: String, radius: String },
    #[error("series truncated at {available} terms but the tail is not negligible at t = {t}")]
    TruncationInsufficient { t: String, available: usize },
    #[error("coefficients of f needed up to {needed} but only {available} are available")]
    CoefficientRangeExhausted { needed: usize, available: usize },
    #[error("g''(t) vanishes at t = {t}")]
    DegenerateSecondDerivative { t: String },
    #[error("non-finite value while summing over the circle at t = {t}")]
    NumericOverflow { t: String },
    #[error("the mean appears bounded: m(t) stalls near {ceiling} while n = {n}")]
    MeanBounded { n: u64, ceiling: String },
    #[error("saddle solver did not converge for n = {n} after {iterations} iterations")]
    NoConvergence { n: u64, iterations: usize },
    #[error("cut exponent {alpha} is outside the admissible window ({lo}, {hi})")]
    CutOutsideWindow { alpha: f64, lo: f64, hi: f64 },
    #[error("criterion inapplicable: {0}")]
    Inapplicable(String),
    #[error("not a polynomial")]
    NotPolynomial,
    #[error("memory budget of {budget} bytes exceeded (needs about {needed})")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("value {0} is not an integer")]
    NotIntegral(String),
    #[error("scheme inverse undefined at n = {0}")]
    SchemeUndefined(u64),
    #[error("window [{lo}, {hi}] is not inside the truncation 1..={n}")]
    BadWindow { lo: usize, hi: usize, n: usize },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Stable machine-readable name used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeCoefficient { .. } => "negative_coefficient",
            Error::ConstantSeries => "constant_series",
            Error::NonzeroConstantTerm => "nonzero_constant_term",
            Error::ZeroConstantTerm => "zero_constant_term",
            Error::InexactCoefficient { .. } => "inexact_coefficient",
            Error::UnknownBuiltin(_) => "unknown_builtin",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
            Error::Domain { .. } => "domain",
            Error::TruncationInsufficient { .. } => "truncation_insufficient",
            Error::CoefficientRangeExhausted { .. } => "coefficient_range_exhausted",
            Error::DegenerateSecondDerivative { .. } => "degenerate_second_derivative",
            Error::NumericOverflow { .. } => "numeric_overflow",
            Error::MeanBounded { .. } => "mean_bounded",
            Error::NoConvergence { .. } => "no_convergence",
            Error::CutOutsideWindow { .. } => "cut_outside_window",
            Error::Inapplicable(_) => "inapplicable",
            Error::NotPolynomial => "not_polynomial",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NotIntegral(_) => "not_integral",
            Error::SchemeUndefined(_) => "scheme_undefined",
            Error::BadWindow { .. } => "bad_window",
            Error::Usage(_) => "usage",
        }
    }
}
