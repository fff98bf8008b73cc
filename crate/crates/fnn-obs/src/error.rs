//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must contain only finite values (found NaN or infinity)")]
    NonFinite { what: &'static str },

    #[error("{what} must have at least one row and one column")]
    Empty { what: &'static str },

    #[error("dimension mismatch in {context}: expected {expected}, found {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error(
        "weight matrix is numerically singular: rank {rank} < {expected} \
         (condition estimate {condition:.3e})"
    )]
    SingularWeights {
        rank: usize,
        expected: usize,
        condition: f64,
    },

    #[error("input design requires m = n; this weight matrix has m = {m} rows, n = {n} columns")]
    NonSquareWeights { m: usize, n: usize },

    #[error("invalid design template: {0}")]
    InvalidTemplate(#[from] crate::input_design::TemplateViolation),

    #[error("magnitude range must satisfy 0 < lo < hi, got ({lo}, {hi})")]
    InvalidMagnitudeRange { lo: f64, hi: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SolveResidual { residual: f64, tol: f64 },

    #[error(
        "designed input failed its indicator postcondition at sequence row {row}, \
         hidden node {col}"
    )]
    IndicatorPostcondition { row: usize, col: usize },

    #[error("designed input failed the rank condition: rank {rank} < {expected}")]
    DesignRankPostcondition { rank: usize, expected: usize },

    #[error("rank condition does not hold at the base state: rank {rank} < {expected}")]
    RankConditionFailed { rank: usize, expected: usize },

    #[error("sampling budget exhausted after {attempts} attempts while {what}")]
    SamplingBudget { what: &'static str, attempts: usize },

    #[error(
        "block {block} failed to reach full rank after {attempts} attempts \
         (last singular values {singular_values:?})"
    )]
    BlockSamplingBudget {
        block: usize,
        attempts: usize,
        singular_values: Vec<f64>,
    },

    #[error("input sequence is rank deficient: rank {rank} < {cols} columns")]
    RankDeficientInput { rank: usize, cols: usize },

    #[error("gain entry ({row}, {col}) = {value} lies outside the open interval (-1, +inf)")]
    GainOutOfRange { row: usize, col: usize, value: f64 },

    #[error(
        "pre-activation {value:.3e} at sequence row {row}, hidden node {col} \
         is within {bound:.3e} of the ReLU kink"
    )]
    KinkProximity {
        row: usize,
        col: usize,
        value: f64,
        bound: f64,
    },

    #[error("spread must be positive, got {0}")]
    InvalidSpread(f64),

    #[error("sweep grid has {points} points, exceeding the cap of {cap}")]
    GridCapExceeded { points: u128, cap: u64 },

    #[error("grid resolution must be at least 2, got {0}")]
    GridResolution(usize),

    #[error("grid range ({lo}, {hi}) must satisfy lo < hi and be finite")]
    GridRange { lo: f64, hi: f64 },

    #[error("weight {index} is zero; the witness construction assumes nonzero weights")]
    ZeroWeight { index: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
