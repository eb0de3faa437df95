//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factor `{factor}`: levels must be non-empty")]
    EmptyLevels { factor: String },

    #[error("factor `{factor}`: duplicate level value `{level}`")]
    DuplicateLevel { factor: String, level: String },

    #[error("factor `{factor}`: level `{level}` does not match factor kind {kind}")]
    LevelKindMismatch {
        factor: String,
        level: String,
        kind: String,
    },

    #[error("duplicate factor name `{name}`")]
    DuplicateFactor { name: String },

    #[error("design space must contain at least one factor")]
    EmptyDesignSpace,

    #[error("grid size overflows u64 while multiplying in factor `{factor}`")]
    GridOverflow { factor: String },

    #[error("factor `{factor}`: level index {index} out of range 1..={max}")]
    LevelIndexOutOfRange {
        factor: String,
        index: usize,
        max: usize,
    },

    #[error("unknown factor `{name}`")]
    UnknownFactor { name: String },

    #[error("factor `{factor}`: value `{value}` is not one of its levels")]
    UnknownLevelValue { factor: String, value: String },

    #[error("expected {expected} level indices, got {got}")]
    IndexCountMismatch { expected: usize, got: usize },

    #[error("{levels} is not a prime power; orthogonal array construction needs a finite field")]
    NotPrimePower { levels: u32 },

    #[error("cannot construct {columns} columns at {levels} levels; the strength-2 construction supports at most {max} columns")]
    TooManyColumns {
        columns: usize,
        levels: u32,
        max: usize,
    },

    #[error("no catalog array with {columns} columns at {levels} levels{hint}")]
    NoCatalogEntry {
        columns: usize,
        levels: u32,
        hint: String,
    },

    #[error("no catalog array named `{name}`")]
    UnknownCatalogName { name: String },

    #[error("orthogonal array is malformed: {reason}")]
    MalformedArray { reason: String },

    #[error("array has {array_columns} columns but the design space has {factors} factors")]
    ColumnCountMismatch {
        array_columns: usize,
        factors: usize,
    },

    #[error("factor `{factor}` has {factor_levels} levels but the array uses {array_levels}; level collapsing is not supported")]
    LevelCountMismatch {
        factor: String,
        factor_levels: usize,
        array_levels: u32,
    },

    #[error("invalid scaler: {reason}")]
    InvalidScaler { reason: String },

    #[error("scaler domain violation: {reason}")]
    ScaleDomain { reason: String },

    #[error("objective `{objective}` scaled to negative value {value}; scaled objectives must be non-negative")]
    NegativeScaled { objective: String, value: f64 },

    #[error("objective weights sum to {sum}, expected 1 within 1e-12")]
    WeightSum { sum: f64 },

    #[error("objective `{objective}` has weight {weight}, expected a value in (0, 1]")]
    BadWeight { objective: String, weight: f64 },

    #[error("invalid norm: {reason}")]
    InvalidNorm { reason: String },

    #[error("run {run_id}: no value for objective `{objective}` in metric set `{metric_set}`")]
    MissingObjective {
        run_id: usize,
        objective: String,
        metric_set: String,
    },

    #[error("run {run_id}: metric set `{metric_set}` not present")]
    MissingMetricSet { run_id: usize, metric_set: String },

    #[error("records missing for runs {run_ids:?}")]
    MissingRuns { run_ids: Vec<usize> },

    #[error("duplicate records for runs {run_ids:?}")]
    DuplicateRuns { run_ids: Vec<usize> },

    #[error("record for run {run_id} does not belong to the plan")]
    UnplannedRun { run_id: usize },

    #[error("confirmation assignment does not match the selected optimum:\n{diff}")]
    AssignmentMismatch { diff: String },

    #[error("evaluator spec invalid: {reason}")]
    InvalidEvaluator { reason: String },

    #[error("replay table at `{path}`: {reason}")]
    ReplayTable { path: String, reason: String },

    #[error("exhaustive search refused: grid has {grid} points, cap is {cap}")]
    GridTooLarge { grid: u64, cap: u64 },

    #[error("invalid plan: {reason}")]
    InvalidPlan { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
