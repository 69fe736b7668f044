use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },
    #[error("axis {axis} is not strictly increasing at position {position}")]
    NonIncreasingAxis { axis: usize, position: usize },
    #[error("axis is empty")]
    EmptyAxis,
    #[error("functions are defined on different grids")]
    GridMismatch,
    #[error("axis {axis} is not equidistant; rearrangement needs equal cell measure")]
    NonEquidistantAxis { axis: usize },
    #[error("axis index {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("argument {what} = {value} out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),
    #[error("ordering set is empty")]
    EmptyOrderingSet,
    #[error("infeasible constraint: range width {width} is smaller than epsilon {epsilon}")]
    InfeasibleConstraint { width: f64, epsilon: f64 },
    #[error("weight at position {index} is not positive")]
    NonPositiveWeight { index: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("lambda = {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("negative standard error at flat index {index}")]
    NegativeStderr { index: usize },
    #[error("lower end-point exceeds upper end-point at flat index {index}")]
    CrossedBand { index: usize },
    #[error("need at least {min} bootstrap draws, got {got}")]
    TooFewDraws { min: usize, got: usize },
    #[error("all grid nodes have degenerate standard errors")]
    AllNodesDegenerate,
    #[error("no data in the kernel window around x = {x}")]
    EmptyWindow { x: f64 },
    #[error("design matrix is rank deficient ({columns} columns)")]
    RankDeficientDesign { columns: usize },
    #[error("IRLS did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    IrlsNoConvergence { iterations: usize, grad_norm: f64 },
    #[error("x = {x} outside the basis domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("invalid estimator specification: {0}")]
    InvalidSpec(String),
    #[error("bootstrap aborted: {failures} failed draws out of {draws}")]
    BootstrapFailed { failures: usize, draws: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficientDesign { .. }
                | Error::IrlsNoConvergence { .. }
                | Error::BootstrapFailed { .. }
                | Error::AllNodesDegenerate
        )
    }
}
