use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("{what} did not converge")]
    NoConvergence { what: &'static str },
    #[error("sign iteration hit a numerically singular iterate (rcond {rcond:.3e})")]
    SingularIterate { rcond: f64 },
    #[error("vectors are linearly dependent at index {index}")]
    RankDeficient { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not elliptic: {0}")]
    NotElliptic(String),
    #[error("automorphism is not invertible (smallest singular value {smin:.3e})")]
    NotInvertible { smin: f64 },
    #[error("matrix is not self-adjoint (defect {defect:.3e})")]
    NotSelfAdjoint { defect: f64 },
    #[error("zero eigenvalue within tolerance (|lambda| = {value:.3e})")]
    ZeroEigenvalue { value: f64 },
    #[error("rank of F jumps on component {component} at node ({i}, {j}): {found} != {expected}")]
    RankJump { component: usize, i: usize, j: usize, expected: usize, found: usize },
    #[error("lattice too coarse: {0}")]
    GridTooCoarse(String),
    #[error("prescribed rank {rank} exceeds fibre dimension {max}")]
    RankTooLarge { rank: usize, max: usize },
    #[error("angular grid of {n_theta} nodes cannot resolve frequency {frequency}")]
    NyquistViolation { n_theta: usize, frequency: usize },
    #[error("boundary condition is not Lagrangian (defect {defect:.3e})")]
    NotLagrangian { defect: f64 },
    #[error("eigenvalue within {eps:.1e} of zero at s = {s}")]
    AmbiguousCrossing { s: f64, eps: f64 },
    #[error("adaptive refinement exceeded its cap near s = {s}")]
    StepTooCoarse { s: f64 },
    #[error("families have different loop parameterizations")]
    ParamMismatch,
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("operator data inconsistent with the built-in Dirac family: {0}")]
    SymbolMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("LAPACK routine {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

pub type Result<T> = std::result::Result<T, Error>;
