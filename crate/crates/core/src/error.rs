use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {n} points cannot carry band limit {cutoff} (need n >= {required})")]
    Undersampled {
        n: usize,
        cutoff: usize,
        required: usize,
    },

    #[error("coefficient array has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("function has modes up to {function} but the potential only covers |m| <= {potential}")]
    CutoffMismatch { function: usize, potential: usize },

    #[error("potential is not real-valued on real functions (defect {defect:.3e})")]
    NotReal { defect: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("eigenpair {index} has residual {residual:.3e} above bound {bound:.3e}")]
    Residual {
        index: usize,
        residual: f64,
        bound: f64,
    },

    #[error("orbital index {index} out of range (basis has {len} orbitals)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("orbital {0} occupied twice")]
    PauliViolation(usize),

    #[error("open-shell ground state: lambda_{last} and lambda_{next} are degenerate; use an ensemble")]
    OpenShell { last: usize, next: usize },

    #[error("invalid ensemble weights: {0}")]
    Weights(String),

    #[error("invalid density matrix: eigenvalue {0:.3e} is negative")]
    NotPositiveSemidefinite(f64),

    #[error("target is not orthogonal to the natural orbitals (overlap {0:.3e})")]
    NotOrthogonal(f64),

    #[error("infeasible size: {0}")]
    Infeasible(String),

    #[error("density is not strictly positive (grid minimum {min:.3e} <= floor {floor:.1e})")]
    NotStrictlyPositive { min: f64, floor: f64 },

    #[error("density is not in D_N: {0}")]
    NotInDensitySpace(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("function vanishes identically")]
    ZeroFunction,

    #[error("no sign change found; a real excited state must have a node")]
    NoNode,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
