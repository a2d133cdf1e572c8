use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("edge ({i}, {j}) references a node outside 0..{n}")]
    NodeOutOfRange { i: usize, j: usize, n: usize },

    #[error("edge ({i}, {j}) has invalid weight {weight}")]
    InvalidWeight { i: usize, j: usize, weight: f64 },

    #[error("edge ({i}, {j}) listed twice with different weights")]
    ConflictingEdge { i: usize, j: usize },

    #[error("coordinate count {got} does not match node count {expected}")]
    CoordinateCount { expected: usize, got: usize },

    #[error("coordinate of node {0} is not finite")]
    NonFiniteCoordinate(usize),

    #[error("invalid neighbor count k = {k} for {n} nodes")]
    InvalidNeighborCount { k: usize, n: usize },

    #[error("no connected sensor graph after {0} placements")]
    Disconnected(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sampling target m = {m} outside [{min}, {max}]")]
    InvalidSampleCount { m: usize, min: usize, max: usize },

    #[error("signal is not recoverable: no sampling set of size {0} gives a nonsingular reconstruction")]
    Unrecoverable(usize),

    #[error("invalid noise parameter: {0}")]
    InvalidNoise(String),

    #[error("invalid estimator parameter: {0}")]
    InvalidEstimator(String),

    #[error("non-finite moment accumulation")]
    NonFiniteMoment,

    #[error("sampling set is inadmissible: U_F^T D_S U_F is singular (min eigenvalue {0:e})")]
    InadmissibleSampling(f64),

    #[error("step size {step} is outside the stable range (0, {bound})")]
    UnstableStepSize { step: f64, bound: f64 },

    #[error("estimate diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("observation has a nonzero entry at unobserved node {0}")]
    UnsampledObservation(usize),

    #[error("convergence window {window} must be positive and shorter than the trace ({len})")]
    InvalidWindow { window: usize, len: usize },

    #[error("iteration count must be positive")]
    NoIterations,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("spectral cache: {0}")]
    Cache(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
