use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("total dimension {requested} exceeds the cap {cap}")]
    DimensionCapExceeded { requested: usize, cap: usize },

    #[error("the kept-index set must be nonempty and within bounds")]
    BadKeepIndices,

    #[error("expectation value has imaginary residue {0:.3e} above tolerance")]
    ImaginaryResidue(f64),

    #[error("grid oracle needs at most 4 effective parameters, got {0}")]
    GridOracleTooManyParams(usize),

    #[error("targets are infeasible: {0}")]
    InfeasibleTargets(String),

    #[error("anchor at a curve endpoint; exchange rate undefined there")]
    EndpointAnchor,

    #[error("curve is not strictly convex near the anchor: {0}")]
    NonConvexNeighborhood(String),

    #[error("degenerate tangent vectors: |n| = {0:.3e}")]
    DegenerateCrossProduct(f64),

    #[error("bank curve violates {0}")]
    CurveInvariant(String),

    #[error("target entropy {target:.6} outside achievable range [{lo:.6}, {hi:.6}]")]
    EntropyOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("battery capacity exceeded: need {required:.3} cells, have {available}")]
    CapacityExceeded { required: f64, available: usize },

    #[error("theory construction failed: {0}")]
    BadTheory(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
