//! Error types shared across the crate.

use crate::covariance::CovFrame;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("pose violates the unit constraint: h(x) = {h:.3e}")]
    NonUnitPose { h: f64 },

    #[error("rotation block is not orthonormal (defect {defect:.3e})")]
    InvalidRotation { defect: f64 },

    #[error("bottom row of a homogeneous transform must be [0 0 1]")]
    InvalidHomogeneousRow,

    #[error("matrix is not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("covariance is tagged {found:?}, expected {expected:?}")]
    FrameMismatch { expected: CovFrame, found: CovFrame },

    #[error("conversion involving the euclidean frame requires theta")]
    MissingTheta,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("edge ({i}, {j}) not present in graph")]
    UnknownEdge { i: usize, j: usize },

    #[error("no odometry edge between vertices {from} and {}", from + 1)]
    MissingOdometryEdge { from: usize },

    #[error("anchor {anchor} out of range for {n} vertices")]
    InvalidAnchor { anchor: usize, n: usize },

    #[error("anchored vertex {anchor} is not the identity pose")]
    AnchorNotIdentity { anchor: usize },

    #[error("information matrix of edge ({i}, {j}) is not positive definite")]
    EdgeInformationNotSpd { i: usize, j: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("norm bound {tbar} is below sqrt(N) for N = {n} vertices")]
    InvalidRegion { tbar: f64, n: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
