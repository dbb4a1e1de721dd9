//! Planar pose-graph optimization on the unit dual quaternion manifold.
//!
//! The crate provides the group algebra and Riemannian geometry of planar
//! unit dual quaternions, an anisotropic maximum-likelihood pose-graph
//! objective with analytic derivatives, a Riemannian trust-region solver with
//! a truncated conjugate-gradient subproblem, dataset synthesis with
//! Wishart-randomized edge covariances, file I/O, initializers, and relative
//! pose error metrics.

pub mod bounds;
pub mod check;
pub mod covariance;
pub mod error;
pub mod factor;
pub mod graph;
pub mod init;
pub mod io;
pub mod manifold;
pub mod metrics;
pub mod num;
pub mod objective;
pub mod pudq;
pub mod solver;
pub mod synth;

pub use covariance::{CovFrame, TangentCovariance};
pub use error::{Error, Result};
pub use graph::{Edge, PoseGraph};
pub use manifold::{ProductPoint, ProductTangent, TangentVec};
pub use pudq::{EuclideanPose, Pudq, Se2Matrix};
