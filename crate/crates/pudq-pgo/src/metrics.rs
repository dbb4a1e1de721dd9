//! Relative pose error metrics over the measured edges: the tangent-space
//! (half-angle) form and the Euclidean translation-plus-angle form. Both are
//! invariant to a global transform of the estimate, so no alignment step is
//! needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::log_identity;
use crate::pudq::{to_euclidean, wrap_angle, Pudq};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EdgeError {
    pub from: usize,
    pub to: usize,
    /// Tangent-space relative error norm for this edge.
    pub lie: f64,
    /// Euclidean relative error norm for this edge.
    pub euclidean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RpeReport {
    pub rpe_l: f64,
    pub rpe_e: f64,
    pub per_edge: Vec<EdgeError>,
}

fn check_lengths(estimate: &[Pudq], truth: &[Pudq]) -> Result<()> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    Ok(())
}

/// Root-mean-square tangent-space relative pose error over `edges`.
pub fn rpe_lie(estimate: &[Pudq], truth: &[Pudq], edges: &[(usize, usize)]) -> Result<f64> {
    Ok(rpe_report(estimate, truth, edges)?.rpe_l)
}

/// Root-mean-square Euclidean relative pose error over `edges`.
pub fn rpe_euclidean(estimate: &[Pudq], truth: &[Pudq], edges: &[(usize, usize)]) -> Result<f64> {
    Ok(rpe_report(estimate, truth, edges)?.rpe_e)
}

/// Both metrics plus the per-edge breakdown.
pub fn rpe_report(
    estimate: &[Pudq],
    truth: &[Pudq],
    edges: &[(usize, usize)],
) -> Result<RpeReport> {
    check_lengths(estimate, truth)?;
    let m = edges.len();
    if m == 0 {
        return Err(Error::InvalidConfig("no edges to evaluate".into()));
    }
    let mut per_edge = Vec::with_capacity(m);
    let mut sum_l = 0.0;
    let mut sum_e = 0.0;
    for &(i, j) in edges {
        let z_hat = estimate[i].inverse().compose(&estimate[j]);
        let z_true = truth[i].inverse().compose(&truth[j]);
        let lie = log_identity(&z_hat.inverse().compose(&z_true)).norm();

        let pe_hat_i = to_euclidean(&estimate[i]);
        let pe_hat_j = to_euclidean(&estimate[j]);
        let pe_true_i = to_euclidean(&truth[i]);
        let pe_true_j = to_euclidean(&truth[j]);
        let rel_t = |pi: &crate::pudq::EuclideanPose, pj: &crate::pudq::EuclideanPose| {
            let (s, c) = pi.theta.sin_cos();
            let dx = pj.tx - pi.tx;
            let dy = pj.ty - pi.ty;
            // R(theta_i)^T (t_j - t_i)
            (c * dx + s * dy, -s * dx + c * dy)
        };
        let (hx, hy) = rel_t(&pe_hat_i, &pe_hat_j);
        let (tx, ty) = rel_t(&pe_true_i, &pe_true_j);
        let dtheta_hat = wrap_angle(pe_hat_j.theta - pe_hat_i.theta);
        let dtheta_true = wrap_angle(pe_true_j.theta - pe_true_i.theta);
        let dang = wrap_angle(dtheta_hat - dtheta_true).abs();
        let euclidean = ((hx - tx).powi(2) + (hy - ty).powi(2) + dang * dang).sqrt();

        sum_l += lie * lie;
        sum_e += euclidean * euclidean;
        per_edge.push(EdgeError {
            from: i,
            to: j,
            lie,
            euclidean,
        });
    }
    Ok(RpeReport {
        rpe_l: (sum_l / m as f64).sqrt(),
        rpe_e: (sum_e / m as f64).sqrt(),
        per_edge,
    })
}
