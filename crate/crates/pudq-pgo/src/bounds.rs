//! Closed-form bound constants for the objective's derivatives on a compact
//! region, used as solver diagnostics: residual and Jacobian norm bounds, the
//! gradient Lipschitz constant, and the operator-norm bound of the
//! Gauss-Newton model Hessian.

use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::graph::PoseGraph;

/// Every constant in the chain from the region radius to the Lipschitz
/// constant. All values are finite and nonnegative and grow monotonically
/// with the radius.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundConstants {
    /// Ambient-norm radius of the compact region.
    pub t_bar: f64,
    /// Largest measurement 4-vector norm.
    pub z_bar: f64,
    /// Bound on any pose's dual-part norm inside the region.
    pub t_x_bar: f64,
    /// Bound on any residual's dual-part norm inside the region.
    pub t_r_bar: f64,
    pub z2_bar: f64,
    pub z3_bar: f64,
    pub z23_bar: f64,
    /// Bound on the tangent-residual norm.
    pub e_bar: f64,
    /// Bound on the translation-row Jacobian entries.
    pub rho: f64,
    /// Frobenius bound on either residual Jacobian.
    pub j_bar: f64,
    /// Bound on the first two entries of any per-edge gradient block.
    pub g_bar: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    /// Frobenius bound factor for the diagonal Euclidean Hessian blocks.
    pub h_ii_bar: f64,
    /// Frobenius bound factor for the off-diagonal blocks.
    pub h_ij_bar: f64,
    /// Sum of information-matrix Frobenius norms over all edges.
    pub omega_bar: f64,
    /// Lipschitz constant of the Riemannian gradient on the region.
    pub l_g: f64,
    /// Operator-norm bound of the Gauss-Newton Hessian.
    pub beta: f64,
}

/// Evaluate all constants for `graph` on the region `||X|| <= k_radius`.
/// The caller supplies the radius; it must be at least `sqrt(N)` (the norm
/// of any all-identity configuration).
pub fn compute_bounds(graph: &PoseGraph, k_radius: f64) -> Result<BoundConstants> {
    let n = graph.vertex_count() as f64;
    let m = graph.edge_count() as f64;
    let t_bar = k_radius;
    if t_bar * t_bar < n {
        return Err(Error::InvalidRegion {
            tbar: t_bar,
            n: graph.vertex_count(),
        });
    }
    let t_x_bar = (t_bar * t_bar - n).sqrt();

    let mut z_bar = 0.0f64;
    let mut z2_bar = 0.0f64;
    let mut z3_bar = 0.0f64;
    for e in graph.edges() {
        let z = e.measurement.as_vector();
        z_bar = z_bar.max(z.norm());
        z2_bar = z2_bar.max(z[2].abs());
        z3_bar = z3_bar.max(z[3].abs());
    }
    let z23_bar = z2_bar + z3_bar;
    let t_r_bar = (t_x_bar * t_x_bar + 3.0) * z_bar;

    let e_bar = FRAC_PI_2 * (t_r_bar * t_r_bar + 1.0).sqrt();
    let sqrt2 = 2.0f64.sqrt();
    let rho = FRAC_PI_2 * (z23_bar + sqrt2 * t_x_bar) + sqrt2 * t_r_bar;
    let j_bar = (2.0 * (FRAC_PI_2 + 1.0).powi(2) + 4.0 * rho * rho + 4.0 * FRAC_PI_2.powi(2)).sqrt();

    let mut g_bar = 0.0f64;
    let mut omega_bar = 0.0;
    for e in graph.edges() {
        let om = e.information.matrix();
        let row_abs = |r: usize| om[(r, 0)].abs() + om[(r, 1)].abs() + om[(r, 2)].abs();
        let edge_g = sqrt2 * ((FRAC_PI_2 + 1.0) * row_abs(0) + rho * (row_abs(1) + row_abs(2))) * e_bar;
        g_bar = g_bar.max(edge_g);
        omega_bar += om.norm();
    }

    let tau1 = 2.0 * (z23_bar + sqrt2 * t_x_bar) + sqrt2 * (FRAC_PI_2 + 2.0) * t_r_bar;
    let tau2 = 2.0 * (z23_bar + sqrt2 * t_x_bar) + sqrt2 * (FRAC_PI_2 + 3.0) * t_r_bar;
    let tau3 = FRAC_PI_2 * z2_bar + 2.0 * (z23_bar + sqrt2 * t_x_bar) + sqrt2 * (FRAC_PI_2 + 4.0) * t_r_bar;
    let tau4 = FRAC_PI_2 * z3_bar + 2.0 * (z23_bar + sqrt2 * t_x_bar) + sqrt2 * (FRAC_PI_2 + 4.0) * t_r_bar;

    let h_ii_bar = (4.0 * (tau1 * tau1 + tau2 * tau2)
        + FRAC_PI_2.powi(2)
        + 2.0 * (FRAC_PI_2 + 1.0).powi(2)
        + (FRAC_PI_2 + 2.0).powi(2)
        + 16.0)
        .sqrt()
        * (e_bar + j_bar * j_bar);
    let h_ij_bar = (4.0 * (tau3 * tau3 + tau4 * tau4)
        + 16.0 * (FRAC_PI_2 + 1.0).powi(2)
        + 4.0 * (PI + 4.0).powi(2))
    .sqrt()
        * (e_bar + j_bar * j_bar);

    let l_g = sqrt2 * (h_ii_bar + h_ij_bar) * omega_bar + 2.0 * m * g_bar;
    let beta = 4.0 * j_bar * j_bar * omega_bar;

    Ok(BoundConstants {
        t_bar,
        z_bar,
        t_x_bar,
        t_r_bar,
        z2_bar,
        z3_bar,
        z23_bar,
        e_bar,
        rho,
        j_bar,
        g_bar,
        tau1,
        tau2,
        tau3,
        tau4,
        h_ii_bar,
        h_ij_bar,
        omega_bar,
        l_g,
        beta,
    })
}
