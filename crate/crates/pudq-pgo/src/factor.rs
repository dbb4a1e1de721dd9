//! Per-edge derivative bundle: geodesic/tangent residuals, the closed-form
//! Jacobians of the tangent residual with respect to both incident poses, and
//! the second-derivative tensors assembled into Euclidean Hessian blocks.
//!
//! The residual factors through two matrix products,
//! `r = Q_i x_i = Q_j x_j`, so every Jacobian and tensor entry is built from
//! the entries of `Q_i`/`Q_j`, the residual, and the scalar kernels `f1`/`f2`
//! of the wrapped residual half-angle. All formulas here use the on-manifold
//! simplification `r0^2 + r1^2 = 1`.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};

use crate::num::{f1, f2, recip_sinc};
use crate::pudq::{q_l, q_l_inv_inv, q_r, wrap_half_angle, Pudq};

/// Everything the objective needs about one edge at the current iterate.
#[derive(Clone, Debug)]
pub struct EdgeFactor {
    pub from: usize,
    pub to: usize,
    /// Measurement the residual is taken against.
    pub z: Pudq,
    /// Geodesic residual `z^{-1} ⊞ x_i^{-1} ⊞ x_j`.
    pub r: Pudq,
    /// Tangent residual `Log_1(r)`.
    pub e: Vector3<f64>,
    /// Jacobian of `e` with respect to `x_i`.
    pub a: Matrix3x4<f64>,
    /// Jacobian of `e` with respect to `x_j`.
    pub b: Matrix3x4<f64>,
    /// `Q_i = Q_R(x_j) Q_L--(z)`, so that `r = Q_i x_i`.
    pub qi: Matrix4<f64>,
    /// `Q_j = Q_LL-(z) Q_LL-(x_i)`, so that `r = Q_j x_j`.
    pub qj: Matrix4<f64>,
    /// Wrapped residual half-angle.
    pub phi: f64,
    /// `sinc(phi)`; the tangent residual divides by this.
    pub gamma: f64,
    pub f1: f64,
    pub f2: f64,
    /// Information matrix in the tangent frame.
    pub omega: Matrix3<f64>,
    /// Cached `Omega e`.
    pub omega_e: Vector3<f64>,
}

impl EdgeFactor {
    pub fn new(
        from: usize,
        to: usize,
        z: &Pudq,
        xi: &Pudq,
        xj: &Pudq,
        omega: &Matrix3<f64>,
    ) -> EdgeFactor {
        let qi = q_r(xj.as_vector()) * q_l_inv_inv(z.as_vector());
        let qj = q_l(&z.inverse().into_vector()) * q_l(&xi.inverse().into_vector());
        let rv = qi * xi.as_vector();
        debug_assert!(
            (rv - qj * xj.as_vector()).norm() <= 1e-9 * (1.0 + rv.norm()),
            "residual expansions disagree"
        );
        let r = Pudq::from_vector(rv);
        let phi = wrap_half_angle(rv[1].atan2(rv[0]));
        let g = recip_sinc(phi);
        let e = Vector3::new(g * rv[1], g * rv[2], g * rv[3]);
        let f1v = f1(phi);
        let f2v = f2(phi);
        let a = jacobian(&qi, &rv, 1.0 / g, f1v);
        let b = jacobian(&qj, &rv, 1.0 / g, f1v);
        let omega_e = omega * e;
        EdgeFactor {
            from,
            to,
            z: *z,
            r,
            e,
            a,
            b,
            qi,
            qj,
            phi,
            gamma: 1.0 / g,
            f1: f1v,
            f2: f2v,
            omega: *omega,
            omega_e,
        }
    }

    /// Per-edge Euclidean gradient block for the `from` vertex, `A^T Omega e`.
    pub fn grad_from(&self) -> Vector4<f64> {
        self.a.transpose() * self.omega_e
    }

    /// Per-edge Euclidean gradient block for the `to` vertex, `B^T Omega e`.
    pub fn grad_to(&self) -> Vector4<f64> {
        self.b.transpose() * self.omega_e
    }

    // Named entries of Q_i and Q_j, matching the scalar shorthand used by the
    // closed-form derivative expressions.
    pub fn mu_i(&self) -> f64 {
        self.qi[(0, 0)]
    }
    pub fn omega_i(&self) -> f64 {
        self.qi[(0, 1)]
    }
    pub fn eta_i(&self) -> f64 {
        self.qi[(1, 0)]
    }
    pub fn kappa_i(&self) -> f64 {
        self.qi[(1, 1)]
    }
    pub fn alpha_1(&self) -> f64 {
        self.qi[(2, 0)]
    }
    pub fn beta_1(&self) -> f64 {
        self.qi[(2, 1)]
    }
    pub fn xi_1(&self) -> f64 {
        self.qi[(2, 2)]
    }
    pub fn zeta_1(&self) -> f64 {
        self.qi[(2, 3)]
    }
    pub fn alpha_2(&self) -> f64 {
        self.qi[(3, 0)]
    }
    pub fn beta_2(&self) -> f64 {
        self.qi[(3, 1)]
    }
    pub fn mu_j(&self) -> f64 {
        self.qj[(0, 0)]
    }
    pub fn omega_j(&self) -> f64 {
        self.qj[(0, 1)]
    }
    pub fn eta_j(&self) -> f64 {
        self.qj[(1, 0)]
    }
    pub fn kappa_j(&self) -> f64 {
        self.qj[(1, 1)]
    }
    pub fn alpha_3(&self) -> f64 {
        self.qj[(2, 0)]
    }
    pub fn beta_3(&self) -> f64 {
        self.qj[(2, 1)]
    }
}

/// Jacobian of the tangent residual through one of its factorizations
/// `r = T x`: row k is `T[k+1, .] / gamma + f1 r_{k+1} G` with
/// `G_m = r0 T[1, m] - r1 T[0, m]`.
fn jacobian(t: &Matrix4<f64>, r: &Vector4<f64>, gamma: f64, f1v: f64) -> Matrix3x4<f64> {
    let mut out = Matrix3x4::zeros();
    for m in 0..4 {
        let g_m = r[0] * t[(1, m)] - r[1] * t[(0, m)];
        for k in 1..4 {
            out[(k - 1, m)] = t[(k, m)] / gamma + f1v * r[k] * g_m;
        }
    }
    out
}

/// Second derivatives of the edge residual: the four 3x4x4 tensors
/// (differentiating each Jacobian by each incident pose), the contracted
/// `C` blocks, and the Euclidean Hessian blocks `h`.
#[derive(Clone, Debug)]
pub struct HessianTensorBundle {
    pub da_dxi: [Matrix3x4<f64>; 4],
    pub da_dxj: [Matrix3x4<f64>; 4],
    pub db_dxi: [Matrix3x4<f64>; 4],
    pub db_dxj: [Matrix3x4<f64>; 4],
    pub c_ii: Matrix4<f64>,
    pub c_ij: Matrix4<f64>,
    pub c_ji: Matrix4<f64>,
    pub c_jj: Matrix4<f64>,
    pub h_ii: Matrix4<f64>,
    pub h_ij: Matrix4<f64>,
    pub h_ji: Matrix4<f64>,
    pub h_jj: Matrix4<f64>,
}

impl HessianTensorBundle {
    pub fn new(factor: &EdgeFactor) -> Self {
        let r = factor.r.as_vector();
        let zv = factor.z.as_vector();
        let (f1v, f2v, gamma) = (factor.f1, factor.f2, factor.gamma);

        let zero = Matrix4::zeros();
        let mut da_dxi = [Matrix3x4::zeros(); 4];
        let mut da_dxj = [Matrix3x4::zeros(); 4];
        let mut db_dxi = [Matrix3x4::zeros(); 4];
        let mut db_dxj = [Matrix3x4::zeros(); 4];

        for m in 0..4 {
            let mut basis = Vector4::zeros();
            basis[m] = 1.0;
            // dQ_i / dx_{j,m}: Q_R is linear in its argument.
            let dqi_dxj = q_r(&basis) * q_l_inv_inv(zv);
            // dQ_j / dx_{i,m}: Q_L of the inverse is linear with a sign flip
            // on all but the first coordinate.
            let mut inv_basis = basis;
            if m > 0 {
                inv_basis[m] = -1.0;
            }
            let dqj_dxi = q_l(&factor.z.inverse().into_vector()) * q_l(&inv_basis);

            let dr_dxi = factor.qi.column(m).into_owned();
            let dr_dxj = factor.qj.column(m).into_owned();

            da_dxi[m] = tensor_slice(&factor.qi, &zero, r, &dr_dxi, gamma, f1v, f2v);
            da_dxj[m] = tensor_slice(&factor.qi, &dqi_dxj, r, &dr_dxj, gamma, f1v, f2v);
            db_dxi[m] = tensor_slice(&factor.qj, &dqj_dxi, r, &dr_dxi, gamma, f1v, f2v);
            db_dxj[m] = tensor_slice(&factor.qj, &zero, r, &dr_dxj, gamma, f1v, f2v);
        }

        let contract = |slices: &[Matrix3x4<f64>; 4]| -> Matrix4<f64> {
            let mut c = Matrix4::zeros();
            for (m, s) in slices.iter().enumerate() {
                c.set_column(m, &(s.transpose() * factor.omega_e));
            }
            c
        };
        let c_ii = contract(&da_dxi);
        let c_ij = contract(&da_dxj);
        let c_ji = contract(&db_dxi);
        let c_jj = contract(&db_dxj);

        let aoa = factor.a.transpose() * factor.omega * factor.a;
        let aob = factor.a.transpose() * factor.omega * factor.b;
        let boa = factor.b.transpose() * factor.omega * factor.a;
        let bob = factor.b.transpose() * factor.omega * factor.b;

        HessianTensorBundle {
            da_dxi,
            da_dxj,
            db_dxi,
            db_dxj,
            c_ii,
            c_ij,
            c_ji,
            c_jj,
            h_ii: c_ii + aoa,
            h_ij: c_ij + aob,
            h_ji: c_ji + boa,
            h_jj: c_jj + bob,
        }
    }
}

/// One 3x4 slice of a residual-Jacobian derivative. `t` is the factorization
/// matrix the Jacobian was built from, `dt` its derivative in the chosen
/// direction (zero when `t` does not depend on that pose), and `dr` the
/// residual derivative in the same direction.
fn tensor_slice(
    t: &Matrix4<f64>,
    dt: &Matrix4<f64>,
    r: &Vector4<f64>,
    dr: &Vector4<f64>,
    gamma: f64,
    f1v: f64,
    f2v: f64,
) -> Matrix3x4<f64> {
    let w = r[0] * dr[1] - r[1] * dr[0];
    let rdr = r[0] * dr[0] + r[1] * dr[1];
    let mut out = Matrix3x4::zeros();
    for m in 0..4 {
        let g_m = r[0] * t[(1, m)] - r[1] * t[(0, m)];
        let dg_m = r[0] * dt[(1, m)] - r[1] * dt[(0, m)] + t[(1, m)] * dr[0] - t[(0, m)] * dr[1];
        for k in 1..4 {
            out[(k - 1, m)] = dt[(k, m)] / gamma
                + t[(k, m)] * w * f1v
                + (dr[k] - 2.0 * r[k] * rdr) * g_m * f1v
                + r[k] * dg_m * f1v
                + r[k] * g_m * w * f2v;
        }
    }
    out
}
