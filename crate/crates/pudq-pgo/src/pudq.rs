//! The planar unit dual quaternion group: vector representation, composition,
//! inverse, the matrix-valued composition maps, and conversions between
//! Euclidean poses, SE(2) homogeneous transforms, and group elements.
//!
//! A group element is stored as the 4-vector `[q0, q1, q2, q3]` where
//! `(q0, q1)` is the unit rotation part (cosine/sine of the half-angle) and
//! `(q2, q3)` is the dual part encoding half the translation coupled through
//! the half-angle rotation.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the defining function `h(x) = q0^2 + q1^2 - 1` below which a
/// vector is accepted as an on-manifold pose.
pub const UNIT_TOL: f64 = 1e-9;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = (theta + std::f64::consts::PI).rem_euclid(two_pi);
    if w == 0.0 {
        std::f64::consts::PI
    } else {
        w - std::f64::consts::PI
    }
}

/// Wrap a half-angle into `(-pi/2, pi/2]`, with the boundary assignments at
/// the +-pi/2 seams.
pub fn wrap_half_angle(alpha: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if alpha <= -FRAC_PI_2 {
        alpha + PI
    } else if alpha > FRAC_PI_2 {
        alpha - PI
    } else {
        alpha
    }
}

/// A planar unit dual quaternion, the pose representation used everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pudq(Vector4<f64>);

impl Pudq {
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Pudq(Vector4::new(q0, q1, q2, q3))
    }

    pub fn from_vector(v: Vector4<f64>) -> Self {
        Pudq(v)
    }

    /// The group identity `[1, 0, 0, 0]`.
    pub fn identity() -> Self {
        Pudq(Vector4::new(1.0, 0.0, 0.0, 0.0))
    }

    pub fn as_vector(&self) -> &Vector4<f64> {
        &self.0
    }

    pub fn into_vector(self) -> Vector4<f64> {
        self.0
    }

    pub fn rotation_part(&self) -> Vector2<f64> {
        Vector2::new(self.0[0], self.0[1])
    }

    pub fn dual_part(&self) -> Vector2<f64> {
        Vector2::new(self.0[2], self.0[3])
    }

    /// Value of the defining function `h(x) = q0^2 + q1^2 - 1`.
    pub fn constraint_defect(&self) -> f64 {
        self.0[0] * self.0[0] + self.0[1] * self.0[1] - 1.0
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        self.constraint_defect().abs() <= tol
    }

    /// Half-angle of the rotation part, wrapped to `(-pi/2, pi/2]`.
    pub fn half_angle(&self) -> f64 {
        wrap_half_angle(self.0[1].atan2(self.0[0]))
    }

    /// Group composition via the Hamilton product.
    pub fn compose(&self, other: &Pudq) -> Pudq {
        debug_assert!(self.is_unit(1e-6), "compose: left operand off manifold");
        debug_assert!(other.is_unit(1e-6), "compose: right operand off manifold");
        Pudq(hamilton(&self.0, &other.0))
    }

    /// Group inverse `[q0, -q1, -q2, -q3]`.
    pub fn inverse(&self) -> Pudq {
        Pudq(Vector4::new(self.0[0], -self.0[1], -self.0[2], -self.0[3]))
    }

    /// Rescale so the rotation part has exactly unit norm. Dividing the full
    /// 4-vector by the rotation norm preserves the encoded rigid motion.
    pub fn renormalized(&self) -> Pudq {
        let n = self.rotation_part().norm();
        Pudq(self.0 / n)
    }

    /// Equality of rigid motions: the 4-vectors x and -x encode the same
    /// motion, so compare up to that global sign.
    pub fn same_motion(&self, other: &Pudq, tol: f64) -> bool {
        (self.0 - other.0).norm() <= tol || (self.0 + other.0).norm() <= tol
    }
}

/// Hamilton product of two 4-vectors under the planar dual quaternion basis.
/// Bilinear, defined for arbitrary (not necessarily unit) operands.
pub(crate) fn hamilton(x: &Vector4<f64>, y: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(
        x[0] * y[0] - x[1] * y[1],
        x[0] * y[1] + x[1] * y[0],
        x[0] * y[2] - x[1] * y[3] + x[2] * y[0] + x[3] * y[1],
        x[0] * y[3] + x[1] * y[2] - x[2] * y[1] + x[3] * y[0],
    )
}

/// The eight matrix-valued composition maps. Each value `Q = map(x)` turns a
/// composition into the matrix-vector product documented on the variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompositionMap {
    /// `Q_L(x) y = x ⊞ y`
    L,
    /// `Q_R(x) y = y ⊞ x`
    R,
    /// `Q_LL-(x) y = x⁻¹ ⊞ y`
    LlInv,
    /// `Q_RR-(x) y = y ⊞ x⁻¹`
    RrInv,
    /// `Q_RL-(x) y = x ⊞ y⁻¹`
    RlInv,
    /// `Q_LR-(x) y = y⁻¹ ⊞ x`
    LrInv,
    /// `Q_L--(x) y = x⁻¹ ⊞ y⁻¹`
    LInvInv,
    /// `Q_R--(x) y = y⁻¹ ⊞ x⁻¹`
    RInvInv,
}

/// Matrix form of a composition map evaluated at `x`.
pub fn composition_matrix(x: &Pudq, map: CompositionMap) -> Matrix4<f64> {
    let v = x.as_vector();
    match map {
        CompositionMap::L => q_l(v),
        CompositionMap::R => q_r(v),
        CompositionMap::LlInv => q_l(&x.inverse().into_vector()),
        CompositionMap::RrInv => q_r(&x.inverse().into_vector()),
        CompositionMap::RlInv => q_rl_inv(v),
        CompositionMap::LrInv => q_lr_inv(v),
        CompositionMap::LInvInv => q_l_inv_inv(v),
        CompositionMap::RInvInv => q_r_inv_inv(v),
    }
}

#[rustfmt::skip]
pub(crate) fn q_l(x: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
        x[0], -x[1],  0.0,   0.0,
        x[1],  x[0],  0.0,   0.0,
        x[2],  x[3],  x[0], -x[1],
        x[3], -x[2],  x[1],  x[0],
    )
}

#[rustfmt::skip]
pub(crate) fn q_r(y: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
        y[0], -y[1],  0.0,   0.0,
        y[1],  y[0],  0.0,   0.0,
        y[2], -y[3],  y[0],  y[1],
        y[3],  y[2], -y[1],  y[0],
    )
}

#[rustfmt::skip]
pub(crate) fn q_rl_inv(x: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
        x[0],  x[1],  0.0,   0.0,
        x[1], -x[0],  0.0,   0.0,
        x[2], -x[3], -x[0],  x[1],
        x[3],  x[2], -x[1], -x[0],
    )
}

#[rustfmt::skip]
pub(crate) fn q_lr_inv(y: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
        y[0],  y[1],  0.0,   0.0,
        y[1], -y[0],  0.0,   0.0,
        y[2],  y[3], -y[0], -y[1],
        y[3], -y[2],  y[1], -y[0],
    )
}

#[rustfmt::skip]
pub(crate) fn q_l_inv_inv(x: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
         x[0], -x[1],  0.0,   0.0,
        -x[1], -x[0],  0.0,   0.0,
        -x[2],  x[3], -x[0], -x[1],
        -x[3], -x[2],  x[1], -x[0],
    )
}

#[rustfmt::skip]
pub(crate) fn q_r_inv_inv(y: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::new(
         y[0], -y[1],  0.0,   0.0,
        -y[1], -y[0],  0.0,   0.0,
        -y[2], -y[3], -y[0],  y[1],
        -y[3],  y[2], -y[1], -y[0],
    )
}

/// A planar pose in Euclidean coordinates `[tx, ty, theta]`, theta wrapped to
/// `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclideanPose {
    pub tx: f64,
    pub ty: f64,
    pub theta: f64,
}

impl EuclideanPose {
    pub fn new(tx: f64, ty: f64, theta: f64) -> Self {
        EuclideanPose {
            tx,
            ty,
            theta: wrap_angle(theta),
        }
    }
}

/// An SE(2) homogeneous transformation matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se2Matrix(Matrix3<f64>);

impl Se2Matrix {
    /// Validate and wrap a raw 3x3 matrix. The rotation block must be
    /// orthonormal with unit determinant and the bottom row exactly [0 0 1].
    pub fn try_from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m[(2, 0)] != 0.0 || m[(2, 1)] != 0.0 || m[(2, 2)] != 1.0 {
            return Err(Error::InvalidHomogeneousRow);
        }
        let r = m.fixed_view::<2, 2>(0, 0).into_owned();
        let ortho_defect = (r.transpose() * r - Matrix2::identity()).norm();
        let det_defect = (r.determinant() - 1.0).abs();
        let defect = ortho_defect.max(det_defect);
        if defect > 1e-9 {
            return Err(Error::InvalidRotation { defect });
        }
        Ok(Se2Matrix(m))
    }

    pub fn from_pose(p: &EuclideanPose) -> Self {
        let (s, c) = p.theta.sin_cos();
        #[rustfmt::skip]
        let m = Matrix3::new(
            c,  -s,  p.tx,
            s,   c,  p.ty,
            0.0, 0.0, 1.0,
        );
        Se2Matrix(m)
    }

    pub fn as_matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_pose(&self) -> EuclideanPose {
        let m = &self.0;
        EuclideanPose::new(m[(0, 2)], m[(1, 2)], m[(1, 0)].atan2(m[(0, 0)]))
    }

    /// Matrix product of two transforms (group composition in SE(2)).
    pub fn compose(&self, other: &Se2Matrix) -> Se2Matrix {
        Se2Matrix(self.0 * other.0)
    }
}

/// Map a Euclidean pose onto the manifold: half-angle rotation part and dual
/// part `x_d = (1/2) R_phi t`.
pub fn from_euclidean(p: &EuclideanPose) -> Pudq {
    let phi = 0.5 * p.theta;
    let (s, c) = phi.sin_cos();
    // R_phi = [[cos, sin], [-sin, cos]]
    let d0 = 0.5 * (c * p.tx + s * p.ty);
    let d1 = 0.5 * (-s * p.tx + c * p.ty);
    Pudq::new(c, s, d0, d1)
}

/// Recover the Euclidean pose. The full angle is computed with the
/// four-quadrant arctangent of `(2 q0 q1, q0^2 - q1^2)`, which is invariant
/// under the double-cover sign.
pub fn to_euclidean(x: &Pudq) -> EuclideanPose {
    let v = x.as_vector();
    let theta = (2.0 * v[0] * v[1]).atan2(v[0] * v[0] - v[1] * v[1]);
    // t = 2 R_phi^T x_d
    let tx = 2.0 * (v[0] * v[2] - v[1] * v[3]);
    let ty = 2.0 * (v[1] * v[2] + v[0] * v[3]);
    EuclideanPose::new(tx, ty, theta)
}

/// Map an SE(2) homogeneous transform onto the manifold.
pub fn from_se2(t: &Se2Matrix) -> Pudq {
    from_euclidean(&t.to_pose())
}

/// Map a manifold element to its SE(2) homogeneous transform.
pub fn to_se2(x: &Pudq) -> Se2Matrix {
    Se2Matrix::from_pose(&to_euclidean(x))
}
