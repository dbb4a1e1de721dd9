//! Covariance and information matrices on the pose tangent spaces, tagged by
//! the frame they are expressed in, with the exact transforms between frames.
//!
//! Three frames carry 3x3 second-moment matrices for planar poses: the group
//! tangent space at the identity, the se(2) algebra, and raw Euclidean
//! `[tx, ty, theta]` coordinates. The tangent/algebra pair is related by a
//! constant permutation-and-scale map; the Euclidean frame additionally needs
//! the rotation angle theta.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::sinc;

/// Frame tag for a [`TangentCovariance`]. Mixing frames without an explicit
/// transform is rejected at runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovFrame {
    /// Group tangent space at the identity, coordinates `(k, ei, ej)`.
    PudqTangent,
    /// se(2) algebra coordinates `(vx, vy, omega)`.
    Se2Algebra,
    /// Euclidean pose coordinates `(tx, ty, theta)`.
    Euclidean,
}

/// A symmetric positive-definite 3x3 matrix tagged with its frame. Used for
/// both covariances and their inverses (information matrices); the transform
/// methods state which convention they implement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentCovariance {
    matrix: Matrix3<f64>,
    frame: CovFrame,
}

/// Permutation taking `(vx, vy, omega)` coordinates to `(k, ei, ej)` order.
#[rustfmt::skip]
pub(crate) fn b_p() -> Matrix3<f64> {
    Matrix3::new(
        0.0, 0.0, 1.0,
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    )
}

/// Angle-dependent factor of the Euclidean-to-tangent vector map.
#[rustfmt::skip]
pub(crate) fn m_p(theta: f64) -> Matrix3<f64> {
    let phi = 0.5 * theta;
    let omega = phi.cos() / sinc(phi);
    Matrix3::new(
        omega, phi, 0.0,
        -phi, omega, 0.0,
        0.0,  0.0,  1.0,
    )
}

pub(crate) fn m_p_inv(theta: f64) -> Matrix3<f64> {
    let phi = 0.5 * theta;
    let omega = phi.cos() / sinc(phi);
    // The top-left block is a scaled rotation; its determinant
    // omega^2 + phi^2 is bounded away from zero on the wrapped domain.
    let det = omega * omega + phi * phi;
    #[rustfmt::skip]
    let m = Matrix3::new(
        omega / det, -phi / det, 0.0,
        phi / det,  omega / det, 0.0,
        0.0,        0.0,         1.0,
    );
    m
}

impl TangentCovariance {
    /// Validate symmetry (within 1e-12 relative to the matrix scale) and
    /// positive definiteness, then tag.
    pub fn new(matrix: Matrix3<f64>, frame: CovFrame) -> Result<Self> {
        let defect = (matrix - matrix.transpose()).norm();
        if defect > 1e-12 * (1.0 + matrix.norm()) {
            return Err(Error::NotSymmetric { defect });
        }
        let sym = 0.5 * (matrix + matrix.transpose());
        if nalgebra::Cholesky::new(sym).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(TangentCovariance { matrix: sym, frame })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn frame(&self) -> CovFrame {
        self.frame
    }

    pub fn expect_frame(&self, expected: CovFrame) -> Result<()> {
        if self.frame != expected {
            return Err(Error::FrameMismatch {
                expected,
                found: self.frame,
            });
        }
        Ok(())
    }

    /// Transform an information matrix into `target` frame. `theta` is
    /// required exactly when the source or target frame is Euclidean.
    pub fn transform_information(
        &self,
        target: CovFrame,
        theta: Option<f64>,
    ) -> Result<TangentCovariance> {
        self.transform(target, theta, true)
    }

    /// Transform a covariance matrix into `target` frame.
    pub fn transform_covariance(
        &self,
        target: CovFrame,
        theta: Option<f64>,
    ) -> Result<TangentCovariance> {
        self.transform(target, theta, false)
    }

    fn transform(&self, target: CovFrame, theta: Option<f64>, info: bool) -> Result<Self> {
        use CovFrame::*;
        if self.frame == target {
            return Ok(*self);
        }
        let needs_theta = self.frame == Euclidean || target == Euclidean;
        if needs_theta && theta.is_none() {
            return Err(Error::MissingTheta);
        }
        // Route through the tangent frame; each hop is exact.
        let tangent: Matrix3<f64> = match self.frame {
            PudqTangent => self.matrix,
            Se2Algebra => {
                let b = b_p();
                if info {
                    4.0 * b * self.matrix * b.transpose()
                } else {
                    0.25 * b * self.matrix * b.transpose()
                }
            }
            Euclidean => {
                let b = b_p();
                let th = theta.unwrap();
                if info {
                    let mi = m_p_inv(th);
                    4.0 * b * mi.transpose() * self.matrix * mi * b.transpose()
                } else {
                    let m = m_p(th);
                    0.25 * b * m * self.matrix * m.transpose() * b.transpose()
                }
            }
        };
        let out = match target {
            PudqTangent => tangent,
            Se2Algebra => {
                let b = b_p();
                if info {
                    0.25 * b.transpose() * tangent * b
                } else {
                    4.0 * b.transpose() * tangent * b
                }
            }
            Euclidean => {
                let b = b_p();
                let th = theta.unwrap();
                if info {
                    let m = m_p(th);
                    0.25 * m.transpose() * b.transpose() * tangent * b * m
                } else {
                    let mi = m_p_inv(th);
                    4.0 * mi * b.transpose() * tangent * b * mi.transpose()
                }
            }
        };
        TangentCovariance::new(out, target)
    }
}
