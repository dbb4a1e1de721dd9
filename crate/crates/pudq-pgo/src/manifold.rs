//! Riemannian structure of the pose manifold and its N-fold product: tangent
//! projectors, logarithm/exponential maps, parallel transport, geodesic
//! distance, and the Weingarten map.
//!
//! The manifold is embedded in R^4 by the unit constraint on the rotation
//! part. Tangent vectors are kept in ambient 4-vector coordinates together
//! with their base point; the 3-vector chart is used only at the identity.

use nalgebra::{DVector, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::num::{recip_sinc, sinc};
use crate::pudq::{hamilton, wrap_half_angle, Pudq};

/// The constraint-selector matrix `diag(1, 1, 0, 0)`.
pub fn p_tilde() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 0.0, 0.0))
}

/// An ambient tangent vector anchored at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVec {
    vec: Vector4<f64>,
    base: Pudq,
}

impl TangentVec {
    /// Wrap an ambient vector already known to be tangent at `base`.
    pub fn new_unchecked(vec: Vector4<f64>, base: Pudq) -> Self {
        TangentVec { vec, base }
    }

    pub fn ambient(&self) -> &Vector4<f64> {
        &self.vec
    }

    pub fn base(&self) -> &Pudq {
        &self.base
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    /// Constraint-violation of tangency, `x^T Ptilde v`.
    pub fn tangency_defect(&self) -> f64 {
        let x = self.base.as_vector();
        let v = &self.vec;
        x[0] * v[0] + x[1] * v[1]
    }
}

/// Orthogonal projection of an ambient vector onto the tangent space at `x`.
pub fn project_tangent(x: &Pudq, u: &Vector4<f64>) -> TangentVec {
    let xv = x.as_vector();
    let s = xv[0] * u[0] + xv[1] * u[1];
    let vec = Vector4::new(u[0] - s * xv[0], u[1] - s * xv[1], u[2], u[3]);
    TangentVec { vec, base: *x }
}

/// Dense tangent projector `I - Ptilde x x^T Ptilde`.
pub fn projector(x: &Pudq) -> Matrix4<f64> {
    let px = p_tilde() * x.as_vector();
    Matrix4::identity() - px * px.transpose()
}

/// Dense normal projector, computed directly as `Ptilde x x^T Ptilde`.
pub fn normal_projector(x: &Pudq) -> Matrix4<f64> {
    let px = p_tilde() * x.as_vector();
    px * px.transpose()
}

/// Logarithm map at the identity element. Defined for any 4-vector whose
/// rotation part is nonzero; on the manifold this is `(1/sinc(phi)) v_{1:3}`
/// with `phi` the wrapped half-angle.
pub fn log_identity(x: &Pudq) -> Vector3<f64> {
    let v = x.as_vector();
    let phi = wrap_half_angle(v[1].atan2(v[0]));
    let g = recip_sinc(phi);
    Vector3::new(g * v[1], g * v[2], g * v[3])
}

/// Exponential map at the identity element. Round-trips with
/// [`log_identity`] exactly when `|v[0]| <= pi/2`, the image of the log.
pub fn exp_identity(v: &Vector3<f64>) -> Pudq {
    let g = sinc(v[0]);
    Pudq::new(v[0].cos(), g * v[0], g * v[1], g * v[2])
}

/// Pointwise logarithm: left-translate the identity log to `x`.
pub fn log_at(x: &Pudq, y: &Pudq) -> TangentVec {
    let w = log_identity(&x.inverse().compose(y));
    let lifted = hamilton(
        x.as_vector(),
        &Vector4::new(0.0, w[0], w[1], w[2]),
    );
    TangentVec {
        vec: lifted,
        base: *x,
    }
}

/// Pointwise exponential. The input is projected onto the tangent space at
/// `x` before the identity-chart slice, so numerically drifted vectors are
/// handled; use [`exp_at_with_defect`] to observe the discarded magnitude.
pub fn exp_at(x: &Pudq, v: &TangentVec) -> Pudq {
    exp_at_with_defect(x, v).0
}

/// Same as [`exp_at`], also returning the magnitude of the non-tangent
/// component that the projection discarded.
pub fn exp_at_with_defect(x: &Pudq, v: &TangentVec) -> (Pudq, f64) {
    let defect = {
        let xv = x.as_vector();
        (xv[0] * v.vec[0] + xv[1] * v.vec[1]).abs()
    };
    let proj = project_tangent(x, &v.vec);
    let w = hamilton(&x.inverse().into_vector(), &proj.vec);
    // First component of w is exactly zero after projection.
    let exp = exp_identity(&Vector3::new(w[1], w[2], w[3]));
    (x.compose(&exp), defect)
}

/// Parallel transport of a tangent vector from `x` to `y` by group
/// translation. This is an isometry of the group-invariant tangent metric:
/// the identity-chart coordinates `x^{-1} ⊞ u` are preserved verbatim.
pub fn parallel_transport(x: &Pudq, y: &Pudq, u: &TangentVec) -> TangentVec {
    let chart = hamilton(&x.inverse().into_vector(), &u.vec);
    TangentVec {
        vec: hamilton(y.as_vector(), &chart),
        base: *y,
    }
}

/// Identity-chart coordinates of a tangent vector, `x^{-1} ⊞ u`. The group
/// metric pairs tangent vectors through these coordinates.
pub fn chart_coordinates(u: &TangentVec) -> Vector4<f64> {
    hamilton(&u.base.inverse().into_vector(), &u.vec)
}

/// Weingarten map `-P_x Ptilde u (x^T w)` for tangent `u` and normal `w`.
pub fn weingarten(x: &Pudq, u: &TangentVec, w: &Vector4<f64>) -> TangentVec {
    let s = x.as_vector().dot(w);
    let pu = p_tilde() * u.vec;
    let proj = project_tangent(x, &pu);
    TangentVec {
        vec: -s * proj.vec,
        base: *x,
    }
}

/// A point on the N-fold product manifold, stored blockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    poses: Vec<Pudq>,
}

impl ProductPoint {
    pub fn new(poses: Vec<Pudq>) -> Self {
        ProductPoint { poses }
    }

    pub fn identity(n: usize) -> Self {
        ProductPoint {
            poses: vec![Pudq::identity(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn pose(&self, i: usize) -> &Pudq {
        &self.poses[i]
    }

    pub fn pose_mut(&mut self, i: usize) -> &mut Pudq {
        &mut self.poses[i]
    }

    pub fn poses(&self) -> &[Pudq] {
        &self.poses
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(4 * self.poses.len());
        for (i, p) in self.poses.iter().enumerate() {
            v.fixed_rows_mut::<4>(4 * i).copy_from(p.as_vector());
        }
        v
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        if v.len() % 4 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 4 * (v.len() / 4 + 1),
                found: v.len(),
            });
        }
        let poses = (0..v.len() / 4)
            .map(|i| Pudq::from_vector(v.fixed_rows::<4>(4 * i).into_owned()))
            .collect();
        Ok(ProductPoint { poses })
    }

    /// Blockwise exponential map.
    pub fn exp(&self, s: &ProductTangent) -> Result<ProductPoint> {
        if s.len() != 4 * self.len() {
            return Err(Error::DimensionMismatch {
                expected: 4 * self.len(),
                found: s.len(),
            });
        }
        let poses = self
            .poses
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let blk = s.block(i);
                exp_at(x, &TangentVec::new_unchecked(blk, *x))
            })
            .collect();
        Ok(ProductPoint { poses })
    }

    /// Blockwise logarithm map.
    pub fn log(&self, other: &ProductPoint) -> Result<ProductTangent> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut out = ProductTangent::zeros(self.len());
        for i in 0..self.len() {
            let t = log_at(&self.poses[i], &other.poses[i]);
            out.set_block(i, t.ambient());
        }
        Ok(out)
    }

    /// Geodesic distance `sqrt(sum_i ||Log_1(x_i^{-1} ⊞ y_i)||^2)`.
    pub fn distance(&self, other: &ProductPoint) -> Result<f64> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut acc = 0.0;
        for (x, y) in self.poses.iter().zip(other.poses.iter()) {
            acc += log_identity(&x.inverse().compose(y)).norm_squared();
        }
        Ok(acc.sqrt())
    }

    /// Largest unit-constraint defect over all blocks.
    pub fn max_constraint_defect(&self) -> f64 {
        self.poses
            .iter()
            .map(|p| p.constraint_defect().abs())
            .fold(0.0, f64::max)
    }
}

/// A stacked 4N tangent vector on the product manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTangent {
    data: DVector<f64>,
}

impl ProductTangent {
    pub fn zeros(n: usize) -> Self {
        ProductTangent {
            data: DVector::zeros(4 * n),
        }
    }

    pub fn from_dvector(data: DVector<f64>) -> Self {
        ProductTangent { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn block(&self, i: usize) -> Vector4<f64> {
        self.data.fixed_rows::<4>(4 * i).into_owned()
    }

    pub fn set_block(&mut self, i: usize, v: &Vector4<f64>) {
        self.data.fixed_rows_mut::<4>(4 * i).copy_from(v);
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }
}

/// Project an ambient 4N vector blockwise onto the product tangent space at
/// `x`, zeroing the anchored block when present.
pub fn project_product(x: &ProductPoint, v: &DVector<f64>, anchor: Option<usize>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for i in 0..x.len() {
        if Some(i) == anchor {
            continue;
        }
        let blk = v.fixed_rows::<4>(4 * i).into_owned();
        let p = project_tangent(x.pose(i), &blk);
        out.fixed_rows_mut::<4>(4 * i).copy_from(p.ambient());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pudq::{from_euclidean, EuclideanPose};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn pose_strategy() -> impl Strategy<Value = Pudq> {
        (-4.0f64..4.0, -4.0f64..4.0, (-PI + 1e-9)..PI)
            .prop_map(|(tx, ty, th)| from_euclidean(&EuclideanPose::new(tx, ty, th)))
    }

    #[test]
    fn projector_examples_at_identity() {
        let id = Pudq::identity();
        let e0 = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let e2 = Vector4::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(*project_tangent(&id, &e0).ambient(), Vector4::zeros());
        assert_eq!(*project_tangent(&id, &e2).ambient(), e2);
    }

    #[test]
    fn projector_spectrum_is_zero_one_one_one() {
        let x = from_euclidean(&EuclideanPose::new(1.0, -2.0, 0.8));
        let p = projector(&x);
        let mut eigs: Vec<f64> = p.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        assert_relative_eq!(eigs[0], 0.0, epsilon = 1e-10);
        for &e in &eigs[1..] {
            assert_relative_eq!(e, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn log_identity_examples() {
        assert_eq!(log_identity(&Pudq::identity()), Vector3::zeros());
        let rot = Pudq::new(FRAC_PI_4.cos(), FRAC_PI_4.sin(), 0.0, 0.0);
        assert_relative_eq!(
            log_identity(&rot),
            Vector3::new(FRAC_PI_4, 0.0, 0.0),
            epsilon = 1e-15
        );
        let trans = Pudq::new(1.0, 0.0, 1.0, 0.0);
        assert_eq!(log_identity(&trans), Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn exp_identity_examples() {
        assert_eq!(exp_identity(&Vector3::zeros()), Pudq::identity());
        let v = Vector3::new(FRAC_PI_4, 0.0, 0.0);
        let x = exp_identity(&v);
        assert_relative_eq!(
            x.as_vector(),
            &Vector4::new(FRAC_PI_4.cos(), FRAC_PI_4.sin(), 0.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn log_at_identity_base_stacks_the_chart() {
        let y = from_euclidean(&EuclideanPose::new(0.5, 0.2, -1.1));
        let t = log_at(&Pudq::identity(), &y);
        let l = log_identity(&y);
        assert_relative_eq!(
            t.ambient(),
            &Vector4::new(0.0, l[0], l[1], l[2]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn log_at_self_is_zero() {
        let x = from_euclidean(&EuclideanPose::new(-1.0, 3.0, 2.2));
        assert!(log_at(&x, &x).norm() <= 1e-15);
    }

    #[test]
    fn log_continuity_across_the_wrap_seam() {
        // Rotation part approaching (-1, 0) from both sides; the two one-sided
        // log values must converge to the same limit (0, d2, d3).
        let (d2, d3) = (0.7, -0.4);
        let mut delta = 1e-4f64;
        while delta >= 1e-10 {
            let above = Pudq::new(-(delta.cos()), delta.sin(), d2, d3);
            let below = Pudq::new(-(delta.cos()), -delta.sin(), d2, d3);
            let la = log_identity(&above);
            let lb = log_identity(&below);
            let gap = (la - lb).norm();
            assert!(gap <= 4.0 * delta + 1e-14, "gap {gap} at delta {delta}");
            let limit = Vector3::new(0.0, d2, d3);
            assert!((la - limit).norm() <= 4.0 * delta + 1e-14);
            delta /= 10.0;
        }
    }

    #[test]
    fn exp_stays_on_manifold_for_large_tangents() {
        let x = from_euclidean(&EuclideanPose::new(2.0, 1.0, 0.4));
        for k in 0..20 {
            let raw = Vector4::new(0.0, 0.3 * k as f64, -0.5 * k as f64, 0.25 * k as f64);
            let v = project_tangent(&x, &(raw * 0.5));
            let y = exp_at(&x, &v);
            assert!(y.constraint_defect().abs() <= 1e-10);
        }
    }

    #[test]
    fn transport_preserves_chart_inner_products() {
        let x = from_euclidean(&EuclideanPose::new(0.3, -0.8, 1.9));
        let y = from_euclidean(&EuclideanPose::new(-2.0, 0.1, -0.6));
        let u = project_tangent(&x, &Vector4::new(0.2, -0.1, 0.9, 0.4));
        let w = project_tangent(&x, &Vector4::new(-0.5, 0.8, 0.0, -1.2));
        let tu = parallel_transport(&x, &y, &u);
        let tw = parallel_transport(&x, &y, &w);
        // Transported vectors are tangent at the destination.
        assert!(tu.tangency_defect().abs() <= 1e-12);
        // The identity-chart coordinates are preserved verbatim, so the group
        // metric's inner products are exact.
        let before = chart_coordinates(&u).dot(&chart_coordinates(&w));
        let after = chart_coordinates(&tu).dot(&chart_coordinates(&tw));
        assert_relative_eq!(before, after, epsilon = 1e-12);
    }

    #[test]
    fn transport_at_same_point_is_identity() {
        let x = from_euclidean(&EuclideanPose::new(1.0, 2.0, -0.4));
        let u = project_tangent(&x, &Vector4::new(0.3, 0.3, -0.7, 0.2));
        let t = parallel_transport(&x, &x, &u);
        assert_relative_eq!(t.ambient(), u.ambient(), epsilon = 1e-13);
    }

    #[test]
    fn transport_from_identity_is_left_translation() {
        let y = from_euclidean(&EuclideanPose::new(0.4, 0.4, 1.0));
        let u = TangentVec::new_unchecked(Vector4::new(0.0, 0.2, -0.3, 0.5), Pudq::identity());
        let t = parallel_transport(&Pudq::identity(), &y, &u);
        assert_relative_eq!(
            t.ambient(),
            &hamilton(y.as_vector(), u.ambient()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn weingarten_examples() {
        let x = from_euclidean(&EuclideanPose::new(0.7, -0.2, 0.9));
        let u = project_tangent(&x, &Vector4::new(0.5, 0.1, -0.4, 0.8));
        assert_eq!(weingarten(&x, &u, &Vector4::zeros()).norm(), 0.0);
        // Linearity in the normal argument.
        let w = normal_projector(&x) * Vector4::new(0.3, -0.9, 0.2, 0.1);
        let a = 2.75;
        let lhs = weingarten(&x, &u, &(a * w));
        let rhs = weingarten(&x, &u, &w);
        assert_relative_eq!(lhs.ambient(), &(a * rhs.ambient()), epsilon = 1e-13);
    }

    #[test]
    fn geodesic_distance_examples() {
        let x = ProductPoint::new(vec![Pudq::identity()]);
        assert_eq!(x.distance(&x).unwrap(), 0.0);
        // Pure rotations theta_x = 0, theta_y = pi/2 are pi/4 apart in the
        // half-angle metric.
        let y = ProductPoint::new(vec![from_euclidean(&EuclideanPose::new(0.0, 0.0, FRAC_PI_2))]);
        assert_relative_eq!(x.distance(&y).unwrap(), FRAC_PI_4, epsilon = 1e-14);
    }

    #[test]
    fn product_ops_are_blockwise() {
        let xs = ProductPoint::new(vec![
            from_euclidean(&EuclideanPose::new(0.0, 0.0, 0.0)),
            from_euclidean(&EuclideanPose::new(1.0, 0.0, 0.3)),
            from_euclidean(&EuclideanPose::new(1.0, 1.0, -0.7)),
            from_euclidean(&EuclideanPose::new(0.0, 1.0, 1.4)),
            from_euclidean(&EuclideanPose::new(-1.0, 1.0, 2.0)),
        ]);
        let mut s = ProductTangent::zeros(5);
        for i in 0..5 {
            let raw = Vector4::new(0.1 * i as f64, -0.2, 0.3, 0.05 * i as f64);
            let p = project_tangent(xs.pose(i), &raw);
            s.set_block(i, p.ambient());
        }
        let moved = xs.exp(&s).unwrap();
        for i in 0..5 {
            let single = exp_at(
                xs.pose(i),
                &TangentVec::new_unchecked(s.block(i), *xs.pose(i)),
            );
            assert_relative_eq!(moved.pose(i).as_vector(), single.as_vector(), epsilon = 1e-14);
        }
        // Zero tangent is a fixed point.
        let fixed = xs.exp(&ProductTangent::zeros(5)).unwrap();
        for i in 0..5 {
            assert!(fixed.pose(i).same_motion(xs.pose(i), 1e-12));
        }
    }

    #[test]
    fn product_dimension_mismatch_errors() {
        let xs = ProductPoint::identity(3);
        assert!(matches!(
            xs.exp(&ProductTangent::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            xs.distance(&ProductPoint::identity(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(x in pose_strategy(), raw in proptest::array::uniform4(-2.0f64..2.0)) {
            let u = Vector4::from_column_slice(&raw);
            let once = project_tangent(&x, &u);
            let twice = project_tangent(&x, once.ambient());
            prop_assert!((once.ambient() - twice.ambient()).norm() <= 1e-12);
            prop_assert!(once.tangency_defect().abs() <= 1e-10);
        }

        #[test]
        fn identity_round_trip_from_tangents(
            v1 in -1.5f64..1.5, v2 in -3.0f64..3.0, v3 in -3.0f64..3.0,
        ) {
            // |v1| < pi/2 keeps us in the image of the identity log.
            let v = Vector3::new(v1, v2, v3);
            let back = log_identity(&exp_identity(&v));
            prop_assert!((back - v).norm() <= 1e-12);
        }

        #[test]
        fn pointwise_round_trip(x in pose_strategy(), tx in -3.0f64..3.0, ty in -3.0f64..3.0, dth in (-PI + 1e-6)..(PI - 1e-6)) {
            // Build y so the relative element stays in the principal domain of
            // the identity chart.
            let rel = from_euclidean(&EuclideanPose::new(tx, ty, dth));
            let y = x.compose(&rel);
            let v = log_at(&x, &y);
            let back = exp_at(&x, &v);
            prop_assert!(back.same_motion(&y, 1e-10));
        }

        #[test]
        fn transport_is_chart_isometry(x in pose_strategy(), y in pose_strategy(), raw in proptest::array::uniform4(-2.0f64..2.0)) {
            let u = project_tangent(&x, &Vector4::from_column_slice(&raw));
            let t = parallel_transport(&x, &y, &u);
            let cu = chart_coordinates(&u);
            let ct = chart_coordinates(&t);
            prop_assert!((cu - ct).norm() <= 1e-12 * (1.0 + cu.norm()));
            prop_assert!(t.tangency_defect().abs() <= 1e-10);
        }

        #[test]
        fn distance_is_symmetric(x in pose_strategy(), y in pose_strategy()) {
            let a = ProductPoint::new(vec![x]);
            let b = ProductPoint::new(vec![y]);
            let d1 = a.distance(&b).unwrap();
            let d2 = b.distance(&a).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12 * (1.0 + d1));
        }
    }
}
