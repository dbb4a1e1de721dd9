//! Scalar kernels with series branches near their removable singularities.

/// `sin(phi) / phi`, with a Taylor branch below 1e-6 so the value and its
/// use in quotients stay smooth through phi = 0.
pub fn sinc(phi: f64) -> f64 {
    if phi.abs() < 1e-6 {
        let p2 = phi * phi;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        phi.sin() / phi
    }
}

/// `phi / sin(phi)`, same branch point as [`sinc`].
pub fn recip_sinc(phi: f64) -> f64 {
    if phi.abs() < 1e-6 {
        let p2 = phi * phi;
        1.0 + p2 / 6.0 + 7.0 * p2 * p2 / 360.0
    } else {
        phi / phi.sin()
    }
}

/// `(sin(phi) - phi cos(phi)) / sin(phi)^2`. Direct evaluation cancels
/// catastrophically near zero, so switch to the series below 1e-3.
pub fn f1(phi: f64) -> f64 {
    if phi.abs() < 1e-3 {
        let p2 = phi * phi;
        phi * (1.0 / 3.0 + p2 * (7.0 / 90.0 + p2 * (31.0 / 2520.0)))
    } else {
        let (s, c) = phi.sin_cos();
        (s - phi * c) / (s * s)
    }
}

/// Derivative of [`f1`] with respect to phi:
/// `(phi (1 + cos^2 phi) - 2 sin(phi) cos(phi)) / sin(phi)^3`.
pub fn f2(phi: f64) -> f64 {
    if phi.abs() < 1e-3 {
        let p2 = phi * phi;
        1.0 / 3.0 + p2 * (7.0 / 30.0 + p2 * (31.0 / 504.0))
    } else {
        let (s, c) = phi.sin_cos();
        (phi * (1.0 + c * c) - 2.0 * s * c) / (s * s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn series_branches_match_direct_evaluation() {
        // Compare the two branches just above the switch points, where the
        // direct formulas are still accurate.
        for &phi in &[2e-6f64, 1e-5, -3e-6] {
            assert_relative_eq!(sinc(phi), phi.sin() / phi, max_relative = 1e-14);
            assert_relative_eq!(recip_sinc(phi), phi / phi.sin(), max_relative = 1e-14);
        }
        for &phi in &[2e-3f64, 1e-2, -5e-3] {
            let direct = (phi.sin() - phi * phi.cos()) / (phi.sin() * phi.sin());
            assert_relative_eq!(f1(phi), direct, max_relative = 1e-10);
            let (s, c) = phi.sin_cos();
            let direct2 = (phi * (1.0 + c * c) - 2.0 * s * c) / (s * s * s);
            assert_relative_eq!(f2(phi), direct2, max_relative = 1e-8);
        }
    }

    #[test]
    fn values_at_zero_and_quarter_turn() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(recip_sinc(0.0), 1.0);
        assert_eq!(f1(0.0), 0.0);
        assert_relative_eq!(f2(0.0), 1.0 / 3.0);
        assert_relative_eq!(f1(FRAC_PI_2), 1.0, max_relative = 1e-14);
        assert_relative_eq!(f2(FRAC_PI_2), FRAC_PI_2, max_relative = 1e-14);
    }

    #[test]
    fn f2_is_derivative_of_f1() {
        for &phi in &[0.3, -0.9, 1.3, 5e-4] {
            let h = 1e-6;
            let fd = (f1(phi + h) - f1(phi - h)) / (2.0 * h);
            assert_relative_eq!(f2(phi), fd, max_relative = 1e-8);
        }
    }
}
