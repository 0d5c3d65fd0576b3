//! Closed-form parametrization of the nontrivial resonant manifold.
//!
//! Four-phonon resonances are the joint zeros of
//! `Sigma = p0 + p1 - p2 - p3` (mod 2pi) and
//! `Omega = omega0 + omega1 - omega2 - omega3`.
//! On the nontrivial branch they are solved in closed form by
//! `p1 = h(p0, p2)`, `p3 = p0 + p1 - p2`, and this module carries `h`, the
//! kernel factor `F+`, the Jacobian of `(p0, p2) -> (p1, p3)`, and the
//! algebraic identities the harness certifies on grids.

use crate::dispersion::omega_reduced;
use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Floating-point slack allowed on the arcsin argument. The analytic bound
/// `|tan * cos| <= 1` is attained at two corners of `[0, 2pi]^2`, where
/// roundoff can push the evaluated product slightly past 1; larger excursions
/// indicate a genuine domain bug and are rejected.
pub const ARCSIN_CLAMP_TOL: f64 = 1e-9;

/// Floor for the Jacobian denominator `1 - cos^2 * tan^2`.
pub const JACOBIAN_FLOOR: f64 = 1e-14;

#[inline]
fn check_range(name: &str, p: f64) -> Result<f64> {
    if !p.is_finite() || !(-1e-12..=TAU + 1e-12).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 2pi], got {p}"
        )));
    }
    Ok(p.clamp(0.0, TAU))
}

/// Wrap to `[0, 2pi)`.
#[inline]
fn wrap(p: f64) -> f64 {
    let r = p.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wrap to `(-pi, pi]`; torus residuals are compared against zero there.
#[inline]
fn wrap_signed(p: f64) -> f64 {
    let r = p.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Nontrivial resonant solution `p1 = h(p0, p2)`, wrapped to `[0, 2pi)`.
///
/// `h(x, z) = (z - x)/2 + 2 asin(tan(|z - x|/4) cos((z + x)/4))`.
pub fn h(p0: f64, p2: f64) -> Result<f64> {
    let p0 = check_range("p0", p0)?;
    let p2 = check_range("p2", p2)?;
    if p0 == p2 {
        // tan(0) = 0, so the diagonal maps to 0 exactly.
        return Ok(0.0);
    }
    let arg = (0.25 * (p2 - p0).abs()).tan() * (0.25 * (p2 + p0)).cos();
    let arg = clamp_arcsin(arg)?;
    Ok(wrap(0.5 * (p2 - p0) + 2.0 * arg.asin()))
}

#[inline]
fn clamp_arcsin(arg: f64) -> Result<f64> {
    if arg.abs() <= 1.0 {
        Ok(arg)
    } else if arg.abs() <= 1.0 + ARCSIN_CLAMP_TOL {
        Ok(arg.signum())
    } else {
        Err(Error::ParametrizationDomain { arg })
    }
}

/// A resonant quadruple `(p0, p1, p2, p3)` with cached frequencies and the
/// residuals of both resonance functions.
#[derive(Debug, Clone, Copy)]
pub struct ResonantQuadruple {
    /// Momenta `[p0, p1, p2, p3]`, each in `[0, 2pi)` up to the `p0`, `p2`
    /// inputs which are kept as given in `[0, 2pi]`.
    pub p: [f64; 4],
    /// Frequencies `omega(p_j)`.
    pub w: [f64; 4],
    /// `Sigma` reduced mod 2pi to `(-pi, pi]`.
    pub sigma_residual: f64,
    /// `Omega` as computed from the cached frequencies.
    pub omega_residual: f64,
}

/// Solve the resonance relations for `(p0, p2)`.
pub fn quadruple(p0: f64, p2: f64) -> Result<ResonantQuadruple> {
    let p0 = check_range("p0", p0)?;
    let p2 = check_range("p2", p2)?;
    let p1 = h(p0, p2)?;
    let p3 = wrap(p0 + p1 - p2);
    let w = [
        omega_reduced(p0),
        omega_reduced(p1),
        omega_reduced(p2),
        omega_reduced(p3),
    ];
    Ok(ResonantQuadruple {
        p: [p0, p1, p2, p3],
        w,
        sigma_residual: wrap_signed(p0 + p1 - p2 - p3),
        omega_residual: w[0] + w[1] - w[2] - w[3],
    })
}

/// Kernel factor `F+(p0, p2) = (cos(p0/2) + cos(p2/2))^2 + 4 sin(p0/2) sin(p2/2)`.
///
/// Nonnegative on `[0, 2pi]^2` and bounded below by `4 omega0 omega2`, which
/// is what keeps the collision kernel `prod omega / sqrt(F+)` finite.
pub fn f_plus(p0: f64, p2: f64) -> Result<f64> {
    let p0 = check_range("p0", p0)?;
    let p2 = check_range("p2", p2)?;
    let c = (0.5 * p0).cos() + (0.5 * p2).cos();
    Ok(c * c + 4.0 * (0.5 * p0).sin() * (0.5 * p2).sin())
}

/// Jacobian determinant of `(p0, p2) -> (p1, p3)` on the resonant manifold:
///
/// `det J = sin((p0+p2)/4) tan(|p0-p2|/4) / sqrt(1 - cos^2((p0+p2)/4) tan^2(|p0-p2|/4))`.
pub fn jacobian_det(p0: f64, p2: f64) -> Result<f64> {
    let p0 = check_range("p0", p0)?;
    let p2 = check_range("p2", p2)?;
    let a = 0.25 * (p0 + p2);
    let t = (0.25 * (p0 - p2).abs()).tan();
    let ct = a.cos() * t;
    let den = 1.0 - ct * ct;
    if den < JACOBIAN_FLOOR {
        return Err(Error::NearDegenerateJacobian { p0, p2 });
    }
    Ok(a.sin() * t / den.sqrt())
}

/// Residual of the tangent resonance identity
/// `|omega1 omega3| = tan^2((p2-p0)/4) omega2 omega0`.
pub fn tan_identity_residual(p0: f64, p2: f64) -> Result<f64> {
    let q = quadruple(p0, p2)?;
    let t = (0.25 * (p2 - p0)).tan();
    Ok((q.w[1] * q.w[3] - t * t * q.w[2] * q.w[0]).abs())
}

/// Ratio `omega1 omega2 omega3 / omega0`, which the resonance bound keeps
/// below a uniform constant.
pub fn resonance_bound_ratio(p0: f64, p2: f64) -> Result<f64> {
    let q = quadruple(p0, p2)?;
    if q.w[0] == 0.0 {
        return Err(Error::WeightSingularity { p: q.p[0], l: -1.0 });
    }
    Ok(q.w[1] * q.w[2] * q.w[3] / q.w[0])
}

/// Ratio `|omega1 omega3 / det J|`; bounded on the whole square even though
/// both factors degenerate separately near the corners.
pub fn jacobian_weight_ratio(p0: f64, p2: f64) -> Result<f64> {
    let q = quadruple(p0, p2)?;
    let det = jacobian_det(p0, p2)?;
    Ok((q.w[1] * q.w[3] / det).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn h_vanishes_on_diagonal() {
        for x in [0.0, 0.7, 1.3, PI, 4.9, TAU] {
            assert_eq!(h(x, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn h_at_zero_is_identity() {
        for z in [0.1, 1.0, PI, 4.0, 6.0] {
            assert!((h(0.0, z).unwrap() - z).abs() < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn h_corner_limit_via_clamp() {
        // |p2 - p0| = 2pi hits the tan singularity; the clamped arcsin gives
        // the limit value, and the quadruple is still resonant.
        let q = quadruple(0.0, TAU).unwrap();
        assert!(q.sigma_residual.abs() < 1e-10);
        assert!(q.omega_residual.abs() < 1e-10);
    }

    #[test]
    fn quadruple_reference_points() {
        let q = quadruple(PI, PI).unwrap();
        assert_eq!(q.p[1], 0.0);
        assert_eq!(q.p[3], 0.0);
        assert!(q.sigma_residual.abs() < 1e-12);
        assert!(q.omega_residual.abs() < 1e-12);

        let q = quadruple(0.0, 1.0).unwrap();
        assert!((q.p[1] - 1.0).abs() < 1e-13);
        assert!(q.p[3].abs() < 1e-13 || (q.p[3] - TAU).abs() < 1e-13);

        let q = quadruple(2.0, 0.7).unwrap();
        assert!(q.sigma_residual.abs() < 1e-10);
        assert!(q.omega_residual.abs() < 1e-10);
    }

    #[test]
    fn half_pi_pair_solves_in_closed_form() {
        // (pi/2, 3pi/2): the arcsin argument vanishes, so p1 = pi/2 and
        // p3 = 3pi/2 with both residuals zero.
        let q = quadruple(PI / 2.0, 3.0 * PI / 2.0).unwrap();
        assert!((q.p[1] - PI / 2.0).abs() < 1e-14);
        assert!((q.p[3] - 3.0 * PI / 2.0).abs() < 1e-14);
        assert!(q.omega_residual.abs() < 1e-15);
    }

    #[test]
    fn f_plus_reference_values() {
        assert!((f_plus(PI, PI).unwrap() - 4.0).abs() < 1e-14);
        assert!((f_plus(0.0, 0.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(f_plus(0.0, TAU).unwrap().abs() < 1e-14);
    }

    #[test]
    fn jacobian_reference_values() {
        assert_eq!(jacobian_det(1.0, 1.0).unwrap(), 0.0);
        assert!((jacobian_det(PI / 2.0, 3.0 * PI / 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_rejects_degenerate_corner() {
        assert!(matches!(
            jacobian_det(0.0, TAU),
            Err(Error::NearDegenerateJacobian { .. })
        ));
    }

    #[test]
    fn tan_identity_reference_points() {
        assert!(tan_identity_residual(PI, PI).unwrap() < 1e-14);
        assert!(tan_identity_residual(1.0, 2.0).unwrap() < 1e-10);
        assert!(tan_identity_residual(0.3, 5.0).unwrap() < 1e-10);
    }

    #[test]
    fn resonance_bound_ratio_vanishes_on_diagonal() {
        assert_eq!(resonance_bound_ratio(PI, PI).unwrap(), 0.0);
        assert_eq!(resonance_bound_ratio(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn jacobian_weight_ratio_bounded_near_corner() {
        // Corner (0, 2pi) along epsilon, s in {1e-1, 1e-2, 1e-3}.
        for eps in [1e-1, 1e-2, 1e-3] {
            for s in [1e-1, 1e-2, 1e-3] {
                let r = jacobian_weight_ratio(eps, TAU - s).unwrap();
                assert!(r.is_finite() && r < 10.0, "eps={eps} s={s}: {r}");
            }
        }
    }

    proptest! {
        #[test]
        fn residuals_small_on_random_pairs(p0 in 0.0f64..TAU, p2 in 0.0f64..TAU) {
            let q = quadruple(p0, p2).unwrap();
            prop_assert!(q.sigma_residual.abs() <= 1e-10);
            prop_assert!(q.omega_residual.abs() <= 1e-10);
        }

        #[test]
        fn f_plus_dominates_four_omega(p0 in 0.0f64..TAU, p2 in 0.0f64..TAU) {
            let fp = f_plus(p0, p2).unwrap();
            let w0 = omega_reduced(p0);
            let w2 = omega_reduced(p2);
            prop_assert!(fp - 4.0 * w0 * w2 >= -1e-12);
        }
    }
}
