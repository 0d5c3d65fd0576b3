//! Dispersion relation of the lattice on the momentum torus.
//!
//! `omega(p) = |sin(p/2)|` with group velocity `v(p) = omega'(p) = cos(p/2)/2`
//! and `v'(p) = -sin(p/2)/4`. Momenta are reduced to a canonical
//! representative before evaluation, and the weight powers `omega^l` used by
//! the weighted norms live here as well.

use crate::error::{Error, Result};
use std::f64::consts::TAU;

/// Canonical momentum representative.
///
/// Values already in the closed interval `[0, 2pi]` are kept as-is: the
/// endpoint `2pi` is a distinct representative from `0` for the group
/// velocity, which jumps across the kink of `omega` at the origin.
/// Everything else is wrapped into `[0, 2pi)`.
#[inline]
pub fn reduce(p: f64) -> f64 {
    if (0.0..=TAU).contains(&p) {
        p
    } else {
        let r = p.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }
}

/// `omega` evaluated on an already-reduced representative. Hot paths use this
/// directly; the checked entry points below validate their input first.
#[inline]
pub(crate) fn omega_reduced(p: f64) -> f64 {
    (0.5 * p).sin().abs()
}

/// Dispersion relation `omega(p) = |sin(p/2)|`, in `[0, 1]`.
pub fn omega(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument(format!("omega: p = {p}")));
    }
    Ok(omega_reduced(reduce(p)))
}

/// Group velocity `v(p) = cos(p/2)/2`, in `[-1/2, 1/2]`.
///
/// At the kink `p = 0` this is the one-sided value `1/2`; the representative
/// `2pi` gives `-1/2`, so `v` is strictly decreasing across `[0, 2pi]`.
pub fn group_velocity(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument(format!("group_velocity: p = {p}")));
    }
    Ok(0.5 * (0.5 * reduce(p)).cos())
}

/// Derivative of the group velocity, `v'(p) = -sin(p/2)/4`.
///
/// Vanishes only at `p = 0` and `p = 2pi` (simple zeros).
pub fn velocity_derivative(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "velocity_derivative: p = {p}"
        )));
    }
    Ok(-0.25 * (0.5 * reduce(p)).sin())
}

/// Momentum weight `omega(p)^l`.
///
/// Negative powers are an error where `omega` vanishes exactly; quadrature
/// node placement keeps integrable negative weights away from the zero set.
pub fn weight_pow(p: f64, l: f64) -> Result<f64> {
    if !p.is_finite() || !l.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "weight_pow: p = {p}, l = {l}"
        )));
    }
    let w = omega_reduced(reduce(p));
    if l == 0.0 {
        return Ok(1.0);
    }
    if l < 0.0 && w == 0.0 {
        return Err(Error::WeightSingularity { p, l });
    }
    Ok(w.powf(l))
}

/// `omega^l` on an already-reduced momentum, without validation.
#[inline]
pub(crate) fn weight_pow_reduced(p: f64, l: f64) -> f64 {
    if l == 0.0 {
        1.0
    } else {
        omega_reduced(p).powf(l)
    }
}
