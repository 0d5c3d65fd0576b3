//! Free transport semigroup `S(t) f(x, p) = f(x - v(p) t, p)` and the
//! measurement of its dispersive decay in weighted mixed norms.
//!
//! Decay runs evaluate closed forms directly so the fitted exponents carry no
//! interpolation error; grid advection exists for the nonlinear solver.

use crate::dispersion::group_velocity;
use crate::error::{Error, Result};
use crate::grid::{ClosedForm, GridField};
use crate::norms::{mixed_norm_closed, mixed_norm_closed_unchecked, Exponent, NormSpec, QuadratureSpec};
use serde::Serialize;

/// Values above this fraction of the field maximum count as support when
/// checking what an advection would clip at the truncated boundary.
const SUPPORT_DETECT_RELATIVE: f64 = 1e-9;

/// `S(t)` applied to a closed-form field; the support radius grows by `|t|/2`
/// since `|v| <= 1/2`.
pub fn advect_closed_form(f0: &ClosedForm, t: f64) -> ClosedForm {
    let inner = f0.clone();
    ClosedForm::new(f0.support_radius() + 0.5 * t.abs(), move |x, p| {
        let v = group_velocity(p).expect("finite momentum");
        inner.eval(x - v * t, p)
    })
    .expect("support radius stays positive")
}

/// `S(t)` on a sampled field: per momentum node, resample along `x` at
/// `x - v(p_k) t`. Exact in `p`; errors if the occupied support would cross
/// the truncated boundary.
pub fn advect_grid(field: &GridField, t: f64) -> Result<GridField> {
    let sgrid = field.spatial();
    let mgrid = field.momentum();
    // Anything living within `shift` of the boundary can be carried across it
    // and silently clipped by the zero extension; reject that.
    let shift = 0.5 * t.abs();
    let threshold = field.max_abs() * SUPPORT_DETECT_RELATIVE;
    if shift > 0.0 && threshold > 0.0 {
        for j in 0..sgrid.len() {
            let x = sgrid.node(j);
            if (x - sgrid.x_min() <= shift || sgrid.x_max() - x <= shift)
                && field.slice(j).iter().any(|v| v.abs() > threshold)
            {
                return Err(Error::SupportOverflow { t });
            }
        }
    }
    let n_p = mgrid.len();
    let velocities: Vec<f64> = mgrid
        .nodes()
        .iter()
        .map(|&p| group_velocity(p).expect("finite node"))
        .collect();
    let mut out = GridField::zeros(sgrid.clone(), mgrid.clone());
    for j in 0..sgrid.len() {
        let x = sgrid.node(j);
        let row = j * n_p;
        for k in 0..n_p {
            out.values_mut()[row + k] = field.interp_x(x - velocities[k] * t, k);
        }
    }
    Ok(out)
}

/// One sampled time of a decay run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecaySample {
    pub t: f64,
    pub lhs: f64,
    /// `(t/4)^(-(1/q - 1/r)) * rhs` from the dispersive estimate.
    pub bound: f64,
    /// `lhs / bound`; certified `<= 1` up to quadrature slack.
    pub ratio: f64,
}

/// Log-log fit of a decay run.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub r: Exponent,
    pub q: Exponent,
    /// Weighted norm of the datum on the right-hand side.
    pub rhs: f64,
    pub samples: Vec<DecaySample>,
    /// Least-squares slope of `log lhs` against `log t`.
    pub exponent: f64,
    /// Predicted decay rate `-(1/q - 1/r)`.
    pub expected_exponent: f64,
    /// Max absolute deviation of `log lhs` from the fitted line.
    pub fit_residual: f64,
}

/// Default sample times, one decade starting where `(t/4) >= 1`.
pub const DECAY_TIMES: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

fn least_squares_slope(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = points
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0f64, f64::max);
    (slope, intercept, residual)
}

/// Measure `|| S(t) f0 ||_{L^r_x L^q_p}` over `times` and compare against the
/// weighted bound `(t/4)^(-(1/q-1/r)) || f0 ||_{L^q_x L^r_p(omega^(-(1/q-1/r)))}`.
///
/// Needs `q <= r` and a datum whose momentum factor vanishes at `omega = 0`
/// fast enough for the right-hand side to be finite.
pub fn measure_decay(
    f0: &ClosedForm,
    r: Exponent,
    q: Exponent,
    times: &[f64],
    quad: &QuadratureSpec,
) -> Result<DecayFit> {
    if q.value() > r.value() {
        return Err(Error::InvalidArgument(format!("decay measurement needs q <= r, got q = {q}, r = {r}")));
    }
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sample times".into()));
    }
    let decay = q.recip() - r.recip();
    // The negative weight on the right-hand side is integrable only because
    // the datum vanishes at omega = 0; bypass the exponent gate and check
    // finiteness by refinement stability instead.
    let rhs_spec = NormSpec::new(q, r, -decay);
    let rhs = mixed_norm_closed_unchecked(f0, &rhs_spec, quad)?;
    let finer = QuadratureSpec { nodes_per_unit_x: quad.nodes_per_unit_x, n_p: 2 * quad.n_p };
    let rhs_fine = mixed_norm_closed_unchecked(f0, &rhs_spec, &finer)?;
    if !rhs.is_finite() || (rhs_fine - rhs).abs() > 0.05 * rhs.abs() {
        return Err(Error::InvalidArgument(
            "divergent right-hand side weight norm for this datum".into(),
        ));
    }
    let lhs_spec = NormSpec::new(r, q, 0.0);
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let advected = advect_closed_form(f0, t);
        let lhs = mixed_norm_closed(&advected, &lhs_spec, quad)?;
        let bound = (0.25 * t).powf(-decay) * rhs;
        samples.push(DecaySample { t, lhs, bound, ratio: lhs / bound });
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t.ln(), s.lhs.ln())).collect();
    let (slope, _, residual) = least_squares_slope(&pts);
    Ok(DecayFit {
        r,
        q,
        rhs,
        samples,
        exponent: slope,
        expected_exponent: -decay,
        fit_residual: residual,
    })
}

/// Ratios `lhs * t^(1-1/q) / || f0 ||_{L^1_x L^(q+)_p}` for the unweighted
/// dyadic layer-set estimate, which needs `q+ > q`.
pub fn dyadic_ratios(
    f0: &ClosedForm,
    q: f64,
    q_plus: f64,
    times: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    if q_plus <= q {
        return Err(Error::InvalidArgument(format!(
            "dyadic estimate needs q+ > q, got q = {q}, q+ = {q_plus}"
        )));
    }
    let rhs_spec = NormSpec::new(Exponent::Finite(1.0), Exponent::finite(q_plus)?, 0.0);
    let rhs = mixed_norm_closed(f0, &rhs_spec, quad)?;
    let lhs_spec = NormSpec::new(Exponent::finite(q)?, Exponent::Finite(1.0), 0.0);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let advected = advect_closed_form(f0, t);
        let lhs = mixed_norm_closed(&advected, &lhs_spec, quad)?;
        out.push((t, lhs * t.powf(1.0 - 1.0 / q) / rhs));
    }
    Ok(out)
}
