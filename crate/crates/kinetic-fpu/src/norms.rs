//! Weighted mixed Lebesgue norms `|| omega^l f ||_{L^r_x L^q_p}` and the
//! dispersive control norm built from them.
//!
//! The inner momentum integral uses the midpoint rule (which never touches
//! the zero set of `omega`), the outer spatial integral the trapezoid rule;
//! infinity-exponents are grid maxima and therefore lower bounds of the true
//! sup.

use crate::dispersion::weight_pow_reduced;
use crate::error::{Error, Result};
use crate::grid::{ClosedForm, GridField, MomentumGrid, PhaseField, SpatialGrid};
use serde::Serialize;

/// A Lebesgue exponent in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidArgument(format!("exponent must be >= 1, got {q}")));
        }
        Ok(Exponent::Finite(q))
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(q) => q,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/q`, with `1/inf = 0`.
    #[inline]
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(q) => 1.0 / q,
            Exponent::Infinity => 0.0,
        }
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Descriptor of a weighted mixed norm: outer exponent `r` in `x`, inner
/// exponent `q` in `p`, weight power `l`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormSpec {
    pub r: Exponent,
    pub q: Exponent,
    pub l: f64,
}

impl NormSpec {
    pub fn new(r: Exponent, q: Exponent, l: f64) -> Self {
        Self { r, q, l }
    }

    /// Integrability of the weight alone: `l*q > -1` for finite `q`.
    pub fn admissible(&self) -> Result<()> {
        if let Exponent::Finite(q) = self.q {
            if self.l * q <= -1.0 {
                return Err(Error::DivergentNorm { l: self.l, q });
            }
        }
        Ok(())
    }
}

/// Weighted `L^q_p` norm of a momentum sample vector by the midpoint rule.
///
/// No admissibility gate: the discrete value is always finite, and callers
/// probing norms of functions that vanish at `omega = 0` rely on that.
pub fn weighted_lq_p(samples: &[f64], grid: &MomentumGrid, l: f64, q: Exponent) -> f64 {
    let weights: Vec<f64> = grid.nodes().iter().map(|&p| weight_pow_reduced(p, l)).collect();
    weighted_lq_p_with(samples, grid, &weights, q)
}

#[inline]
fn weighted_lq_p_with(samples: &[f64], grid: &MomentumGrid, weights: &[f64], q: Exponent) -> f64 {
    match q {
        Exponent::Infinity => samples
            .iter()
            .zip(weights)
            .fold(0.0f64, |m, (&v, &w)| m.max((v * w).abs())),
        Exponent::Finite(1.0) => {
            samples.iter().zip(weights).map(|(&v, &w)| (v * w).abs()).sum::<f64>()
                * grid.cell_width()
        }
        Exponent::Finite(q) => {
            let s: f64 = samples
                .iter()
                .zip(weights)
                .map(|(&v, &w)| (v * w).abs().powf(q))
                .sum();
            (s * grid.cell_width()).powf(1.0 / q)
        }
    }
}

/// Reduce per-`x` inner norms with the outer exponent `r`.
fn outer_reduce(inner: &[f64], sgrid: &SpatialGrid, r: Exponent) -> f64 {
    match r {
        Exponent::Infinity => inner.iter().fold(0.0f64, |m, &v| m.max(v)),
        Exponent::Finite(1.0) => sgrid.integrate(inner),
        Exponent::Finite(r) => {
            let powered: Vec<f64> = inner.iter().map(|&v| v.powf(r)).collect();
            sgrid.integrate(&powered).powf(1.0 / r)
        }
    }
}

/// Quadrature resolution for closed-form fields.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Spatial nodes per unit length (the grid spans the support symmetrically).
    pub nodes_per_unit_x: f64,
    pub n_p: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes_per_unit_x: 16.0, n_p: 1024 }
    }
}

impl QuadratureSpec {
    pub fn grids(&self, support_radius: f64) -> Result<(SpatialGrid, MomentumGrid)> {
        let n_half = (support_radius * self.nodes_per_unit_x).ceil() as usize;
        Ok((
            SpatialGrid::symmetric(support_radius, n_half.max(8))?,
            MomentumGrid::new(self.n_p)?,
        ))
    }
}

/// `|| omega^l f ||_{L^r_x L^q_p}` of a sampled field.
pub fn mixed_norm_grid(field: &GridField, spec: &NormSpec) -> Result<f64> {
    spec.admissible()?;
    let mgrid = field.momentum();
    let weights: Vec<f64> = mgrid.nodes().iter().map(|&p| weight_pow_reduced(p, spec.l)).collect();
    let inner: Vec<f64> = (0..field.spatial().len())
        .map(|j| weighted_lq_p_with(field.slice(j), mgrid, &weights, spec.q))
        .collect();
    Ok(outer_reduce(&inner, field.spatial(), spec.r))
}

/// `|| omega^l f ||_{L^r_x L^q_p}` of a closed-form field at a given
/// quadrature resolution. Rows are evaluated on the fly, so arbitrarily fine
/// grids cost no memory.
pub fn mixed_norm_closed(field: &ClosedForm, spec: &NormSpec, quad: &QuadratureSpec) -> Result<f64> {
    spec.admissible()?;
    mixed_norm_closed_unchecked(field, spec, quad)
}

/// Same as [`mixed_norm_closed`] without the weight admissibility gate.
///
/// The gate assumes nothing about the field; data that vanish at `omega = 0`
/// faster than the weight blows up have finite norms the gate would reject.
/// Callers are responsible for checking that the quadrature value is stable
/// under refinement.
pub fn mixed_norm_closed_unchecked(
    field: &ClosedForm,
    spec: &NormSpec,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let (sgrid, mgrid) = quad.grids(field.support_radius())?;
    let weights: Vec<f64> = mgrid.nodes().iter().map(|&p| weight_pow_reduced(p, spec.l)).collect();
    let mut row = vec![0.0; mgrid.len()];
    let inner: Vec<f64> = (0..sgrid.len())
        .map(|j| {
            let x = sgrid.node(j);
            for (k, v) in row.iter_mut().enumerate() {
                *v = field.eval(x, mgrid.node(k));
            }
            weighted_lq_p_with(&row, &mgrid, &weights, spec.q)
        })
        .collect();
    Ok(outer_reduce(&inner, &sgrid, spec.r))
}

/// `|| omega^l f ||_{L^r_x L^q_p}` with default closed-form quadrature.
pub fn mixed_norm(field: &PhaseField, spec: &NormSpec) -> Result<f64> {
    match field {
        PhaseField::Grid(g) => mixed_norm_grid(g, spec),
        PhaseField::Closed(c) => mixed_norm_closed(c, spec, &QuadratureSpec::default()),
    }
}

/// `<t> = (1 + t^2)^(1/2)`.
#[inline]
pub fn t_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// Weight exponents of the dispersive control norm. The four components are
/// `(inf, inf, alpha)`, `(1, 1, 0)`, `(2, 1, beta)`, `(inf, 2, gamma)` with
/// time weights `(1, 1, <t>^(1/2), <t>^(1/2))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XNormSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for XNormSpec {
    fn default() -> Self {
        Self { alpha: 0.0, beta: 0.5, gamma: 0.0 }
    }
}

impl XNormSpec {
    /// Structural constraints for long-time runs: either
    /// `-1/2 <= alpha <= min(gamma, 1/2)` with `0 <= gamma < 1/2`, or
    /// `alpha < -1/2` with `0 <= gamma <= min(1/2, alpha + 3/2)`;
    /// `beta` is pinned to `1/2`.
    pub fn validate(&self) -> Result<()> {
        let Self { alpha, beta, gamma } = *self;
        if beta != 0.5 {
            return Err(Error::Config(format!("beta must be 1/2 in long-time runs, got {beta}")));
        }
        let branch1 = (-0.5..=gamma.min(0.5)).contains(&alpha) && (0.0..0.5).contains(&gamma);
        let branch2 = alpha < -0.5 && (0.0..=(0.5f64).min(alpha + 1.5)).contains(&gamma);
        if branch1 || branch2 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "weight exponents (alpha, gamma) = ({alpha}, {gamma}) violate the structural conditions"
            )))
        }
    }

    pub fn component_specs(&self) -> [NormSpec; 4] {
        [
            NormSpec::new(Exponent::Infinity, Exponent::Infinity, self.alpha),
            NormSpec::new(Exponent::Finite(1.0), Exponent::Finite(1.0), 0.0),
            NormSpec::new(Exponent::Finite(2.0), Exponent::Finite(1.0), self.beta),
            NormSpec::new(Exponent::Infinity, Exponent::Finite(2.0), self.gamma),
        ]
    }

    /// Per-component time weights at time `t`.
    pub fn time_weights(t: f64) -> [f64; 4] {
        let w = t_bracket(t).sqrt();
        [1.0, 1.0, w, w]
    }
}

/// Value of the dispersive control norm over a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XNormValue {
    /// Sum of the four component sups.
    pub total: f64,
    /// Sup over the trajectory of each time-weighted component.
    pub components: [f64; 4],
}

/// Evaluate the control norm on a trajectory of `(t, field)` snapshots.
pub fn x_norm(trajectory: &[(f64, PhaseField)], spec: &XNormSpec) -> Result<XNormValue> {
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument("x_norm needs a nonempty trajectory".into()));
    }
    let mut prev = f64::NEG_INFINITY;
    for &(t, _) in trajectory {
        if t < prev {
            return Err(Error::InvalidArgument("x_norm needs nondecreasing times".into()));
        }
        prev = t;
    }
    let specs = spec.component_specs();
    let mut components = [0.0f64; 4];
    for (t, field) in trajectory {
        let tw = XNormSpec::time_weights(*t);
        for (i, ns) in specs.iter().enumerate() {
            components[i] = components[i].max(tw[i] * mixed_norm(field, ns)?);
        }
    }
    Ok(XNormValue { total: components.iter().sum(), components })
}

/// A single evaluated norm, in the JSON shape reports carry.
#[derive(Debug, Clone, Serialize)]
pub struct NormRecord {
    pub spec: NormSpec,
    pub value: f64,
    /// `(n_x, n_p)` of the evaluation grid.
    pub grid: (usize, usize),
    pub time: f64,
}

impl NormRecord {
    pub fn of_grid(field: &GridField, spec: NormSpec, time: f64) -> Result<Self> {
        Ok(Self {
            spec,
            value: mixed_norm_grid(field, &spec)?,
            grid: (field.spatial().len(), field.momentum().len()),
            time,
        })
    }
}

/// Ratio `|| omega^l f ||_{q2} / || omega^(l+m) f ||_{q1}` on momentum
/// samples; bounded uniformly when `q1 > q2` and `m < 1/q2 - 1/q1`.
pub fn embedding_check(
    samples: &[f64],
    grid: &MomentumGrid,
    q1: Exponent,
    q2: Exponent,
    m: f64,
    l: f64,
) -> Result<f64> {
    if !(q1.value() > q2.value() && q2.value() >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "embedding needs inf >= q1 > q2 >= 1, got q1 = {q1}, q2 = {q2}"
        )));
    }
    if m >= q2.recip() - q1.recip() {
        return Err(Error::InvalidArgument(format!(
            "embedding needs m < 1/q2 - 1/q1, got m = {m}"
        )));
    }
    let num = weighted_lq_p(samples, grid, l, q2);
    let den = weighted_lq_p(samples, grid, l + m, q1);
    Ok(num / den)
}
