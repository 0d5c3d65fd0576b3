//! Independent oracles for the closed-form resonance parametrization: the
//! solver `p1 = h(p0, p2)` is recomputed by bisection on the frequency
//! residual, without using the closed form.

use kinetic_fpu::dispersion::omega as omega_checked;
use kinetic_fpu::resonance;
use std::f64::consts::{PI, TAU};

fn omega(p: f64) -> f64 {
    omega_checked(p).expect("finite momentum")
}

/// Frequency residual along the momentum-conservation slice:
/// `p3 = p0 + p1 - p2` mod 2pi.
fn residual(p0: f64, p2: f64, p1: f64) -> f64 {
    let p3 = (p0 + p1 - p2).rem_euclid(TAU);
    omega(p0) + omega(p1) - omega(p2) - omega(p3)
}

/// All roots of the frequency residual in `p1`, located by a sign-change scan
/// and bisection. The trivial branch contributes `p1 = p2` (so that
/// `p3 = p0`); the remaining root is the nontrivial solution.
fn bisection_roots(p0: f64, p2: f64) -> Vec<f64> {
    let n = 20_000;
    let mut roots = Vec::new();
    let mut prev_p = 1e-9;
    let mut prev_v = residual(p0, p2, prev_p);
    for i in 1..=n {
        let p = TAU * (i as f64) / (n as f64 + 1.0);
        let v = residual(p0, p2, p);
        if prev_v == 0.0 {
            roots.push(prev_p);
        } else if prev_v.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_p, p);
            let (mut flo, _) = (prev_v, v);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = residual(p0, p2, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo.signum() == fm.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_p = p;
        prev_v = v;
    }
    roots
}

fn nontrivial_root(p0: f64, p2: f64) -> f64 {
    let roots = bisection_roots(p0, p2);
    let torus_dist = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    roots
        .into_iter()
        .filter(|&r| torus_dist(r, p2) > 1e-4)
        .min_by(|a, b| {
            residual(p0, p2, *a)
                .abs()
                .partial_cmp(&residual(p0, p2, *b).abs())
                .unwrap()
        })
        .expect("a nontrivial root exists")
}

#[test]
fn closed_form_matches_bisection_at_reference_point() {
    let p0 = PI / 2.0;
    let p2 = 3.0 * PI / 2.0;
    let oracle = nontrivial_root(p0, p2);
    let closed = resonance::h(p0, p2).unwrap();
    assert!(
        (oracle - closed).abs() < 1e-8,
        "oracle {oracle} vs closed form {closed}"
    );
}

#[test]
fn closed_form_matches_bisection_on_sample_points() {
    for (p0, p2) in [(1.0, 2.4), (0.7, 4.0), (2.8, 5.5), (4.4, 1.1), (5.9, 3.3)] {
        let oracle = nontrivial_root(p0, p2);
        let closed = resonance::h(p0, p2).unwrap();
        let d = (oracle - closed).rem_euclid(TAU);
        let dist = d.min(TAU - d);
        assert!(
            dist < 1e-8,
            "(p0, p2) = ({p0}, {p2}): oracle {oracle} vs closed form {closed}"
        );
    }
}

#[test]
fn jacobian_matches_finite_differences_of_the_solver_map() {
    // Derivative oracle independent of the closed-form determinant.
    let step = 1e-5;
    for (p0, p2) in [(1.0, 2.5), (2.0, 0.7), (3.9, 5.1)] {
        let dh = |a: f64, b: f64| resonance::h(a, b).unwrap();
        let unwrap = |mut d: f64| {
            if d > PI {
                d -= TAU;
            } else if d < -PI {
                d += TAU;
            }
            d
        };
        let d0 = unwrap(dh(p0 + step, p2) - dh(p0 - step, p2)) / (2.0 * step);
        let d2 = unwrap(dh(p0, p2 + step) - dh(p0, p2 - step)) / (2.0 * step);
        let fd = -(d0 + d2);
        let closed = resonance::jacobian_det(p0, p2).unwrap();
        assert!(
            (fd - closed).abs() <= 1e-6 * closed.abs().max(1e-6),
            "(p0, p2) = ({p0}, {p2}): fd {fd} vs closed {closed}"
        );
    }
}

#[test]
fn quadruple_residuals_certified_by_direct_evaluation() {
    // Evaluate both resonance functions from scratch at the parametrized
    // quadruple, without the cached values.
    for (p0, p2) in [(2.0, 0.7), (0.3, 5.0), (1.9, 1.905), (PI, 0.1)] {
        let q = resonance::quadruple(p0, p2).unwrap();
        let sigma = {
            let s = (q.p[0] + q.p[1] - q.p[2] - q.p[3]).rem_euclid(TAU);
            s.min(TAU - s)
        };
        let omega_res = omega(q.p[0]) + omega(q.p[1]) - omega(q.p[2]) - omega(q.p[3]);
        assert!(sigma <= 1e-10, "(p0,p2)=({p0},{p2}): sigma {sigma}");
        assert!(omega_res.abs() <= 1e-10, "(p0,p2)=({p0},{p2}): omega {omega_res}");
    }
}
