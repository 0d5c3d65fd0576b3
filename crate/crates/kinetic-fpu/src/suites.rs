//! Verification suites behind the command-line entry points and the
//! acceptance tests. Each suite pins its tolerances here, runs the
//! corresponding checks, and returns a machine-readable report; artifacts
//! (CSV tables, binary snapshots) are written to the output directory.

use crate::collision::build_kernel_table;
use crate::config::RunConfig;
use crate::dispersion::omega_reduced;
use crate::error::{Error, Result};
use crate::grid::{sample, GridField, MomentumGrid};
use crate::norms::{Exponent, QuadratureSpec};
use crate::probes::{probe_cases, run_probe, ProbeResult};
use crate::report::{CheckRecord, GridSizes, Report};
use crate::resonance;
use crate::solver::{self, duhamel_iterate, lifespan_sweep, DatumKind, SweepConfig};
use crate::transport::{dyadic_ratios, measure_decay, DecayFit, DECAY_TIMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

// Resonance tolerances.
const RESIDUAL_TOL: f64 = 1e-10;
const TAN_IDENTITY_TOL: f64 = 1e-10;
const CORNER_EXCLUSION_RADIUS: f64 = 1e-3;
const JACOBIAN_FD_REL_TOL: f64 = 1e-6;
const JACOBIAN_FD_STEP: f64 = 1e-5;
const JACOBIAN_FD_POINTS: usize = 10_000;
const F_PLUS_LOWER_TOL: f64 = -1e-12;
const SUP_STABILITY_TOL: f64 = 0.05;

// Dispersion tolerances.
const DECAY_EXPONENT_TOL: f64 = 0.1;
const DECAY_BOUND_SLACK: f64 = 1e-6;
const ISOMETRY_REL_TOL: f64 = 1e-6;
const DYADIC_GROWTH_TOL: f64 = 0.10;

// Collision and solver tolerances.
const EQUILIBRIUM_CONST_TOL: f64 = 1e-10;
const EQUILIBRIUM_RJ_TOL: f64 = 1e-8;
const MOMENT_ORDER_MIN: f64 = 1.0;
const PROBE_GROWTH_TOL: f64 = 0.10;
const CONSERVATION_DRIFT_TOL: f64 = 1e-4;
const DUHAMEL_AGREEMENT_TOL: f64 = 0.02;
const LIFESPAN_SLOPE_MAX: f64 = -2.0;
const HOMOGENEOUS_SLOPE_BAND: f64 = 0.1;

/// Sup of |values|, propagating non-finite entries instead of masking them.
fn sup_abs(values: &[f64]) -> f64 {
    if values.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn write_text(out: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut f = std::fs::File::create(out.join(name))?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Central-difference Jacobian `-(d h/d p0 + d h/d p2)`, with unwrapping
/// across the torus seam of `h`.
fn jacobian_fd(p0: f64, p2: f64, step: f64) -> Result<f64> {
    let diff = |a: f64, b: f64| -> f64 {
        let mut d = a - b;
        if d > std::f64::consts::PI {
            d -= TAU;
        } else if d < -std::f64::consts::PI {
            d += TAU;
        }
        d
    };
    let dp0 = diff(resonance::h(p0 + step, p2)?, resonance::h(p0 - step, p2)?) / (2.0 * step);
    let dp2 = diff(resonance::h(p0, p2 + step)?, resonance::h(p0, p2 - step)?) / (2.0 * step);
    Ok(-(dp0 + dp2))
}

struct ResonanceSweep {
    max_sigma: f64,
    max_omega: f64,
    max_tan_identity: f64,
    min_fplus_slack: f64,
    sup_bound_ratio: f64,
    sup_jacobian_weight: f64,
}

fn resonance_sweep(n: usize) -> Result<ResonanceSweep> {
    let grid = MomentumGrid::new(n)?;
    let mut s = ResonanceSweep {
        max_sigma: 0.0,
        max_omega: 0.0,
        max_tan_identity: 0.0,
        min_fplus_slack: f64::INFINITY,
        sup_bound_ratio: 0.0,
        sup_jacobian_weight: 0.0,
    };
    for &p0 in grid.nodes() {
        for &p2 in grid.nodes() {
            let q = resonance::quadruple(p0, p2)?;
            s.max_sigma = s.max_sigma.max(q.sigma_residual.abs());
            s.max_omega = s.max_omega.max(q.omega_residual.abs());
            let fp = resonance::f_plus(p0, p2)?;
            s.min_fplus_slack = s.min_fplus_slack.min(fp - 4.0 * q.w[0] * q.w[2]);
            let near_corner = [(0.0, 0.0), (0.0, TAU), (TAU, 0.0), (TAU, TAU)]
                .iter()
                .any(|&(a, b)| ((p0 - a).powi(2) + (p2 - b).powi(2)).sqrt() < CORNER_EXCLUSION_RADIUS);
            if !near_corner {
                s.max_tan_identity = s.max_tan_identity.max(resonance::tan_identity_residual(p0, p2)?);
            }
            if q.w[0] > 0.0 {
                s.sup_bound_ratio = s.sup_bound_ratio.max(q.w[1] * q.w[2] * q.w[3] / q.w[0]);
            }
            if p0 != p2 {
                match resonance::jacobian_det(p0, p2) {
                    Ok(det) if det != 0.0 => {
                        s.sup_jacobian_weight = s.sup_jacobian_weight.max((q.w[1] * q.w[3] / det).abs());
                    }
                    // Degenerate nodes are excluded, matching the operator's
                    // own node-exclusion policy.
                    _ => {}
                }
            }
        }
    }
    Ok(s)
}

/// Closed-form structure of the resonant manifold on a midpoint grid.
pub fn verify_resonance(n_p: usize, seed: u64, out: &Path) -> Result<Report> {
    let mut report = Report::new(
        "verify-resonance",
        &format!("n_p={n_p} seed={seed}"),
        GridSizes { n_p, n_x: 0 },
        seed,
    );

    let sweep = resonance_sweep(n_p)?;
    report.push(CheckRecord::upper(
        "resonance-sum-residual",
        "momentum sum of the parametrized quadruple vanishes mod 2pi",
        sweep.max_sigma,
        RESIDUAL_TOL,
    ));
    report.push(CheckRecord::upper(
        "resonance-frequency-residual",
        "frequency sum of the parametrized quadruple vanishes",
        sweep.max_omega,
        RESIDUAL_TOL,
    ));
    report.push(CheckRecord::upper(
        "tan-quarter-angle-identity",
        "w1 w3 = tan^2((p2-p0)/4) w2 w0 on the manifold, away from corners",
        sweep.max_tan_identity,
        TAN_IDENTITY_TOL,
    ));
    report.push(CheckRecord::lower(
        "kernel-factor-lower-bound",
        "F+ >= 4 w0 w2 everywhere on the grid",
        sweep.min_fplus_slack,
        F_PLUS_LOWER_TOL,
    ));

    // Jacobian closed form against central differences of h on random
    // interior points, away from the diagonal and the boundary.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel = 0.0f64;
    let mut accepted = 0usize;
    while accepted < JACOBIAN_FD_POINTS {
        let p0 = rng.random_range(0.1..TAU - 0.1);
        let p2 = rng.random_range(0.1..TAU - 0.1);
        if (p0 - p2).abs() < 0.1 {
            continue;
        }
        accepted += 1;
        let closed = resonance::jacobian_det(p0, p2)?;
        let fd = jacobian_fd(p0, p2, JACOBIAN_FD_STEP)?;
        worst_rel = worst_rel.max((closed - fd).abs() / fd.abs().max(1e-12));
    }
    report.push(CheckRecord::upper(
        "jacobian-closed-form",
        "det J matches central differences of the parametrization map",
        worst_rel,
        JACOBIAN_FD_REL_TOL,
    ));

    // Sup stability of the two bounded-ratio probes under refinement.
    let fine = resonance_sweep(2 * n_p)?;
    let jw_shift = (fine.sup_jacobian_weight / sweep.sup_jacobian_weight - 1.0).abs();
    report.push(CheckRecord::upper(
        "jacobian-weight-ratio-stability",
        "sup of |w1 w3 / det J| stable under grid refinement",
        jw_shift,
        SUP_STABILITY_TOL,
    ));
    let rb_shift = (fine.sup_bound_ratio / sweep.sup_bound_ratio - 1.0).abs();
    report.push(CheckRecord::upper(
        "resonance-bound-ratio-stability",
        "sup of w1 w2 w3 / w0 stable under grid refinement",
        rb_shift,
        SUP_STABILITY_TOL,
    ));

    // Boundedness along the corner approach.
    let mut corner_max = 0.0f64;
    for eps in [1e-1, 1e-2, 1e-3] {
        for s in [1e-1, 1e-2, 1e-3] {
            corner_max = corner_max.max(resonance::jacobian_weight_ratio(eps, TAU - s)?);
        }
    }
    report.push(CheckRecord::upper(
        "jacobian-weight-corner-sweep",
        "|w1 w3 / det J| bounded approaching the corner singularities",
        corner_max,
        10.0 * sweep.sup_jacobian_weight.max(1.0),
    ));

    report.data = json!({
        "sup_bound_ratio": { "coarse": sweep.sup_bound_ratio, "fine": fine.sup_bound_ratio },
        "sup_jacobian_weight": { "coarse": sweep.sup_jacobian_weight, "fine": fine.sup_jacobian_weight },
        "corner_sweep_max": corner_max,
        "jacobian_fd_points": JACOBIAN_FD_POINTS,
    });

    let csv = format!(
        "check,value\nmax_sigma,{}\nmax_omega,{}\nmax_tan_identity,{}\nmin_fplus_slack,{}\nsup_bound_ratio,{}\nsup_jacobian_weight,{}\n",
        sweep.max_sigma,
        sweep.max_omega,
        sweep.max_tan_identity,
        sweep.min_fplus_slack,
        sweep.sup_bound_ratio,
        sweep.sup_jacobian_weight
    );
    write_text(out, "resonance.csv", &csv)?;
    Ok(report)
}

fn reference_datum() -> crate::grid::ClosedForm {
    crate::grid::InitialDataFamily::new(1.0, 1.0, 2)
        .expect("valid family")
        .closed_form()
}

fn decay_csv(fit: &DecayFit) -> String {
    let mut s = String::from("t,lhs,bound\n");
    for row in &fit.samples {
        s.push_str(&format!("{},{},{}\n", row.t, row.lhs, row.bound));
    }
    s
}

/// Dispersive decay of the free flow in weighted mixed norms.
pub fn verify_dispersion(out: &Path) -> Result<Report> {
    let mut report = Report::new(
        "verify-dispersion",
        "reference gaussian datum, decade t in [4, 64]",
        GridSizes { n_p: 4096, n_x: 0 },
        0,
    );
    let datum = reference_datum();
    let quad = QuadratureSpec { nodes_per_unit_x: 16.0, n_p: 4096 };

    let mut fits = Vec::new();
    for (label, r, q) in [
        ("two-one", Exponent::Finite(2.0), Exponent::Finite(1.0)),
        ("inf-two", Exponent::Infinity, Exponent::Finite(2.0)),
        ("inf-one", Exponent::Infinity, Exponent::Finite(1.0)),
    ] {
        let fit = measure_decay(&datum, r, q, &DECAY_TIMES, &quad)?;
        if label != "inf-one" {
            report.push(CheckRecord::upper(
                &format!("decay-exponent-{label}"),
                &format!(
                    "fitted decay rate of the free flow in the ({r}, {q}) mixed norm is -(1/q - 1/r)"
                ),
                (fit.exponent - fit.expected_exponent).abs(),
                DECAY_EXPONENT_TOL,
            ));
        }
        let worst = fit.samples.iter().map(|s| s.ratio).fold(0.0f64, f64::max);
        report.push(CheckRecord::upper(
            &format!("decay-bound-{label}"),
            &format!("weighted dispersive bound certified pointwise in the ({r}, {q}) norm"),
            worst,
            1.0 + DECAY_BOUND_SLACK,
        ));
        write_text(out, &format!("decay_{label}.csv"), &decay_csv(&fit))?;
        fits.push((label, fit));
    }

    // Isometry at equal exponents.
    for (label, q) in [("one", Exponent::Finite(1.0)), ("two", Exponent::Finite(2.0))] {
        let spec = crate::norms::NormSpec::new(q, q, 0.0);
        let before = crate::norms::mixed_norm_closed(&datum, &spec, &quad)?;
        let mut worst = 0.0f64;
        for t in [4.0, 16.0, 64.0] {
            let after = crate::norms::mixed_norm_closed(
                &crate::transport::advect_closed_form(&datum, t),
                &spec,
                &quad,
            )?;
            worst = worst.max((after / before - 1.0).abs());
        }
        report.push(CheckRecord::upper(
            &format!("transport-isometry-{label}"),
            &format!("free flow preserves the L^{q}_(x,p) norm"),
            worst,
            ISOMETRY_REL_TOL,
        ));
    }

    // Unweighted dyadic layer-set estimate with q = 2, q+ = 3.
    let dyadic = dyadic_ratios(&datum, 2.0, 3.0, &DECAY_TIMES, &quad)?;
    let mut growth = 0.0f64;
    for i in 0..dyadic.len() {
        for j in i + 1..dyadic.len() {
            growth = growth.max(dyadic[j].1 / dyadic[i].1 - 1.0);
        }
    }
    report.push(CheckRecord::upper(
        "dyadic-layer-estimate",
        "unweighted layer-set bound: lhs * t^(1/2) / rhs does not grow across the decade",
        growth,
        DYADIC_GROWTH_TOL,
    ));
    let mut csv = String::from("t,scaled_ratio\n");
    for (t, r) in &dyadic {
        csv.push_str(&format!("{t},{r}\n"));
    }
    write_text(out, "dyadic.csv", &csv)?;

    report.data = json!({
        "fits": fits
            .iter()
            .map(|(label, f)| {
                json!({
                    "case": label,
                    "exponent": f.exponent,
                    "expected": f.expected_exponent,
                    "fit_residual": f.fit_residual,
                    "rhs": f.rhs,
                })
            })
            .collect::<Vec<_>>(),
        "dyadic": dyadic,
    });
    Ok(report)
}

/// Weighted trilinear bounds on the collision forms, probed with random
/// fields and checked for stability under momentum refinement.
pub fn verify_bounds(trials: usize, seed: u64, out: &Path) -> Result<Report> {
    let grid_sizes = [256usize, 512];
    let mut report = Report::new(
        "verify-bounds",
        &format!("trials={trials} seed={seed} grids={grid_sizes:?}"),
        GridSizes { n_p: grid_sizes[1], n_x: 0 },
        seed,
    );
    let mut results: Vec<ProbeResult> = Vec::new();
    for case in probe_cases() {
        let r = run_probe(&case, &grid_sizes, trials, seed)?;
        report.push(CheckRecord::upper(
            r.id,
            r.anchor,
            r.refinement_growth - 1.0,
            PROBE_GROWTH_TOL,
        ));
        results.push(r);
    }
    let mut csv = String::from("id,l,q,max_ratio_coarse,max_ratio_fine,growth\n");
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.id, r.l, r.q, r.grids[0].max_ratio, r.grids[1].max_ratio, r.refinement_growth
        ));
    }
    write_text(out, "bound_probes.csv", &csv)?;
    report.data = serde_json::to_value(&results).expect("probe results serialize");
    Ok(report)
}

fn random_positive_profile(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 + use<> {
    let coeffs: Vec<(f64, f64)> =
        (0..6).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let scale: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
    move |p: f64| {
        let wave: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(m, &(a, b))| {
                let mp = (m + 1) as f64 * p;
                a * mp.cos() + b * mp.sin()
            })
            .sum();
        0.2 + 0.5 * (1.0 + wave / scale)
    }
}

/// Equilibria, moment refinement, the conservation-grade solver run, and the
/// Picard cross-check.
pub fn verify_conservation(seed: u64, out: &Path) -> Result<Report> {
    let cfg = RunConfig::default();
    let mut report = Report::new(
        "verify-conservation",
        &serde_json::to_string(&cfg).expect("config serializes"),
        GridSizes { n_p: cfg.grids.n_p, n_x: cfg.grids.n_x },
        seed,
    );

    // Equilibria at n_p = 256: constants are annihilated exactly by the
    // gain/loss assembly, the Rayleigh-Jeans family by the bracket assembly.
    let mgrid = MomentumGrid::new(256)?;
    let table = build_kernel_table(&mgrid);
    let ones = vec![1.0; 256];
    let sup_const = sup_abs(&table.collision(&ones));
    report.push(CheckRecord::upper(
        "equilibrium-constant",
        "constant distributions are collision equilibria (gain/loss assembly)",
        sup_const,
        EQUILIBRIUM_CONST_TOL,
    ));
    let c_rj = table.collision_bracket(|p| 1.0 / omega_reduced(crate::dispersion::reduce(p)));
    let sup_rj = sup_abs(&c_rj);
    report.push(CheckRecord::upper(
        "equilibrium-rayleigh-jeans",
        "T/omega is annihilated by the bracket assembly of the collision operator",
        sup_rj,
        EQUILIBRIUM_RJ_TOL,
    ));
    let rj_gain_loss: Vec<f64> =
        mgrid.nodes().iter().map(|&p| 1.0 / omega_reduced(p)).collect();
    let sup_rj_gl = sup_abs(&table.collision(&rj_gain_loss));

    // Moment refinement: discrete mass and energy moments of C[f] shrink at
    // observed order >= 1 for random smooth positive data.
    let resolutions = [128usize, 256, 512];
    let tables: Vec<(MomentumGrid, _)> = resolutions
        .iter()
        .map(|&n| {
            let g = MomentumGrid::new(n)?;
            let t = build_kernel_table(&g);
            Ok((g, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_fields = 20;
    let mut mass_sums = [0.0f64; 3];
    let mut energy_sums = [0.0f64; 3];
    let mut csv = String::from("field,n_p,mass_moment,energy_moment\n");
    for field_idx in 0..n_fields {
        let profile = random_positive_profile(&mut rng);
        for (i, (g, t)) in tables.iter().enumerate() {
            let f: Vec<f64> = g.nodes().iter().map(|&p| profile(p)).collect();
            let c = t.collision(&f);
            let mass: f64 = c.iter().sum::<f64>() * g.cell_width();
            let energy: f64 = c
                .iter()
                .zip(g.nodes())
                .map(|(&v, &p)| v * omega_reduced(p))
                .sum::<f64>()
                * g.cell_width();
            mass_sums[i] += mass.abs();
            energy_sums[i] += energy.abs();
            csv.push_str(&format!("{field_idx},{},{mass},{energy}\n", resolutions[i]));
        }
    }
    write_text(out, "collision_moments.csv", &csv)?;
    let mass_order = (mass_sums[0] / mass_sums[2]).log2() / 2.0;
    let energy_order = (energy_sums[0] / energy_sums[2]).log2() / 2.0;
    report.push(CheckRecord::lower(
        "collision-mass-moment-order",
        "discrete mass moment of C[f] shrinks under momentum refinement",
        mass_order,
        MOMENT_ORDER_MIN,
    ));
    report.push(CheckRecord::lower(
        "collision-energy-moment-order",
        "discrete energy moment of C[f] shrinks under momentum refinement",
        energy_order,
        MOMENT_ORDER_MIN,
    ));

    // Conservation-grade solver run at the reference parameters.
    let f0 = sample(&cfg.family()?.closed_form(), &cfg.momentum_grid()?, &cfg.spatial_grid()?)?;
    let table_ref = build_kernel_table(f0.momentum());
    let run = solver::run(&f0, &table_ref, &cfg.solver_config())?;
    if let Some(t) = run.blowup {
        return Err(Error::Config(format!("reference run left the stable regime at t = {t}")));
    }
    let first = &run.snapshots[0];
    let last = run.snapshots.last().expect("nonempty run");
    let mass_drift = ((last.mass - first.mass) / first.mass).abs();
    let energy_drift = ((last.energy - first.energy) / first.energy).abs();
    report.push(CheckRecord::upper(
        "solver-mass-conservation",
        "relative mass drift of the splitting solver over the reference horizon",
        mass_drift,
        CONSERVATION_DRIFT_TOL,
    ));
    report.push(CheckRecord::upper(
        "solver-energy-conservation",
        "relative energy drift of the splitting solver over the reference horizon",
        energy_drift,
        CONSERVATION_DRIFT_TOL,
    ));

    let mut csv = String::from("t,sup_norm,l1_norm,l2l1_norm,linfl2_norm,mass,energy,min_value\n");
    for s in &run.snapshots {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.t,
            s.component_norms[0],
            s.component_norms[1],
            s.component_norms[2],
            s.component_norms[3],
            s.mass,
            s.energy,
            s.min_value
        ));
    }
    write_text(out, "reference_run.csv", &csv)?;

    // Picard (mild-formulation) iterate against the splitting solver.
    let sc = cfg.solver_config();
    let picard = duhamel_iterate(&f0, 3, 0.5, &table_ref, &sc)?;
    let mut split = f0.clone();
    for _ in 0..50 {
        split = solver::step(&split, sc.dt, &table_ref)?;
    }
    let sup_diff = picard
        .values()
        .iter()
        .zip(split.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let agreement = sup_diff / split.max_abs();
    report.push(CheckRecord::upper(
        "duhamel-splitting-agreement",
        "Picard iterate of the mild formulation matches the splitting solver",
        agreement,
        DUHAMEL_AGREEMENT_TOL,
    ));

    report.data = json!({
        "equilibrium_rj_gain_loss_sup": sup_rj_gl,
        "mass_moment_sums": mass_sums,
        "energy_moment_sums": energy_sums,
        "mass_drift": mass_drift,
        "energy_drift": energy_drift,
        "duhamel_relative_sup": agreement,
        "positivity_min": run.snapshots.iter().map(|s| s.min_value).fold(f64::INFINITY, f64::min),
        "xnorm": run.xnorm,
    });
    Ok(report)
}

/// Lifespan-scaling experiments: localized datum under the full dynamics
/// against the space-homogeneous reduction.
pub fn lifespan(out: &Path) -> Result<Report> {
    let epsilons = [0.4, 0.2, 0.1];
    let disp_cfg = SweepConfig::default();
    let hom_cfg = SweepConfig { kind: DatumKind::Homogeneous, ..SweepConfig::default() };
    let mut report = Report::new(
        "lifespan-sweep",
        &format!(
            "eps={epsilons:?} scale={} threshold={} horizon={}",
            disp_cfg.amplitude_scale, disp_cfg.growth_threshold, disp_cfg.horizon
        ),
        GridSizes { n_p: disp_cfg.n_p, n_x: 0 },
        0,
    );

    let dispersive = lifespan_sweep(&epsilons, &disp_cfg)?;
    let homogeneous = lifespan_sweep(&epsilons, &hom_cfg)?;

    let disp_slope = dispersive.slope.unwrap_or(f64::NAN);
    report.push(CheckRecord::upper(
        "lifespan-dispersive-slope",
        "localized datum: log T against log eps fits at quadratic scaling or steeper",
        disp_slope,
        LIFESPAN_SLOPE_MAX,
    ));
    let hom_slope = homogeneous.slope.unwrap_or(f64::NAN);
    report.push(CheckRecord::upper(
        "lifespan-homogeneous-slope",
        "space-homogeneous reduction: crossing times scale quadratically in 1/eps",
        (hom_slope - (-2.0)).abs(),
        HOMOGENEOUS_SLOPE_BAND,
    ));
    let steeper = disp_slope < hom_slope;
    report.push(CheckRecord::lower(
        "lifespan-dispersive-steeper",
        "transport lengthens small-data lifespans beyond the homogeneous scaling",
        if steeper { 1.0 } else { 0.0 },
        1.0,
    ));

    let mut csv = String::from("kind,epsilon,t_double,censored\n");
    for (kind, sweep) in [("dispersive", &dispersive), ("homogeneous", &homogeneous)] {
        for r in &sweep.records {
            csv.push_str(&format!("{kind},{},{},{}\n", r.epsilon, r.t_double, r.censored));
        }
    }
    write_text(out, "lifespan.csv", &csv)?;
    report.data = json!({
        "dispersive": dispersive,
        "homogeneous": homogeneous,
        "dispersive_steeper_than_homogeneous": steeper,
        "growth_threshold": disp_cfg.growth_threshold,
        "amplitude_scale": disp_cfg.amplitude_scale,
    });
    Ok(report)
}

/// Run the splitting solver from a configuration file and emit the
/// trajectory.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new(
        "simulate",
        &serde_json::to_string(cfg).expect("config serializes"),
        GridSizes { n_p: cfg.grids.n_p, n_x: cfg.grids.n_x },
        0,
    );
    let f0 = sample(&cfg.family()?.closed_form(), &cfg.momentum_grid()?, &cfg.spatial_grid()?)?;
    let table = build_kernel_table(f0.momentum());
    let run = solver::run(&f0, &table, &cfg.solver_config())?;

    let mut csv = String::from("t,sup_norm,l1_norm,l2l1_norm,linfl2_norm,mass,energy\n");
    for s in &run.snapshots {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t,
            s.component_norms[0],
            s.component_norms[1],
            s.component_norms[2],
            s.component_norms[3],
            s.mass,
            s.energy
        ));
    }
    write_text(out, "trajectory.csv", &csv)?;
    if cfg.solver.store_snapshots {
        for (i, s) in run.snapshots.iter().enumerate() {
            if let Some(field) = &s.field {
                let mut file = std::fs::File::create(out.join(format!("snapshot_{i:04}.bin")))?;
                field.write_binary(&mut file)?;
            }
        }
    }

    report.push(CheckRecord::lower(
        "simulation-completed",
        "run reached the horizon without leaving the stable regime",
        if run.blowup.is_none() { 1.0 } else { 0.0 },
        1.0,
    ));
    let specs = cfg.xnorm_spec().component_specs();
    let norms: Vec<crate::norms::NormRecord> = run
        .snapshots
        .iter()
        .flat_map(|s| {
            specs.iter().enumerate().map(|(i, ns)| crate::norms::NormRecord {
                spec: *ns,
                value: s.component_norms[i],
                grid: (cfg.grids.n_x, cfg.grids.n_p),
                time: s.t,
            })
        })
        .collect();
    let first = &run.snapshots[0];
    let last = run.snapshots.last().expect("nonempty");
    report.data = json!({
        "snapshots": run.snapshots.len(),
        "blowup": run.blowup,
        "bootstrap_violation": run.bootstrap_violation,
        "xnorm": run.xnorm,
        "mass_drift": (last.mass - first.mass) / first.mass,
        "energy_drift": (last.energy - first.energy) / first.energy,
        "norms": norms,
    });
    Ok(report)
}

/// Dump the kernel table of a grid for inspection and plotting.
pub fn emit_kernel(n_p: usize, out: &Path) -> Result<Report> {
    let grid = MomentumGrid::new(n_p)?;
    let table = build_kernel_table(&grid);
    let mut report = Report::new(
        "emit-kernel",
        &format!("n_p={n_p}"),
        GridSizes { n_p, n_x: 0 },
        0,
    );
    let mut csv = String::from("i,k,p0,p1,p2,p3,kernel,flagged\n");
    let mut max_kernel = 0.0f64;
    for i in 0..n_p {
        for k in 0..n_p {
            let (p0, p1, p2, p3) = table.momenta(i, k);
            let kv = table.kernel(i, k);
            max_kernel = max_kernel.max(kv);
            csv.push_str(&format!(
                "{i},{k},{p0},{p1},{p2},{p3},{kv},{}\n",
                u8::from(table.is_flagged(i, k))
            ));
        }
    }
    write_text(out, "kernel.csv", &csv)?;
    report.push(CheckRecord::lower(
        "kernel-emitted",
        "kernel table written with all entries finite",
        if max_kernel.is_finite() { 1.0 } else { 0.0 },
        1.0,
    ));
    report.data = json!({
        "max_kernel": max_kernel,
        "flagged_nodes": table.flagged_count(),
        "entries": n_p * n_p,
    });
    Ok(report)
}

/// Sampled equivalent of a `GridField` for test fixtures.
pub fn reference_initial_field(cfg: &RunConfig) -> Result<GridField> {
    sample(&cfg.family()?.closed_form(), &cfg.momentum_grid()?, &cfg.spatial_grid()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("kfpu-suite-tests").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn resonance_suite_passes_at_moderate_resolution() {
        // The bounded-ratio sups creep toward their limits, so the stability
        // window needs at least a few hundred nodes per axis.
        let report = verify_resonance(256, 11, &tmp("resonance")).unwrap();
        assert!(report.passed(), "failed: {:?}", report.failed_checks());
    }

    #[test]
    fn kernel_emission_small_grid() {
        let out = tmp("kernel");
        let report = emit_kernel(16, &out).unwrap();
        assert!(report.passed());
        let csv = std::fs::read_to_string(out.join("kernel.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 16 * 16);
    }

    #[test]
    fn jacobian_fd_handles_wrap() {
        // Points where h sits near the torus seam still difference cleanly.
        let v = jacobian_fd(1.0, 1.2, 1e-5).unwrap();
        let closed = resonance::jacobian_det(1.0, 1.2).unwrap();
        assert!((v - closed).abs() <= 1e-6 * closed.abs().max(1.0));
    }
}
