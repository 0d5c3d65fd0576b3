//! Longer solver scenarios: the bootstrap-style bound over a ten-unit
//! horizon and the control-norm behavior of free trajectories.

use kinetic_fpu::collision::build_kernel_table;
use kinetic_fpu::grid::{sample, InitialDataFamily, MomentumGrid, PhaseField, SpatialGrid};
use kinetic_fpu::norms::{x_norm, XNormSpec};
use kinetic_fpu::solver::{run, SolverConfig};
use kinetic_fpu::transport::advect_closed_form;

/// For a small localized datum the four time-weighted components stay below
/// six times the amplitude across the horizon; the weighted sups tend to
/// plateaus controlled by the dispersive estimates.
#[test]
fn weighted_components_stay_below_six_epsilon() {
    let epsilon = 0.1;
    let family = InitialDataFamily::new(epsilon, 1.0, 2).unwrap();
    let mgrid = MomentumGrid::new(96).unwrap();
    let sgrid = SpatialGrid::new(217, -13.5, 13.5).unwrap();
    let f0 = sample(&family.closed_form(), &mgrid, &sgrid).unwrap();
    let table = build_kernel_table(&mgrid);
    let cfg = SolverConfig {
        dt: 0.025,
        t_end: 10.0,
        snapshot_stride: 20,
        bootstrap_scale: Some(epsilon),
        bootstrap_c1: 10.0,
        ..SolverConfig::default()
    };
    let result = run(&f0, &table, &cfg).unwrap();
    assert!(result.blowup.is_none());
    assert!(
        result.bootstrap_violation.is_none(),
        "bootstrap monitor tripped: {:?}",
        result.bootstrap_violation
    );
    let worst = result.xnorm.components.iter().fold(0.0f64, |m, &c| m.max(c));
    assert!(
        worst <= 6.0 * epsilon,
        "weighted component max {worst} exceeds 6 eps = {}",
        6.0 * epsilon
    );
}

/// Along a free-transport trajectory the two time-weighted components of the
/// control norm stay uniformly bounded: the `<t>^(1/2)` weight exactly
/// offsets the dispersive decay.
#[test]
fn free_trajectory_weighted_components_bounded() {
    let family = InitialDataFamily::new(1.0, 1.0, 2).unwrap();
    let datum = family.closed_form();
    let spec = XNormSpec::default();
    let trajectory: Vec<(f64, PhaseField)> = [0.0, 2.0, 8.0, 32.0]
        .iter()
        .map(|&t| (t, PhaseField::Closed(advect_closed_form(&datum, t))))
        .collect();
    let value = x_norm(&trajectory, &spec).unwrap();
    // Uniform bound: the weighted sups settle near fixed multiples of the
    // initial norms rather than growing with the horizon.
    let initial: Vec<(f64, PhaseField)> = vec![(0.0, PhaseField::Closed(datum))];
    let base = x_norm(&initial, &spec).unwrap();
    for i in [2usize, 3] {
        assert!(
            value.components[i] <= 5.0 * base.components[i].max(base.total / 4.0),
            "component {i} grew without bound: {} from {}",
            value.components[i],
            base.components[i]
        );
    }
}
