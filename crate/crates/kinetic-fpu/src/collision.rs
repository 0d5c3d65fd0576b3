//! Collision operator through the one-dimensional resonant representation.
//!
//! For a midpoint momentum grid the kernel
//! `K(p0, p2) = omega0 omega1 omega2 omega3 / sqrt(F+(p0, p2))` is tabulated
//! per node pair together with the interpolation stencils for the off-grid
//! momenta `p1 = h(p0, p2)` and `p3 = p0 + p1 - p2`. The gain and loss forms
//! are then midpoint sums against the table:
//!
//! * `G1[f,g,k](p0) = int K f(p1) g(p2) k(p3) dp2`
//! * `G2[f,g,k](p0) = int K f(p0) g(p2) k(p3) dp2`
//! * `L1[f,g,k](p0) = int K f(p0) g(p1) k(p3) dp3` (swapped parametrization)
//! * `L2[f,g,k](p0) = int K f(p0) g(p1) k(p2) dp2`
//!
//! The swap `p2 <-> p3` leaves `Sigma`, `Omega` and the kernel invariant, so
//! `L1` reuses the same table with the integration node read as `p3`; its
//! discrete sum coincides with the one for `L2`.

use crate::dispersion::omega_reduced;
use crate::error::Error;
use crate::grid::{GridField, MomentumGrid};
use crate::resonance;
use rayon::prelude::*;

/// Spatial slices below this fraction of the field maximum are skipped by
/// the field-level operator; the collision output there is cubically small
/// (~1e-30 relative), far below every tolerance in use.
const SLICE_SKIP_RELATIVE: f64 = 1e-10;

/// Precomputed kernel and interpolation stencils for one momentum grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    n: usize,
    cell: f64,
    /// Kernel values, row-major over `(i, k)`.
    kernel: Vec<f64>,
    /// Lower stencil index and fraction for `p1`.
    i1: Vec<u32>,
    a1: Vec<f64>,
    /// Lower stencil index and fraction for `p3`.
    i3: Vec<u32>,
    a3: Vec<f64>,
    /// Parametrized momenta, kept for the bracket-form path and diagnostics.
    p1: Vec<f64>,
    p3: Vec<f64>,
    /// Nodes where the parametrization needed clamping or failed outright.
    flagged: Vec<bool>,
    node_values: Vec<f64>,
}

/// Build the `O(n_p^2)` kernel table; deterministic for a given grid.
pub fn build_kernel_table(grid: &MomentumGrid) -> KernelTable {
    let n = grid.len();
    let cell = grid.cell_width();
    let mut kernel = vec![0.0; n * n];
    let mut i1 = vec![0u32; n * n];
    let mut a1 = vec![0.0; n * n];
    let mut i3 = vec![0u32; n * n];
    let mut a3 = vec![0.0; n * n];
    let mut p1v = vec![0.0; n * n];
    let mut p3v = vec![0.0; n * n];
    let mut flagged = vec![false; n * n];

    for i in 0..n {
        let p0 = grid.node(i);
        let w0 = omega_reduced(p0);
        for k in 0..n {
            let p2 = grid.node(k);
            let e = i * n + k;
            let near_corner = (p0.min(p2) < cell && p2.max(p0) > std::f64::consts::TAU - cell)
                || (p0 < cell && p2 < cell)
                || (p0 > std::f64::consts::TAU - cell && p2 > std::f64::consts::TAU - cell);
            match resonance::quadruple(p0, p2) {
                Ok(q) => {
                    let fp = resonance::f_plus(p0, p2).expect("nodes lie in [0, 2pi]");
                    // F+ >= 4 w0 w2 > 0 at interior nodes.
                    let kval = if fp > 0.0 {
                        w0 * q.w[1] * q.w[2] * q.w[3] / fp.sqrt()
                    } else {
                        0.0
                    };
                    kernel[e] = kval;
                    p1v[e] = q.p[1];
                    p3v[e] = q.p[3];
                    let (j1, f1) = grid.interp_setup(q.p[1]);
                    let (j3, f3) = grid.interp_setup(q.p[3]);
                    i1[e] = j1 as u32;
                    a1[e] = f1;
                    i3[e] = j3 as u32;
                    a3[e] = f3;
                    flagged[e] = near_corner;
                }
                Err(Error::ParametrizationDomain { .. }) => {
                    flagged[e] = true;
                }
                Err(err) => panic!("kernel table build failed at ({i}, {k}): {err}"),
            }
        }
    }

    KernelTable {
        n,
        cell,
        kernel,
        i1,
        a1,
        i3,
        a3,
        p1: p1v,
        p3: p3v,
        flagged,
        node_values: grid.nodes().to_vec(),
    }
}

/// Which slot pattern a trilinear form reads from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    G1,
    G2,
    L1,
    L2,
}

impl Form {
    pub fn label(self) -> &'static str {
        match self {
            Form::G1 => "G1",
            Form::G2 => "G2",
            Form::L1 => "L1",
            Form::L2 => "L2",
        }
    }
}

impl KernelTable {
    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn cell_width(&self) -> f64 {
        self.cell
    }

    #[inline]
    pub fn kernel(&self, i: usize, k: usize) -> f64 {
        self.kernel[i * self.n + k]
    }

    #[inline]
    pub fn momenta(&self, i: usize, k: usize) -> (f64, f64, f64, f64) {
        let e = i * self.n + k;
        (self.node_values[i], self.p1[e], self.node_values[k], self.p3[e])
    }

    #[inline]
    pub fn is_flagged(&self, i: usize, k: usize) -> bool {
        self.flagged[i * self.n + k]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&b| b).count()
    }

    #[inline]
    fn lerp(samples: &[f64], ia: u32, frac: f64, n: usize) -> f64 {
        let ia = ia as usize;
        let ib = if ia + 1 == n { 0 } else { ia + 1 };
        let va = samples[ia];
        samples[ib].mul_add(frac, va.mul_add(-frac, va))
    }

    /// `G1[f,g,k](p0_i) = sum_k K(i,k) f(p1) g(p2_k) k(p3) dp`.
    pub fn g1(&self, f: &[f64], g: &[f64], k: &[f64]) -> Vec<f64> {
        self.form(Form::G1, f, g, k)
    }

    /// `G2[f,g,k](p0_i) = sum_k K(i,k) f(p0_i) g(p2_k) k(p3) dp`.
    pub fn g2(&self, f: &[f64], g: &[f64], k: &[f64]) -> Vec<f64> {
        self.form(Form::G2, f, g, k)
    }

    /// `L1[f,g,k](p0_i) = sum_k K(i,k) f(p0_i) g(p1) k(p3_k) dp` with the
    /// integration running over `p3` nodes (swapped parametrization).
    pub fn l1(&self, f: &[f64], g: &[f64], k: &[f64]) -> Vec<f64> {
        self.form(Form::L1, f, g, k)
    }

    /// `L2[f,g,k](p0_i) = sum_k K(i,k) f(p0_i) g(p1) k(p2_k) dp`.
    pub fn l2(&self, f: &[f64], g: &[f64], k: &[f64]) -> Vec<f64> {
        self.form(Form::L2, f, g, k)
    }

    pub fn form(&self, which: Form, f: &[f64], g: &[f64], k: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.form_into(which, f, g, k, &mut out);
        out
    }

    pub fn form_into(&self, which: Form, f: &[f64], g: &[f64], k: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.n);
        assert_eq!(g.len(), self.n);
        assert_eq!(k.len(), self.n);
        assert_eq!(out.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let row = i * n;
            let mut acc = 0.0;
            match which {
                Form::G1 => {
                    for e in row..row + n {
                        let f1 = Self::lerp(f, self.i1[e], self.a1[e], n);
                        let k3 = Self::lerp(k, self.i3[e], self.a3[e], n);
                        acc += self.kernel[e] * f1 * g[e - row] * k3;
                    }
                }
                Form::G2 => {
                    let f0 = f[i];
                    for e in row..row + n {
                        let k3 = Self::lerp(k, self.i3[e], self.a3[e], n);
                        acc += self.kernel[e] * g[e - row] * k3;
                    }
                    acc *= f0;
                }
                // In the swapped parametrization the integration node is p3
                // and p1 keeps its stencil, so the loop body matches L2.
                Form::L1 | Form::L2 => {
                    let f0 = f[i];
                    for e in row..row + n {
                        let g1 = Self::lerp(g, self.i1[e], self.a1[e], n);
                        acc += self.kernel[e] * g1 * k[e - row];
                    }
                    acc *= f0;
                }
            }
            out[i] = acc * self.cell;
        }
    }

    /// `C[f] = G1 + G2 - L1 - L2` with all slots equal to `f`, fused into a
    /// single pass over the table.
    pub fn collision(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.collision_into(f, &mut out);
        out
    }

    pub fn collision_into(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.n);
        assert_eq!(out.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let row = i * n;
            let f0 = f[i];
            let two_f0 = 2.0 * f0;
            let mut acc = 0.0;
            for e in row..row + n {
                let f1 = Self::lerp(f, self.i1[e], self.a1[e], n);
                let f3 = Self::lerp(f, self.i3[e], self.a3[e], n);
                // f1 f2 f3 + f0 f2 f3 - 2 f0 f1 f2 = f2 (f3 (f0 + f1) - 2 f0 f1)
                let bracket = f3.mul_add(f0 + f1, -(two_f0 * f1));
                acc += self.kernel[e] * f[e - row] * bracket;
            }
            out[i] = acc * self.cell;
        }
    }

    /// Bracket-form cross-check `int K f0 f1 f2 f3 (1/f0 + 1/f1 - 1/f2 - 1/f3) dp2`
    /// for strictly positive `f` given as a pointwise evaluator; the momenta
    /// `p1`, `p3` are used exactly, without interpolation.
    pub fn collision_bracket(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let node_f: Vec<f64> = self.node_values.iter().map(|&p| f(p)).collect();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = i * n;
            let f0 = node_f[i];
            let mut acc = 0.0;
            for e in row..row + n {
                // Zero-kernel entries contribute nothing; evaluating f there
                // could divide by a vanishing frequency (diagonal pairs map
                // to p1 = 0).
                if self.kernel[e] == 0.0 {
                    continue;
                }
                let f1 = f(self.p1[e]);
                let f3 = f(self.p3[e]);
                let f2 = node_f[e - row];
                let prod = f0 * f1 * f2 * f3;
                let bracket = 1.0 / f0 + 1.0 / f1 - 1.0 / f2 - 1.0 / f3;
                acc += self.kernel[e] * prod * bracket;
            }
            out[i] = acc * self.cell;
        }
        out
    }

    /// Apply `C` to every spatial slice of a sampled field.
    pub fn collision_field(&self, field: &GridField) -> GridField {
        let n_p = self.n;
        assert_eq!(field.momentum().len(), n_p);
        let skip_below = field.max_abs() * SLICE_SKIP_RELATIVE;
        let mut out = GridField::zeros(field.spatial().clone(), field.momentum().clone());
        out.values_mut()
            .par_chunks_mut(n_p)
            .zip(field.values().par_chunks(n_p))
            .for_each(|(dst, src)| {
                if src.iter().any(|v| v.abs() > skip_below) {
                    self.collision_into(src, dst);
                }
            });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, ClosedForm, SpatialGrid};
    use std::f64::consts::TAU;

    fn table(n: usize) -> (MomentumGrid, KernelTable) {
        let g = MomentumGrid::new(n).unwrap();
        let t = build_kernel_table(&g);
        (g, t)
    }

    #[test]
    fn small_table_is_finite() {
        let (_, t) = table(4);
        for i in 0..4 {
            for k in 0..4 {
                let v = t.kernel(i, k);
                assert!(v.is_finite() && v >= 0.0);
            }
        }
    }

    #[test]
    fn diagonal_kernel_vanishes() {
        let (_, t) = table(32);
        for i in 0..32 {
            assert_eq!(t.kernel(i, i), 0.0);
        }
    }

    #[test]
    fn kernel_reflection_symmetry() {
        // p -> 2pi - p maps node i to node n-1-i and preserves the kernel.
        let (_, t) = table(64);
        for i in 0..64 {
            for k in 0..64 {
                let a = t.kernel(i, k);
                let b = t.kernel(63 - i, 63 - k);
                assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()), "i={i} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_pointwise_bound() {
        let (g, t) = table(128);
        for i in 0..128 {
            let w0 = omega_reduced(g.node(i));
            for k in 0..128 {
                let (_, p1, p2, p3) = t.momenta(i, k);
                let bound = w0.sqrt()
                    * omega_reduced(p1)
                    * omega_reduced(p2).sqrt()
                    * omega_reduced(p3);
                assert!(t.kernel(i, k) <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn forms_vanish_on_zero_input() {
        let (_, t) = table(16);
        let z = vec![0.0; 16];
        for form in [Form::G1, Form::G2, Form::L1, Form::L2] {
            assert!(t.form(form, &z, &z, &z).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn forms_coincide_on_constant_input() {
        // With f = g = k = 1 every form reduces to the kernel integral.
        let (_, t) = table(64);
        let ones = vec![1.0; 64];
        let g1 = t.g1(&ones, &ones, &ones);
        let g2 = t.g2(&ones, &ones, &ones);
        let l1 = t.l1(&ones, &ones, &ones);
        let l2 = t.l2(&ones, &ones, &ones);
        for i in 0..64 {
            assert!((g2[i] - l1[i]).abs() < 1e-15);
            assert!((g2[i] - l2[i]).abs() < 1e-15);
            // G1 interpolates the constant exactly as well.
            assert!((g1[i] - g2[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn g1_positive_for_positive_input() {
        let (_, t) = table(64);
        let ones = vec![1.0; 64];
        let g1 = t.g1(&ones, &ones, &ones);
        assert!(g1.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn trilinearity_in_each_slot() {
        let (g, t) = table(48);
        let f: Vec<f64> = g.nodes().iter().map(|&p| 0.4 + 0.2 * p.cos()).collect();
        let gg: Vec<f64> = g.nodes().iter().map(|&p| 0.5 + 0.1 * (2.0 * p).sin()).collect();
        let k: Vec<f64> = g.nodes().iter().map(|&p| 0.3 + 0.15 * (3.0 * p).cos()).collect();
        let scale = |v: &[f64], c: f64| v.iter().map(|&x| c * x).collect::<Vec<_>>();
        for form in [Form::G1, Form::G2, Form::L1, Form::L2] {
            let base = t.form(form, &f, &gg, &k);
            let sf = t.form(form, &scale(&f, 2.0), &gg, &k);
            let sg = t.form(form, &f, &scale(&gg, -3.0), &k);
            let sk = t.form(form, &f, &gg, &scale(&k, 0.25));
            for i in 0..48 {
                assert!((sf[i] - 2.0 * base[i]).abs() <= 1e-13 * (1.0 + base[i].abs()));
                assert!((sg[i] + 3.0 * base[i]).abs() <= 1e-13 * (1.0 + base[i].abs()));
                assert!((sk[i] - 0.25 * base[i]).abs() <= 1e-13 * (1.0 + base[i].abs()));
            }
        }
    }

    #[test]
    fn forms_nonnegative_for_nonnegative_inputs() {
        let (g, t) = table(48);
        let f: Vec<f64> = g.nodes().iter().map(|&p| 0.2 + 0.19 * p.sin()).collect();
        for form in [Form::G1, Form::G2, Form::L1, Form::L2] {
            let v = t.form(form, &f, &f, &f);
            assert!(v.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn constants_are_equilibria_both_assemblies() {
        let (_, t) = table(96);
        for c in [1.0, 0.37, 2.5] {
            let f = vec![c; 96];
            let gain_loss = t.collision(&f);
            assert!(gain_loss.iter().all(|&v| v.abs() < 1e-10), "c = {c}");
            let bracket = t.collision_bracket(|_| c);
            assert!(bracket.iter().all(|&v| v.abs() < 1e-12), "c = {c}");
        }
    }

    #[test]
    fn rayleigh_jeans_annihilated_by_bracket_form() {
        let (_, t) = table(128);
        let out = t.collision_bracket(|p| 1.0 / omega_reduced(crate::dispersion::reduce(p)));
        assert!(out.iter().all(|v| v.is_finite()));
        let max = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-8, "{max}");
        // A generic positive profile is not an equilibrium, so the same path
        // must produce something of collision size.
        let generic = t.collision_bracket(|p| 1.0 + 0.4 * p.cos());
        let generic_max = generic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(generic_max > 1e-3, "{generic_max}");
    }

    #[test]
    fn collision_moments_shrink_under_refinement() {
        // Discrete mass and energy moments of C[f] tend to zero.
        let profile = |p: f64| 1.0 + 0.1 * p.cos();
        let mut mass = Vec::new();
        let mut energy = Vec::new();
        for n in [64, 128, 256] {
            let (g, t) = table(n);
            let f: Vec<f64> = g.nodes().iter().map(|&p| profile(p)).collect();
            let c = t.collision(&f);
            let m: f64 = c.iter().sum::<f64>() * g.cell_width();
            let e: f64 = c
                .iter()
                .zip(g.nodes())
                .map(|(&v, &p)| v * omega_reduced(p))
                .sum::<f64>()
                * g.cell_width();
            mass.push(m.abs());
            energy.push(e.abs());
        }
        assert!(mass[2] < mass[0], "mass moments {mass:?}");
        assert!(energy[2] < energy[0], "energy moments {energy:?}");
    }

    #[test]
    fn collision_field_matches_slicewise_operator() {
        let (mg, t) = table(32);
        let sg = SpatialGrid::new(9, -2.0, 2.0).unwrap();
        // Separable field: slice i equals a(x_i)^3 C[phi].
        let a = |x: f64| (-x * x).exp();
        let phi = |p: f64| 1.0 + 0.3 * p.sin();
        let cf = ClosedForm::new(2.0, move |x, p| a(x) * phi(p)).unwrap();
        let field = sample(&cf, &mg, &sg).unwrap();
        let out = t.collision_field(&field);
        let phi_samples: Vec<f64> = mg.nodes().iter().map(|&p| phi(p)).collect();
        let c_phi = t.collision(&phi_samples);
        for j in 0..sg.len() {
            let cube = a(sg.node(j)).powi(3);
            for k in 0..mg.len() {
                let expect = cube * c_phi[k];
                assert!(
                    (out.at(j, k) - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
                    "slice {j} node {k}"
                );
            }
        }
        // Zero field maps to zero field.
        let zero = GridField::zeros(sg.clone(), mg.clone());
        assert!(t.collision_field(&zero).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn g1_against_fine_grid_quadrature() {
        // For f = g = k = 1, G1(p0) = int K(p0, p2) dp2; compare the table sum
        // at n = 256 with a direct 4096-node midpoint quadrature of the
        // closed-form kernel.
        let (g, t) = table(256);
        let ones = vec![1.0; 256];
        let g1 = t.g1(&ones, &ones, &ones);
        let i_star = 127;
        let p0 = g.node(i_star);

        let n_fine = 4096;
        let fine = MomentumGrid::new(n_fine).unwrap();
        let mut oracle = 0.0;
        for &p2 in fine.nodes() {
            let q = resonance::quadruple(p0, p2).unwrap();
            let fp = resonance::f_plus(p0, p2).unwrap();
            if fp > 0.0 {
                oracle += q.w[0] * q.w[1] * q.w[2] * q.w[3] / fp.sqrt();
            }
        }
        oracle *= fine.cell_width();
        let rel = (g1[i_star] - oracle).abs() / oracle;
        assert!(rel < 0.01, "table {} vs oracle {} (rel {rel})", g1[i_star], oracle);
    }

    #[test]
    fn flagged_nodes_only_near_corners() {
        let (g, t) = table(128);
        let n = g.len();
        for i in 0..n {
            for k in 0..n {
                if t.is_flagged(i, k) {
                    let p0 = g.node(i);
                    let p2 = g.node(k);
                    let corner = [(0.0, 0.0), (0.0, TAU), (TAU, 0.0), (TAU, TAU)]
                        .iter()
                        .map(|&(a, b)| ((p0 - a).powi(2) + (p2 - b).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min);
                    assert!(corner <= 1.5 * g.cell_width() * 2.0_f64.sqrt());
                }
            }
        }
    }
}
