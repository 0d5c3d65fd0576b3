//! Randomized ratio probes for the weighted bounds on the collision
//! trilinear forms.
//!
//! Each case fixes a weighted `L^q_p` estimate: the left side applies a form
//! to random band-limited strictly positive fields, the right side assembles
//! the corresponding product of weighted norms, and the probe reports the
//! maximum ratio over trials. The implicit constants are never pinned by the
//! analysis, so the harness checks instead that the empirical maxima stay
//! stable under momentum-grid refinement.

use crate::collision::{build_kernel_table, Form, KernelTable};
use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::norms::{weighted_lq_p, Exponent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const N_MODES: usize = 8;

/// Band-limited strictly positive momentum function, grid-independent.
#[derive(Debug, Clone)]
pub struct ProbeField {
    coeffs: [(f64, f64); N_MODES],
    /// The fields optionally vanish like `omega^v` so that probes with
    /// negative weights stay finite.
    vanish: f64,
}

impl ProbeField {
    fn random(rng: &mut ChaCha8Rng, vanish: f64) -> Self {
        let mut coeffs = [(0.0, 0.0); N_MODES];
        for c in &mut coeffs {
            *c = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        Self { coeffs, vanish }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let scale: f64 = self.coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
        let wave: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, &(a, b))| {
                let mp = (m + 1) as f64 * p;
                a * mp.cos() + b * mp.sin()
            })
            .sum();
        let positive = 0.1 + 0.5 * (1.0 + wave / scale);
        if self.vanish == 0.0 {
            positive
        } else {
            positive * crate::dispersion::omega_reduced(crate::dispersion::reduce(p)).powf(self.vanish)
        }
    }

    pub fn sample(&self, grid: &MomentumGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&p| self.eval(p)).collect()
    }
}

/// Which forms a case exercises; unified estimates cover all four.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum ProbeTarget {
    Single(#[serde(skip)] Form),
    AllForms,
}

/// One weighted inequality: `||omega^l T[f,g,k]||_q <= C * rhs(f,g,k)`.
pub struct ProbeCase {
    pub id: &'static str,
    /// Human-readable statement of the bound being probed.
    pub anchor: &'static str,
    pub target: ProbeTarget,
    pub l: f64,
    pub q: Exponent,
    /// `omega^v` factor on the random fields.
    pub vanish: f64,
    /// Whether the case feeds a single field into all three slots.
    pub same_field: bool,
    rhs: fn(&CaseData) -> f64,
}

/// Sampled fields plus the norm helper for right-hand sides.
pub struct CaseData<'a> {
    pub grid: &'a MomentumGrid,
    pub f: &'a [f64],
    pub g: &'a [f64],
    pub k: &'a [f64],
}

impl CaseData<'_> {
    fn n(&self, v: &[f64], l: f64, q: Exponent) -> f64 {
        weighted_lq_p(v, self.grid, l, q)
    }
}

const INF: Exponent = Exponent::Infinity;
const ONE: Exponent = Exponent::Finite(1.0);
const TWO: Exponent = Exponent::Finite(2.0);

/// The probe registry. The `low` cases take `l = -0.6` with fields vanishing
/// like `omega^0.7`.
pub fn probe_cases() -> Vec<ProbeCase> {
    vec![
        ProbeCase {
            id: "loss2-weighted-lq",
            anchor: "loss form L2: w^l L2[f,g,k] in L^q <= w^(l+1/2) f | w g (sup) | w^(1/2) k (L1)",
            target: ProbeTarget::Single(Form::L2),
            l: 0.0,
            q: INF,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 0.5, INF) * d.n(d.g, 1.0, INF) * d.n(d.k, 0.5, ONE),
        },
        ProbeCase {
            id: "loss1-weighted-lq",
            anchor: "loss form L1 via swapped parametrization: same norms as L2 with g, k roles fixed",
            target: ProbeTarget::Single(Form::L1),
            l: 0.0,
            q: ONE,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 0.5, ONE) * d.n(d.k, 0.5, ONE) * d.n(d.g, 1.0, INF),
        },
        ProbeCase {
            id: "gain2-weighted-lq",
            anchor: "gain form G2: w^l G2[f,g,k] in L^q <= w^(l+1/2) f | w^(1/2) g (L1) | w k (sup)",
            target: ProbeTarget::Single(Form::G2),
            l: 0.0,
            q: TWO,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 0.5, TWO) * d.n(d.g, 0.5, ONE) * d.n(d.k, 1.0, INF),
        },
        ProbeCase {
            id: "gain2-swapped-lq",
            anchor: "gain form G2, swapped parametrization: w^(l+1/2) f | w g (sup) | w^(1/2) k (L1)",
            target: ProbeTarget::Single(Form::G2),
            l: 0.0,
            q: INF,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 0.5, INF) * d.n(d.g, 1.0, INF) * d.n(d.k, 0.5, ONE),
        },
        ProbeCase {
            id: "gain1-sup-high",
            anchor: "principal gain G1, sup norm, l >= -1/2: w f (sup) | w^(1/2) g (L1) | w k (sup)",
            target: ProbeTarget::Single(Form::G1),
            l: 0.0,
            q: INF,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 1.0, INF) * d.n(d.g, 0.5, ONE) * d.n(d.k, 1.0, INF),
        },
        ProbeCase {
            id: "gain1-sup-low",
            anchor: "principal gain G1, sup norm, l < -1/2: w^(l+3/2) f | w^(l+1) g (L1) | w^(l+3/2) k",
            target: ProbeTarget::Single(Form::G1),
            l: -0.6,
            q: INF,
            vanish: 0.7,
            same_field: false,
            rhs: |d| d.n(d.f, 0.9, INF) * d.n(d.g, 0.4, ONE) * d.n(d.k, 0.9, INF),
        },
        ProbeCase {
            id: "gain1-l1-high",
            anchor: "principal gain G1, L1 norm, l >= -1/2: f (L1) | w^(1/2) g (sup) | k (L1)",
            target: ProbeTarget::Single(Form::G1),
            l: 0.0,
            q: ONE,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 0.0, ONE) * d.n(d.g, 0.5, INF) * d.n(d.k, 0.0, ONE),
        },
        ProbeCase {
            id: "gain1-l1-low",
            anchor: "principal gain G1, L1 norm, l < -1/2: w^(l+1/2) f (L1) | w^(l+1) g (sup) | w^(l+1/2) k (L1)",
            target: ProbeTarget::Single(Form::G1),
            l: -0.6,
            q: ONE,
            vanish: 0.7,
            same_field: false,
            rhs: |d| d.n(d.f, -0.1, ONE) * d.n(d.g, 0.4, INF) * d.n(d.k, -0.1, ONE),
        },
        ProbeCase {
            id: "gain1-l2-high",
            anchor: "principal gain G1, L2 norm, l >= -1/2: (w f (L2) w k (sup) + w k (L2) w f (sup)) w^(1/2) g (L1)",
            target: ProbeTarget::Single(Form::G1),
            l: 0.0,
            q: TWO,
            vanish: 0.0,
            same_field: false,
            rhs: |d| {
                (d.n(d.f, 1.0, TWO) * d.n(d.k, 1.0, INF) + d.n(d.k, 1.0, TWO) * d.n(d.f, 1.0, INF))
                    * d.n(d.g, 0.5, ONE)
            },
        },
        ProbeCase {
            id: "gain1-l2-low",
            anchor: "principal gain G1, L2 norm, l < -1/2: (w^(l+3/2) f (L2) w^(l+3/2) k (sup) + swap) w^(l+1) g (L1)",
            target: ProbeTarget::Single(Form::G1),
            l: -0.6,
            q: TWO,
            vanish: 0.7,
            same_field: false,
            rhs: |d| {
                (d.n(d.f, 0.9, TWO) * d.n(d.k, 0.9, INF) + d.n(d.k, 0.9, TWO) * d.n(d.f, 0.9, INF))
                    * d.n(d.g, 0.4, ONE)
            },
        },
        ProbeCase {
            id: "unified-sup-high",
            anchor: "all forms, sup norm, l >= -1/2: w^min(l+1/2,1) f | w f (sup) | w^(1/2) f (L1)",
            target: ProbeTarget::AllForms,
            l: 0.0,
            q: INF,
            vanish: 0.0,
            same_field: true,
            rhs: |d| d.n(d.f, 0.5, INF) * d.n(d.f, 1.0, INF) * d.n(d.f, 0.5, ONE),
        },
        ProbeCase {
            id: "unified-l1-high",
            anchor: "all forms, L1 norm, l >= -1/2: f (L1) | w^(1/2) f (sup) | f (L1)",
            target: ProbeTarget::AllForms,
            l: 0.0,
            q: ONE,
            vanish: 0.0,
            same_field: true,
            rhs: |d| d.n(d.f, 0.0, ONE) * d.n(d.f, 0.5, INF) * d.n(d.f, 0.0, ONE),
        },
        ProbeCase {
            id: "unified-l2-high",
            anchor: "all forms, L2 norm, l >= -1/2: w^min(l+1/2,1) f (L2) | w f (sup) | w^(1/2) f (L1)",
            target: ProbeTarget::AllForms,
            l: 0.0,
            q: TWO,
            vanish: 0.0,
            same_field: true,
            rhs: |d| d.n(d.f, 0.5, TWO) * d.n(d.f, 1.0, INF) * d.n(d.f, 0.5, ONE),
        },
        ProbeCase {
            id: "unified-sup-low",
            anchor: "all forms, sup norm, l < -1/2: w^(l+1/2) f | w^(l+3/2) f (sup) | w^(l+1) f (L1)",
            target: ProbeTarget::AllForms,
            l: -0.6,
            q: INF,
            vanish: 0.7,
            same_field: true,
            rhs: |d| d.n(d.f, -0.1, INF) * d.n(d.f, 0.9, INF) * d.n(d.f, 0.4, ONE),
        },
        ProbeCase {
            id: "unified-l1-low",
            anchor: "all forms, L1 norm, l < -1/2: w^(l+1/2) f (L1) | w^(l+1) f (sup) | w^(l+1/2) f (L1)",
            target: ProbeTarget::AllForms,
            l: -0.6,
            q: ONE,
            vanish: 0.7,
            same_field: true,
            rhs: |d| d.n(d.f, -0.1, ONE) * d.n(d.f, 0.4, INF) * d.n(d.f, -0.1, ONE),
        },
        ProbeCase {
            id: "unified-l2-low",
            anchor: "all forms, L2 norm, l < -1/2: w^(l+1/2) f (L2) | w^(l+3/2) f (sup) | w^(l+1) f (L1)",
            target: ProbeTarget::AllForms,
            l: -0.6,
            q: TWO,
            vanish: 0.7,
            same_field: true,
            rhs: |d| d.n(d.f, -0.1, TWO) * d.n(d.f, 0.9, INF) * d.n(d.f, 0.4, ONE),
        },
        ProbeCase {
            id: "weighted-sup-closure",
            anchor: "all forms, weighted sup closure, a <= 1: w^a T[f,g,k] (sup) <= product of w^a slots (sup)",
            target: ProbeTarget::AllForms,
            l: 1.0,
            q: INF,
            vanish: 0.0,
            same_field: false,
            rhs: |d| d.n(d.f, 1.0, INF) * d.n(d.g, 1.0, INF) * d.n(d.k, 1.0, INF),
        },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeGridResult {
    pub n_p: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub id: &'static str,
    pub anchor: &'static str,
    pub l: f64,
    pub q: String,
    pub trials: usize,
    pub seed: u64,
    pub grids: Vec<ProbeGridResult>,
    /// `max_ratio` on the finest grid over the coarsest.
    pub refinement_growth: f64,
}

fn case_ratio(
    case: &ProbeCase,
    table: &KernelTable,
    grid: &MomentumGrid,
    data: &CaseData,
) -> Result<f64> {
    let rhs = (case.rhs)(data);
    let lhs = |form: Form| -> f64 {
        let out = table.form(form, data.f, data.g, data.k);
        weighted_lq_p(&out, grid, case.l, case.q)
    };
    let lhs = match case.target {
        ProbeTarget::Single(form) => lhs(form),
        ProbeTarget::AllForms => [Form::G1, Form::G2, Form::L1, Form::L2]
            .into_iter()
            .map(lhs)
            .fold(0.0f64, f64::max),
    };
    if rhs == 0.0 {
        if lhs > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "probe {}: vanishing right-hand side with lhs = {lhs}",
                case.id
            )));
        }
        return Ok(0.0);
    }
    Ok(lhs / rhs)
}

/// Run one case over `trials` random triples on each grid size. The random
/// fields are closed forms drawn once per trial, so both grids see the same
/// triple.
pub fn run_probe(
    case: &ProbeCase,
    grid_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let mut grids = Vec::with_capacity(grid_sizes.len());
    let setups: Vec<(MomentumGrid, KernelTable)> = grid_sizes
        .iter()
        .map(|&n| {
            let g = MomentumGrid::new(n)?;
            let t = build_kernel_table(&g);
            Ok((g, t))
        })
        .collect::<Result<_>>()?;

    let case_seed = seed ^ fxhash(case.id);
    let mut maxima = vec![0.0f64; setups.len()];
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed.wrapping_add(trial as u64));
        let f = ProbeField::random(&mut rng, case.vanish);
        let g = ProbeField::random(&mut rng, case.vanish);
        let k = ProbeField::random(&mut rng, case.vanish);
        for (i, (grid, table)) in setups.iter().enumerate() {
            let fs = f.sample(grid);
            let (gs, ks);
            if case.same_field {
                gs = fs.clone();
                ks = fs.clone();
            } else {
                gs = g.sample(grid);
                ks = k.sample(grid);
            }
            let data = CaseData { grid, f: &fs, g: &gs, k: &ks };
            maxima[i] = maxima[i].max(case_ratio(case, table, grid, &data)?);
        }
    }
    for (i, &n) in grid_sizes.iter().enumerate() {
        grids.push(ProbeGridResult { n_p: n, max_ratio: maxima[i] });
    }
    let growth = maxima.last().unwrap() / maxima.first().unwrap();
    Ok(ProbeResult {
        id: case.id,
        anchor: case.anchor,
        l: case.l,
        q: case.q.to_string(),
        trials,
        seed,
        grids,
        refinement_growth: growth,
    })
}

fn fxhash(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
