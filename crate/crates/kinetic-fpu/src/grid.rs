//! Discrete phase-space representation.
//!
//! Momentum lives on a midpoint grid over the torus so that `omega > 0` at
//! every node (negative weight powers and the kernel corners are never
//! evaluated at singular points); space is a truncated interval with uniform
//! inclusive nodes and zero extension outside.

use crate::dispersion::reduce;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::sync::Arc;
use std::f64::consts::TAU;

/// Midpoint grid on the momentum torus: `p_k = (k + 1/2) * 2pi / n`.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    cell: f64,
}

impl MomentumGrid {
    pub fn new(n_p: usize) -> Result<Self> {
        if n_p < 2 {
            return Err(Error::Config(format!("momentum grid needs n_p >= 2, got {n_p}")));
        }
        let cell = TAU / n_p as f64;
        let nodes = (0..n_p).map(|k| (k as f64 + 0.5) * cell).collect();
        Ok(Self { nodes, cell })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn cell_width(&self) -> f64 {
        self.cell
    }

    /// Lower node index and fraction for periodic linear interpolation at `p`.
    #[inline]
    pub fn interp_setup(&self, p: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let u = reduce(p) / self.cell - 0.5;
        let j = u.floor();
        let frac = u - j;
        let ja = ((j as isize).rem_euclid(n as isize)) as usize;
        (ja, frac)
    }

    /// Periodic linear interpolation of a sample vector.
    #[inline]
    pub fn interp_periodic(&self, samples: &[f64], p: f64) -> f64 {
        debug_assert_eq!(samples.len(), self.nodes.len());
        let (ja, frac) = self.interp_setup(p);
        let jb = if ja + 1 == samples.len() { 0 } else { ja + 1 };
        samples[ja] + frac * (samples[jb] - samples[ja])
    }

    /// Midpoint quadrature of a sample vector over the torus.
    #[inline]
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        samples.iter().sum::<f64>() * self.cell
    }
}

/// Uniform inclusive grid on a truncated spatial interval.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n: usize,
    cell: f64,
}

impl SpatialGrid {
    pub fn new(n_x: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::Config(format!("spatial grid needs n_x >= 2, got {n_x}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::Config(format!(
                "spatial grid needs x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        let cell = (x_max - x_min) / (n_x - 1) as f64;
        Ok(Self { x_min, x_max, n: n_x, cell })
    }

    /// Symmetric grid around the origin with an odd node count, so that `x = 0`
    /// is a node.
    pub fn symmetric(half_width: f64, n_half: usize) -> Result<Self> {
        Self::new(2 * n_half + 1, -half_width, half_width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.cell
    }

    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    #[inline]
    pub fn cell_width(&self) -> f64 {
        self.cell
    }

    /// Trapezoid quadrature of one sample per node.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n);
        let interior: f64 = samples[1..self.n - 1].iter().sum();
        (interior + 0.5 * (samples[0] + samples[self.n - 1])) * self.cell
    }
}

/// Sampled phase-space field, row-major with the momentum index fastest.
#[derive(Debug, Clone)]
pub struct GridField {
    sgrid: SpatialGrid,
    mgrid: MomentumGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(sgrid: SpatialGrid, mgrid: MomentumGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != sgrid.len() * mgrid.len() {
            return Err(Error::Config(format!(
                "field length {} does not match {} x {}",
                values.len(),
                sgrid.len(),
                mgrid.len()
            )));
        }
        Ok(Self { sgrid, mgrid, values })
    }

    pub fn zeros(sgrid: SpatialGrid, mgrid: MomentumGrid) -> Self {
        let values = vec![0.0; sgrid.len() * mgrid.len()];
        Self { sgrid, mgrid, values }
    }

    #[inline]
    pub fn spatial(&self) -> &SpatialGrid {
        &self.sgrid
    }

    #[inline]
    pub fn momentum(&self) -> &MomentumGrid {
        &self.mgrid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.mgrid.len() + ip]
    }

    /// The samples of one spatial slice, a momentum function.
    #[inline]
    pub fn slice(&self, ix: usize) -> &[f64] {
        let n_p = self.mgrid.len();
        &self.values[ix * n_p..(ix + 1) * n_p]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Cubic 4-point Lagrange interpolation along `x` at a fixed momentum
    /// node, linear in the boundary cells, zero outside the domain.
    pub fn interp_x(&self, x: f64, p_index: usize) -> f64 {
        let n = self.sgrid.len();
        let n_p = self.mgrid.len();
        if x < self.sgrid.x_min() || x > self.sgrid.x_max() {
            return 0.0;
        }
        let u = (x - self.sgrid.x_min()) / self.sgrid.cell_width();
        let mut j = u.floor() as isize;
        if j as usize >= n - 1 {
            j = n as isize - 2;
        }
        if j < 0 {
            j = 0;
        }
        let j = j as usize;
        let th = u - j as f64;
        let get = |jj: usize| self.values[jj * n_p + p_index];
        if j >= 1 && j + 2 < n {
            // Stencil j-1 .. j+2 in the local coordinate th.
            let w_m1 = -th * (th - 1.0) * (th - 2.0) / 6.0;
            let w_0 = (th * th - 1.0) * (th - 2.0) / 2.0;
            let w_1 = -th * (th + 1.0) * (th - 2.0) / 2.0;
            let w_2 = th * (th * th - 1.0) / 6.0;
            w_m1 * get(j - 1) + w_0 * get(j) + w_1 * get(j + 1) + w_2 * get(j + 2)
        } else {
            get(j) + th * (get(j + 1) - get(j))
        }
    }

    /// Largest |x| of any sample above `threshold` in absolute value, or
    /// `None` for an all-zero field.
    pub fn support_extent(&self, threshold: f64) -> Option<(f64, f64)> {
        let n_p = self.mgrid.len();
        let mut lo = None;
        let mut hi = None;
        for j in 0..self.sgrid.len() {
            let row = &self.values[j * n_p..(j + 1) * n_p];
            if row.iter().any(|v| v.abs() > threshold) {
                let x = self.sgrid.node(j);
                if lo.is_none() {
                    lo = Some(x);
                }
                hi = Some(x);
            }
        }
        lo.zip(hi)
    }

    /// Binary layout: `n_x`, `n_p` as little-endian u64, then `x_min`, `x_max`
    /// as little-endian f64, then the row-major samples as little-endian f64.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.sgrid.len() as u64).to_le_bytes())?;
        w.write_all(&(self.mgrid.len() as u64).to_le_bytes())?;
        w.write_all(&self.sgrid.x_min().to_le_bytes())?;
        w.write_all(&self.sgrid.x_max().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n_x = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let n_p = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let x_min = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let x_max = f64::from_le_bytes(b8);
        let sgrid = SpatialGrid::new(n_x, x_min, x_max)?;
        let mgrid = MomentumGrid::new(n_p)?;
        let mut values = vec![0.0; n_x * n_p];
        for v in &mut values {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        GridField::new(sgrid, mgrid, values)
    }

    /// CSV export of `(x, p, value)` triples for plotting.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,p,value")?;
        for j in 0..self.sgrid.len() {
            for k in 0..self.mgrid.len() {
                writeln!(w, "{},{},{}", self.sgrid.node(j), self.mgrid.node(k), self.at(j, k))?;
            }
        }
        Ok(())
    }
}

/// Closed-form field `(x, p) -> value` with a declared spatial support radius.
#[derive(Clone)]
pub struct ClosedForm {
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    support_radius: f64,
}

impl std::fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedForm")
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl ClosedForm {
    pub fn new(
        support_radius: f64,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(support_radius.is_finite() && support_radius > 0.0) {
            return Err(Error::Config(format!(
                "support radius must be finite and positive, got {support_radius}"
            )));
        }
        Ok(Self { eval: Arc::new(eval), support_radius })
    }

    #[inline]
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        (self.eval)(x, p)
    }

    #[inline]
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// Phase-space field, either sampled or closed-form.
#[derive(Debug, Clone)]
pub enum PhaseField {
    Grid(GridField),
    Closed(ClosedForm),
}

/// Initial data `eps * exp(-x^2/sigma^2) * sin(p/2)^m`.
#[derive(Debug, Clone, Copy)]
pub struct InitialDataFamily {
    pub epsilon: f64,
    pub sigma: f64,
    pub momentum_power: u32,
}

impl InitialDataFamily {
    pub fn new(epsilon: f64, sigma: f64, momentum_power: u32) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Config(format!("amplitude must be >= 0, got {epsilon}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(Self { epsilon, sigma, momentum_power })
    }

    #[inline]
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let s = (0.5 * reduce(p)).sin().max(0.0);
        self.epsilon * (-x * x / (self.sigma * self.sigma)).exp() * s.powi(self.momentum_power as i32)
    }

    /// Radius beyond which the Gaussian factor drops below `tail`.
    pub fn support_radius(&self, tail: f64) -> f64 {
        self.sigma * (-tail.ln()).sqrt()
    }

    pub fn closed_form(&self) -> ClosedForm {
        let me = *self;
        ClosedForm::new(self.support_radius(1e-32), move |x, p| me.eval(x, p))
            .expect("positive support radius")
    }
}

/// Pointwise evaluation at the tensor nodes.
pub fn sample(field: &ClosedForm, mgrid: &MomentumGrid, sgrid: &SpatialGrid) -> Result<GridField> {
    let mut values = Vec::with_capacity(sgrid.len() * mgrid.len());
    for j in 0..sgrid.len() {
        let x = sgrid.node(j);
        for k in 0..mgrid.len() {
            let p = mgrid.node(k);
            let v = field.eval(x, p);
            if !v.is_finite() {
                return Err(Error::Sampling { x, p });
            }
            values.push(v);
        }
    }
    GridField::new(sgrid.clone(), mgrid.clone(), values)
}
