//! Run configuration: grids, datum family, solver parameters and control-norm
//! exponents, loaded from TOML or JSON by file extension.

use crate::error::{Error, Result};
use crate::grid::{InitialDataFamily, MomentumGrid, SpatialGrid};
use crate::norms::XNormSpec;
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridsConfig {
    pub n_p: usize,
    pub n_x: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumConfig {
    pub epsilon: f64,
    pub sigma: f64,
    pub momentum_power: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_blowup")]
    pub blowup_multiplier: f64,
    #[serde(default)]
    pub store_snapshots: bool,
}

fn default_stride() -> usize {
    10
}

fn default_blowup() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XNormSection {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn default_beta() -> f64 {
    0.5
}

/// Full run configuration as read from a `[grids]`/`[datum]`/`[solver]`/
/// `[xnorm]` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grids: GridsConfig,
    pub datum: DatumConfig,
    pub solver: SolverSection,
    pub xnorm: XNormSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.momentum_grid()?;
        self.spatial_grid()?;
        let family = self.family()?;
        self.xnorm_spec().validate()?;
        self.solver_config().validate()?;
        // The support must stay inside the truncated domain for the whole
        // horizon: growth is at most t/2 per side.
        let reach = family.support_radius(1e-14) + 0.5 * self.solver.t_end;
        if self.grids.x_max < reach || self.grids.x_min > -reach {
            return Err(Error::Config(format!(
                "spatial domain [{}, {}] cannot hold the datum support plus transport growth (needs +-{reach:.2})",
                self.grids.x_min, self.grids.x_max
            )));
        }
        Ok(())
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::new(self.grids.n_p)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grids.n_x, self.grids.x_min, self.grids.x_max)
    }

    pub fn family(&self) -> Result<InitialDataFamily> {
        InitialDataFamily::new(self.datum.epsilon, self.datum.sigma, self.datum.momentum_power)
    }

    pub fn xnorm_spec(&self) -> XNormSpec {
        XNormSpec { alpha: self.xnorm.alpha, beta: self.xnorm.beta, gamma: self.xnorm.gamma }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            snapshot_stride: self.solver.snapshot_stride,
            xnorm: self.xnorm_spec(),
            blowup_multiplier: self.solver.blowup_multiplier,
            store_fields: self.solver.store_snapshots,
            bootstrap_scale: None,
            bootstrap_c1: 10.0,
            collision_enabled: true,
        }
    }
}

impl Default for RunConfig {
    /// Reference run: conservation-grade resolution over `[0, 5]`.
    fn default() -> Self {
        Self {
            grids: GridsConfig { n_p: 256, n_x: 512, x_min: -12.0, x_max: 12.0 },
            datum: DatumConfig { epsilon: 0.1, sigma: 1.0, momentum_power: 2 },
            solver: SolverSection {
                dt: 0.01,
                t_end: 5.0,
                snapshot_stride: 10,
                blowup_multiplier: 10.0,
                store_snapshots: false,
            },
            xnorm: XNormSection { alpha: 0.0, beta: 0.5, gamma: 0.0 },
        }
    }
}
