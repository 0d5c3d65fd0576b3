//! Machine-readable verification reports.
//!
//! Every command emits a `report.json` with the command name, a hash of the
//! effective configuration, grid sizes, the RNG seed, and one record per
//! check: `{id, anchor, value, tolerance, pass}`. Re-running with the same
//! configuration and seed reproduces all numbers bit for bit on the same
//! machine and thread count.

use crate::error::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// Names the identity or estimate being checked, in words.
    pub anchor: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Check that passes when `value <= tolerance`.
    pub fn upper(id: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }

    /// Check that passes when `value >= tolerance`.
    pub fn lower(id: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            value,
            tolerance,
            pass: value.is_finite() && value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSizes {
    pub n_p: usize,
    pub n_x: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub grid: GridSizes,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    /// Command-specific payload (fit tables, probe results, trajectories).
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, config_repr: &str, grid: GridSizes, seed: u64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.into(),
            config_hash: format!("{:016x}", fnv1a64(config_repr.as_bytes())),
            grid,
            seed,
            checks: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = std::fs::File::create(path)?;
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// 64-bit FNV-1a, stable across runs and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
