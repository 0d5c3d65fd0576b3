//! Solver and verification harness for the inhomogeneous kinetic FPU equation:
//! free transport `d_t f + v(p) d_x f` coupled to a four-phonon resonant
//! collision operator on the momentum torus.
//!
//! The library certifies the closed-form structure of the resonant manifold,
//! the dispersive decay of the transport semigroup in weighted mixed norms,
//! the weighted trilinear bounds on the collision operator, and the
//! conservation laws of the full dynamics, and it runs lifespan-scaling
//! experiments for small initial data.

pub mod collision;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod norms;
pub mod probes;
pub mod report;
pub mod resonance;
pub mod solver;
pub mod suites;
pub mod transport;

pub use error::{Error, Result};
