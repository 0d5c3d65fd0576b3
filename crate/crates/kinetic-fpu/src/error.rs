use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A negative weight power was requested at a momentum where omega vanishes.
    #[error("weight singularity: omega(p) = 0 at p = {p} with exponent l = {l} < 0")]
    WeightSingularity { p: f64, l: f64 },

    /// The arcsin argument of the resonance parametrization left [-1, 1] by
    /// more than the clamping tolerance.
    #[error("parametrization domain: arcsin argument {arg} outside [-1, 1] beyond tolerance")]
    ParametrizationDomain { arg: f64 },

    /// The Jacobian denominator fell below its floor.
    #[error("near-degenerate jacobian at (p0, p2) = ({p0}, {p2})")]
    NearDegenerateJacobian { p0: f64, p2: f64 },

    /// A weighted norm with a non-integrable weight was requested.
    #[error("divergent norm: weight power l = {l} with inner exponent q = {q} (need l*q > -1)")]
    DivergentNorm { l: f64, q: f64 },

    #[error("sampling produced a non-finite value at (x, p) = ({x}, {p})")]
    Sampling { x: f64, p: f64 },

    /// Advection would push support across the truncated spatial boundary.
    #[error("support overflow: advection by t = {t} leaves the spatial domain")]
    SupportOverflow { t: f64 },

    /// A field stopped being finite during time integration.
    #[error("non-finite field values encountered")]
    NonFinite,

    #[error("picard iteration diverged: {0}")]
    ContractionFailure(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
