use std::path::PathBuf;

use thiserror::Error;

use crate::quantum::QuantumState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimensionless view undefined at Ω = 0")]
    DimensionlessUndefined,

    #[error("absolute boson amplitude given without model parameters (N, g, δ needed for α_s)")]
    MissingModelParams,

    #[error("initial Fock cutoff {needed} exceeds the hard ceiling {ceiling}")]
    CutoffCeiling { needed: usize, ceiling: usize },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("empty averaging window [{t0}, {t1}]")]
    EmptyWindow { t0: f64, t1: f64 },

    #[error("undefined normalization: time average is zero")]
    UndefinedNormalization,

    #[error("potential degenerate at poles (θ₀ = ±π/2)")]
    DegeneratePotential,

    #[error("β₀ = {0} is outside derivation domain (0, 2)")]
    OutsideDomain(f64),

    #[error("no sign change of the barrier height in g̃ ∈ [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("Krylov propagation did not converge: error estimate {estimate:e} after {halvings} step halvings")]
    KrylovNonConvergence { estimate: f64, halvings: u32 },

    #[error("Fock cutoff {needed} exceeds the hard ceiling {ceiling} at g·t = {time}")]
    FockCeiling {
        needed: usize,
        ceiling: usize,
        time: f64,
        /// State at the last interval boundary, so a caller can resume with a larger ceiling.
        checkpoint: Box<QuantumState>,
    },

    #[error("wall-clock budget of {budget_s} s exhausted at g·t = {time}")]
    WallClockBudget { budget_s: f64, time: f64 },

    #[error("dense reference dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("plan hash mismatch: stored {stored}, requested {requested}")]
    PlanMismatch { stored: String, requested: String },

    #[error("no prior sweep found in {0}")]
    NoPriorRun(PathBuf),

    #[error("sweep result does not carry classical order parameters")]
    WrongTask,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
