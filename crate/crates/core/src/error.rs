use std::io;

use thiserror::Error;

/// Errors raised by the spin-field machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate lattice: no lattice point of spacing {eps} lies inside the domain")]
    DegenerateLattice { eps: f64 },

    #[error("point ({x}, {y}) is outside the support of the interpolation")]
    OutOfSupport { x: f64, y: f64 },

    #[error("plaquette at ({i}, {j}) has a missing corner")]
    IncompletePlaquette { i: i64, j: i64 },

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The phase sum around a cell was not an integer multiple of 2π.
    #[error("winding residue {0:e} exceeds tolerance")]
    PhaseResidue(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
