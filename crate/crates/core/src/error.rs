use std::path::PathBuf;

use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::polariton::CoupledOscillatorParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("unknown device `{name}`; valid devices: {}", valid.join(", "))]
    UnknownDevice { name: String, valid: Vec<String> },

    #[error("fit did not converge after {iterations} iterations (best residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Box<CoupledOscillatorParams>,
    },

    #[error("numerical blowup in moment {moment} at t = {t} ps")]
    NumericalBlowup { moment: String, t: f64 },

    #[error("integration failed at t = {t} ps: {reason}")]
    Integration {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("charging time undefined: maximum stored energy is zero")]
    UndefinedChargingTime,

    #[error("curve has no power-generating quadrant")]
    NoPowerPoint,

    #[error("photon cutoff too small: top Fock level population {top_population:.3e}")]
    CutoffInsufficient { top_population: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 1 domain error, 2 numerical failure.
    /// Validation failures (3) are decided by the caller, not by an error value.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. }
            | Error::NumericalBlowup { .. }
            | Error::Integration { .. }
            | Error::CutoffInsufficient { .. } => 2,
            _ => 1,
        }
    }
}
