//! Independent references for the cumulant engine: a dense master-equation
//! solver for one or two molecules and closed forms for decoupled limits.

mod analytic;
mod lindblad;

pub use analytic::{driven_cavity_constant, driven_cavity_solution, rate_equation_solution};
pub use lindblad::{
    lindblad_propagate, DensityMatrix, FockConfig, LindbladModel, CUTOFF_TOLERANCE,
    MAX_DIMENSION,
};
