//! Driven-dissipative dynamics of N molecules in the cavity, tracked through
//! second-order cumulants.

mod equations;
mod evolve;
mod params;
mod state;

pub use equations::{close_triple, rhs, rhs_with_drive, Generator};
pub use evolve::{
    integrate, uniform_times, Drive, Evolution, IntegrationOptions, Trajectory,
    TrajectoryMetadata,
};
pub use params::{
    collective_coupling, default_pulse_sigma, pulse_envelope, DynamicsParams, PulseParams,
};
pub use state::{
    flat_len, moment_name, op, transposed, CumulantState, C64, GROUND, LEVELS, OPS, S1_LOWER,
    S1_UPPER, TRIPLET,
};

/// Cavity vacuum with every molecule in S₀. The tracked moments are ensemble
/// averages, so the state is the same for every N.
pub fn ground_state(_n_molecules: f64) -> CumulantState {
    CumulantState::ground()
}
