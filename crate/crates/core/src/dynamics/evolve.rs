use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{self, FailureKind, StepCeiling};
use crate::units::FS_TO_PS;

use super::equations::{check_finite, Generator};
use super::params::DynamicsParams;
use super::state::{CumulantState, Layout, LEVELS};

/// Flat offsets of the four populations ⟨X_αα⟩.
const POPULATION_OFFSETS: [usize; LEVELS] = [5, 12, 17, 20];

/// Coherent drive applied to the cavity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// The Gaussian pulse described by `DynamicsParams::pulse`.
    Pulse,
    /// Time-independent amplitude (ps⁻¹).
    Constant(f64),
    Off,
}

impl Drive {
    pub fn amplitude(&self, t: f64, p: &DynamicsParams) -> f64 {
        match *self {
            Drive::Pulse => p.drive_amplitude(t),
            Drive::Constant(eta) => eta,
            Drive::Off => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// ps
    pub initial_step: f64,
    /// Step ceiling inside t0 ± 4σ (ps).
    pub max_step_pulse: f64,
    /// Step ceiling elsewhere (ps).
    pub max_step_outside: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            initial_step: 0.1 * FS_TO_PS,
            max_step_pulse: 10.0 * FS_TO_PS,
            max_step_outside: 100.0 * FS_TO_PS,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    /// |Σ_α ⟨X_αα⟩ − 1| at the end of the run.
    pub final_trace_deviation: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

/// Sampled solution. States are kept in flat form and decoded on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    samples: Vec<Vec<f64>>,
    pub params: DynamicsParams,
    pub metadata: TrajectoryMetadata,
}

impl Trajectory {
    /// No samples; used as the partial result of solvers that do not keep one.
    pub(crate) fn empty(params: DynamicsParams) -> Self {
        Self {
            times: Vec::new(),
            samples: Vec::new(),
            params,
            metadata: TrajectoryMetadata {
                final_trace_deviation: f64::NAN,
                accepted_steps: 0,
                rejected_steps: 0,
                rhs_evaluations: 0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> CumulantState {
        CumulantState::from_flat(&self.samples[i])
    }

    pub fn states(&self) -> impl Iterator<Item = CumulantState> + '_ {
        self.samples.iter().map(|v| CumulantState::from_flat(v))
    }

    pub fn flat(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn populations(&self, i: usize) -> [f64; LEVELS] {
        POPULATION_OFFSETS.map(|o| self.samples[i][o])
    }

    pub fn field(&self, i: usize) -> Complex64 {
        Complex64::new(self.samples[i][0], self.samples[i][1])
    }

    pub fn photon_number(&self, i: usize) -> f64 {
        self.samples[i][2]
    }

    pub fn trace_deviation(&self, i: usize) -> f64 {
        (self.populations(i).iter().sum::<f64>() - 1.0).abs()
    }
}

/// Strictly increasing grid from `start` with spacing `dt`, never past `end`.
/// When `dt` divides the window (up to roundoff) the last point is `end`.
pub fn uniform_times(start: f64, end: f64, dt: f64) -> Vec<f64> {
    let span = (end - start) / dt;
    let n = (span + 1e-9).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|i| (start + i as f64 * dt).min(end)).collect();
    if (span - n as f64).abs() < 1e-9 {
        t[n] = end;
    }
    t
}

/// Configurable run of the cumulant equations.
#[derive(Debug, Clone)]
pub struct Evolution {
    params: DynamicsParams,
    drive: Drive,
    initial: CumulantState,
    options: IntegrationOptions,
}

impl Evolution {
    pub fn new(params: DynamicsParams) -> Self {
        Self {
            params,
            drive: Drive::Pulse,
            initial: CumulantState::ground(),
            options: IntegrationOptions::default(),
        }
    }

    pub fn drive(mut self, drive: Drive) -> Self {
        self.drive = drive;
        self
    }

    pub fn initial(mut self, state: CumulantState) -> Self {
        self.initial = state;
        self
    }

    pub fn options(mut self, options: IntegrationOptions) -> Self {
        self.options = options;
        self
    }

    pub fn run(&self, t_start: f64, t_end: f64, output_times: &[f64]) -> Result<Trajectory> {
        self.params.validate()?;
        check_window(t_start, t_end, output_times, &self.options)?;

        let generator = Generator::new(&self.params);
        let window = match self.drive {
            Drive::Pulse => Some(self.params.pulse_window()),
            _ => None,
        };
        let opts = integrator::Options {
            rel_tol: self.options.rel_tol,
            abs_tol: self.options.abs_tol,
            initial_step: self.options.initial_step,
            min_step: 1e-14,
            max_steps: self.options.max_steps,
            ceiling: StepCeiling {
                window,
                inside: self.options.max_step_pulse,
                outside: self.options.max_step_outside,
            },
        };
        let params = &self.params;
        let drive = self.drive;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            let s = CumulantState::from_flat(y);
            generator.derivative_flat(&s, drive.amplitude(t, params), dy);
            check_finite(t, dy)
        };

        let y0 = self.initial.to_flat();
        debug_assert_eq!(y0.len(), Layout::get().len);
        match integrator::solve(rhs, t_start, &y0, t_end, output_times, &opts) {
            Ok(sol) => {
                let final_trace: f64 = POPULATION_OFFSETS.iter().map(|&o| sol.final_state[o]).sum();
                Ok(Trajectory {
                    times: output_times.to_vec(),
                    samples: sol.samples,
                    params: self.params,
                    metadata: TrajectoryMetadata {
                        final_trace_deviation: (final_trace - 1.0).abs(),
                        accepted_steps: sol.stats.accepted,
                        rejected_steps: sol.stats.rejected,
                        rhs_evaluations: sol.stats.evaluations,
                    },
                })
            }
            Err(failure) => {
                let reason = match failure.kind {
                    FailureKind::Rhs(e) => e.to_string(),
                    FailureKind::StepUnderflow { h } => format!("step size underflow (h = {h:e} ps)"),
                    FailureKind::TooManySteps => "step budget exhausted".to_string(),
                };
                let n = failure.samples.len();
                let partial = Trajectory {
                    times: output_times[..n].to_vec(),
                    samples: failure.samples,
                    params: self.params,
                    metadata: TrajectoryMetadata {
                        final_trace_deviation: f64::NAN,
                        accepted_steps: failure.stats.accepted,
                        rejected_steps: failure.stats.rejected,
                        rhs_evaluations: failure.stats.evaluations,
                    },
                };
                Err(Error::Integration {
                    t: failure.t,
                    reason,
                    partial: Box::new(partial),
                })
            }
        }
    }
}

fn check_window(
    t_start: f64,
    t_end: f64,
    outputs: &[f64],
    options: &IntegrationOptions,
) -> Result<()> {
    if !(t_start < t_end) {
        return Err(Error::InvalidInput(format!(
            "integration window must satisfy t_start < t_end (got {t_start}, {t_end})"
        )));
    }
    if !(options.rel_tol > 0.0 && options.abs_tol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    if outputs.iter().any(|&t| t < t_start || t > t_end) {
        return Err(Error::InvalidInput(
            "output times must lie inside the integration window".into(),
        ));
    }
    if outputs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "output times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Integrates from the ground state under the pulse in `p`.
pub fn integrate(
    p: &DynamicsParams,
    t_start: f64,
    t_end: f64,
    output_times: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory> {
    Evolution::new(*p)
        .options(IntegrationOptions::with_tolerances(rel_tol, abs_tol))
        .run(t_start, t_end, output_times)
}
