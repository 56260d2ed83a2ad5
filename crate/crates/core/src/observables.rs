//! Quantities derived from trajectories: stored energy, differential
//! reflectance, charging time and power, and sweeps over the absorber count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    uniform_times, CumulantState, Evolution, IntegrationOptions, DynamicsParams, Trajectory,
    S1_LOWER, S1_UPPER, TRIPLET,
};
use crate::error::{Error, Result};
use crate::polariton::Spectrum;
use crate::units::FS_TO_PS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingReport {
    /// eV per molecule
    pub e_max: f64,
    /// ps
    pub tau: f64,
    /// eV/ps per molecule
    pub p_max: f64,
    pub n_molecules: f64,
}

/// Instrument response of the pump-probe setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrfParams {
    /// ps
    pub fwhm: f64,
}

impl Default for IrfParams {
    fn default() -> Self {
        Self { fwhm: 50.0 * FS_TO_PS }
    }
}

impl IrfParams {
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }
}

/// Stored energy per molecule (eV): Δ₁⟨X₁₁⟩ + Δ₂⟨X₂₂⟩ + ΔT⟨X_TT⟩.
pub fn energy_density(s: &CumulantState, p: &DynamicsParams) -> f64 {
    p.delta1 * s.single[S1_LOWER][S1_LOWER].re
        + p.delta2 * s.single[S1_UPPER][S1_UPPER].re
        + p.delta_t * s.single[TRIPLET][TRIPLET].re
}

/// E(t) at every sample of the trajectory.
pub fn energy_curve(traj: &Trajectory) -> Vec<f64> {
    (0..traj.len())
        .map(|i| {
            let pops = traj.populations(i);
            let p = &traj.params;
            p.delta1 * pops[S1_LOWER] + p.delta2 * pops[S1_UPPER] + p.delta_t * pops[TRIPLET]
        })
        .collect()
}

/// Summed excited population convolved with the instrument response.
pub fn delta_r_over_r(traj: &Trajectory, irf: &IrfParams) -> Result<Spectrum> {
    let raw: Vec<f64> = (0..traj.len())
        .map(|i| {
            let pops = traj.populations(i);
            pops[S1_LOWER] + pops[S1_UPPER] + pops[TRIPLET]
        })
        .collect();
    let smoothed = convolve_irf(&traj.times, &raw, irf)?;
    Spectrum::new(traj.times.iter().copied().zip(smoothed).collect())
}

/// Convolution with a unit-sum Gaussian kernel of the given FWHM. The grid must
/// be uniform with spacing at most FWHM/5; edge values are held constant
/// beyond the ends of the series.
pub fn convolve_irf(times: &[f64], values: &[f64], irf: &IrfParams) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput("times and values differ in length".into()));
    }
    if !(irf.fwhm > 0.0) {
        return Err(Error::InvalidInput(format!("IRF fwhm must be positive (got {})", irf.fwhm)));
    }
    if times.len() < 2 {
        return Ok(values.to_vec());
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform {
        return Err(Error::InvalidInput("ΔR/R needs a uniform time grid".into()));
    }
    if dt > irf.fwhm / 5.0 {
        return Err(Error::InvalidInput(format!(
            "time step {dt} ps is coarser than fwhm/5 = {} ps",
            irf.fwhm / 5.0
        )));
    }
    let sigma = irf.sigma();
    let half = (5.0 * sigma / dt).ceil() as isize;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| (-(k as f64 * dt).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let last = values.len() as isize - 1;
    Ok((0..values.len() as isize)
        .map(|i| {
            kernel
                .iter()
                .zip(-half..=half)
                .map(|(w, k)| w * values[(i - k).clamp(0, last) as usize])
                .sum()
        })
        .collect())
}

/// τ from a sampled energy curve: the first time E reaches E_max/2 after
/// `t_start`, minus `t_start`. E_max is taken over samples at or after `t_start`.
pub fn charging_time_from_curve(times: &[f64], energy: &[f64], t_start: f64) -> Result<f64> {
    let (_, tau) = half_rise(times, energy, t_start)?;
    Ok(tau)
}

fn half_rise(times: &[f64], energy: &[f64], t_start: f64) -> Result<(f64, f64)> {
    if times.len() != energy.len() {
        return Err(Error::InvalidInput("times and energy differ in length".into()));
    }
    let first = times.partition_point(|&t| t < t_start);
    let e_max = energy[first..].iter().cloned().fold(0.0, f64::max);
    if !(e_max > 0.0) {
        return Err(Error::UndefinedChargingTime);
    }
    let half = 0.5 * e_max;
    for i in first..times.len() {
        if energy[i] >= half {
            let t_half = if i == first || energy[i] == half {
                times[i]
            } else {
                let (t0, t1, e0, e1) = (times[i - 1], times[i], energy[i - 1], energy[i]);
                t0 + (half - e0) / (e1 - e0) * (t1 - t0)
            };
            return Ok((e_max, t_half - t_start));
        }
    }
    unreachable!("the maximum itself reaches half of the maximum")
}

/// τ measured from the 1/e² intensity point of the pump.
pub fn charging_time(traj: &Trajectory, p: &DynamicsParams) -> Result<f64> {
    charging_time_from_curve(&traj.times, &energy_curve(traj), p.pulse.intensity_onset())
}

pub fn charging_report(traj: &Trajectory, p: &DynamicsParams) -> Result<ChargingReport> {
    let (e_max, tau) = half_rise(&traj.times, &energy_curve(traj), p.pulse.intensity_onset())?;
    Ok(ChargingReport {
        e_max,
        tau,
        p_max: e_max / tau,
        n_molecules: p.n_molecules,
    })
}

/// Simulation window and sampling for charging runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeWindow {
    /// ps
    pub t_start: f64,
    /// ps
    pub t_end: f64,
    /// Output spacing (ps).
    pub dt: f64,
}

impl Default for ChargeWindow {
    fn default() -> Self {
        Self {
            t_start: -1.0,
            t_end: 10.0,
            dt: FS_TO_PS,
        }
    }
}

impl ChargeWindow {
    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.t_start, self.t_end, self.dt)
    }
}

/// Pulse-driven run from the ground state over `window`.
pub fn simulate_charging(
    p: &DynamicsParams,
    window: &ChargeWindow,
    options: &IntegrationOptions,
) -> Result<Trajectory> {
    Evolution::new(*p)
        .options(*options)
        .run(window.t_start, window.t_end, &window.times())
}

#[derive(Debug)]
pub struct SweepPoint {
    pub n_molecules: f64,
    pub report: Result<ChargingReport>,
}

/// Charging reports across absorber counts. Each point keeps the photon-to-
/// molecule ratio of `base` and has its drive retuned to the lower polariton.
/// Points run in parallel; results follow the order of `n_values`, and a
/// failed point does not stop the others.
pub fn scaling_sweep(
    base: &DynamicsParams,
    n_values: &[f64],
    window: &ChargeWindow,
    options: &IntegrationOptions,
) -> Result<Vec<SweepPoint>> {
    if n_values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one N".into()));
    }
    if let Some(bad) = n_values.iter().find(|&&n| !(n >= 1.0) || !n.is_finite()) {
        return Err(Error::InvalidInput(format!("sweep N must be >= 1 (got {bad})")));
    }
    Ok(n_values
        .par_iter()
        .map(|&n| {
            let p = sweep_params(base, n);
            let report = simulate_charging(&p, window, options).and_then(|t| charging_report(&t, &p));
            SweepPoint {
                n_molecules: n,
                report,
            }
        })
        .collect())
}

/// `base` at absorber count `n` with the drive on the new lower polariton.
pub fn sweep_params(base: &DynamicsParams, n: f64) -> DynamicsParams {
    DynamicsParams {
        n_molecules: n,
        ..*base
    }
    .tuned_to_lower_polariton()
}
