use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polariton::{self, CoupledOscillatorParams};
use crate::units::{ev_to_angular_rate, FS_TO_PS};

/// Gaussian pump pulse. `sigma_t` is the standard deviation of the field
/// envelope in ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Photon-to-molecule ratio parameter.
    pub r: f64,
    pub sigma_t: f64,
    pub t0: f64,
}

/// σ for a 35 fs FWHM pulse, in ps: 35 / (2√(2 ln 2)) fs.
pub fn default_pulse_sigma() -> f64 {
    35.0 * FS_TO_PS / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

impl Default for PulseParams {
    fn default() -> Self {
        Self {
            r: 0.5,
            sigma_t: default_pulse_sigma(),
            t0: 0.0,
        }
    }
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t > 0.0) || !(self.r >= 0.0) || !self.t0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pulse requires sigma_t > 0 and r >= 0 (got sigma_t={}, r={})",
                self.sigma_t, self.r
            )));
        }
        Ok(())
    }

    /// Start of the pulse at the 1/e² intensity point, t0 − √2 σ.
    pub fn intensity_onset(&self) -> f64 {
        self.t0 - std::f64::consts::SQRT_2 * self.sigma_t
    }
}

/// Drive amplitude η(t) = √(rN / 2πσ²) · exp(−(t − t0)² / 2σ²), in ps⁻¹.
/// Its time integral is √(rN).
pub fn pulse_envelope(t: f64, p: &PulseParams, n_molecules: f64) -> f64 {
    let s2 = p.sigma_t * p.sigma_t;
    let peak = (p.r * n_molecules / (2.0 * std::f64::consts::PI * s2)).sqrt();
    peak * (-(t - p.t0).powi(2) / (2.0 * s2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    /// Davydov levels (eV).
    pub delta1: f64,
    pub delta2: f64,
    /// Triplet level ΔT (eV). Not shifted by the laser frame.
    pub delta_t: f64,
    /// Cavity frequency (eV).
    pub delta_c: f64,
    /// Laser frequency ν (eV).
    pub nu: f64,
    /// Bare single-molecule coupling (eV).
    pub g: f64,
    pub n_molecules: f64,
    /// Rates in ps⁻¹.
    pub kappa: f64,
    pub gamma_minus: f64,
    pub gamma_t_minus: f64,
    pub gamma_z: f64,
    pub gamma_isc: f64,
    pub pulse: PulseParams,
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        let energies = [
            self.delta1,
            self.delta2,
            self.delta_t,
            self.delta_c,
            self.nu,
            self.g,
        ];
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("non-finite dynamics energy".into()));
        }
        let rates = [
            self.kappa,
            self.gamma_minus,
            self.gamma_t_minus,
            self.gamma_z,
            self.gamma_isc,
        ];
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("rates must be finite and >= 0".into()));
        }
        if !(self.n_molecules >= 1.0) || !self.n_molecules.is_finite() {
            return Err(Error::InvalidInput(format!(
                "n_molecules must be >= 1 (got {})",
                self.n_molecules
            )));
        }
        self.pulse.validate()
    }

    /// g·√N in eV.
    pub fn collective_coupling(&self) -> f64 {
        collective_coupling(self)
    }

    /// Coupled-oscillator view of the same detunings with g_co = g√N.
    pub fn oscillator_params(&self) -> CoupledOscillatorParams {
        CoupledOscillatorParams {
            delta1: self.delta1,
            delta2: self.delta2,
            delta_c: self.delta_c,
            g_co: self.collective_coupling(),
            i0: 1.0,
            sigma: 0.06,
        }
    }

    /// Lower-polariton energy for g_co = g√N (eV).
    pub fn lower_polariton_energy(&self) -> f64 {
        polariton::eigensystem(&self.oscillator_params())[0].energy
    }

    /// Copy with ν tuned to the lower polariton.
    pub fn tuned_to_lower_polariton(mut self) -> Self {
        self.nu = self.lower_polariton_energy();
        self
    }

    pub fn drive_amplitude(&self, t: f64) -> f64 {
        pulse_envelope(t, &self.pulse, self.n_molecules)
    }

    /// Interval holding the pulse, t0 ± 4σ.
    pub fn pulse_window(&self) -> (f64, f64) {
        let half = 4.0 * self.pulse.sigma_t;
        (self.pulse.t0 - half, self.pulse.t0 + half)
    }

    pub(crate) fn angular(&self) -> AngularParams {
        AngularParams {
            level: [
                0.0,
                ev_to_angular_rate(self.delta1 - self.nu),
                ev_to_angular_rate(self.delta2 - self.nu),
                ev_to_angular_rate(self.delta_t),
            ],
            cavity: ev_to_angular_rate(self.delta_c - self.nu),
            g: ev_to_angular_rate(self.g),
        }
    }
}

/// Rotating-frame frequencies in ps⁻¹.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AngularParams {
    pub level: [f64; 4],
    pub cavity: f64,
    pub g: f64,
}

/// g·√N in eV.
pub fn collective_coupling(p: &DynamicsParams) -> f64 {
    p.g * p.n_molecules.sqrt()
}
