//! Device geometry, absorber counting and coupling-strength conversions.

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::error::{Error, Result};
use crate::polariton::CoupledOscillatorParams;
use crate::units::{CONSTANTS, MM2_TO_CM2, NM_TO_CM};

/// Nominal pump spot for steady-state measurements (mm²).
pub const DEFAULT_SPOT_AREA_MM2: f64 = 4.0;

/// Layer thicknesses in nm. Only the two CuPc-bearing layers enter the
/// absorber count; the rest are kept as a record of the stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub pure_cupc_thickness: f64,
    pub mixed_layer_thickness: f64,
    /// CuPc volume fraction of the mixed CuPc:C60 layer.
    pub cupc_volume_fraction: f64,
    pub c60_thickness: f64,
    pub top_mirror: f64,
    pub lif: f64,
    pub bphen: f64,
    pub hat_cn: f64,
    pub bottom_mirror: f64,
    pub ito: f64,
}

impl LayerStack {
    /// Photovoltaic stack with the common contact and mirror layers.
    pub fn photovoltaic(pure: f64, mixed: f64, fraction: f64, c60: f64) -> Self {
        Self {
            pure_cupc_thickness: pure,
            mixed_layer_thickness: mixed,
            cupc_volume_fraction: fraction,
            c60_thickness: c60,
            top_mirror: 25.0,
            lif: 1.0,
            bphen: 15.0,
            hat_cn: 15.0,
            bottom_mirror: 75.0,
            ito: 110.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let thicknesses = [
            ("pure_cupc_thickness", self.pure_cupc_thickness),
            ("mixed_layer_thickness", self.mixed_layer_thickness),
            ("c60_thickness", self.c60_thickness),
            ("top_mirror", self.top_mirror),
            ("lif", self.lif),
            ("bphen", self.bphen),
            ("hat_cn", self.hat_cn),
            ("bottom_mirror", self.bottom_mirror),
            ("ito", self.ito),
        ];
        for (name, t) in thicknesses {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be >= 0 nm (got {t})")));
            }
        }
        if !(0.0..=1.0).contains(&self.cupc_volume_fraction) {
            return Err(Error::InvalidInput(format!(
                "cupc_volume_fraction must lie in [0, 1] (got {})",
                self.cupc_volume_fraction
            )));
        }
        Ok(())
    }

    /// Thickness of pure CuPc equivalent to the stack (nm).
    pub fn effective_cupc_thickness(&self) -> f64 {
        self.pure_cupc_thickness + self.cupc_volume_fraction * self.mixed_layer_thickness
    }

    /// CuPc volume under a spot (cm³).
    pub fn cupc_volume(&self, spot_area_mm2: f64) -> f64 {
        spot_area_mm2 * MM2_TO_CM2 * self.effective_cupc_thickness() * NM_TO_CM
    }
}

/// Number of CuPc molecules under the spot, N_A ρ V / M.
pub fn absorber_count(stack: &LayerStack, spot_area_mm2: f64) -> Result<f64> {
    stack.validate()?;
    if !(spot_area_mm2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spot area must be positive (got {spot_area_mm2} mm²)"
        )));
    }
    let c = CONSTANTS;
    Ok(c.avogadro * c.cupc_density * stack.cupc_volume(spot_area_mm2) / c.cupc_molar_mass)
}

/// Single-molecule coupling g_co / √N.
pub fn bare_coupling(g_co: f64, n_absorbers: f64) -> Result<f64> {
    if n_absorbers == 0.0 {
        return Err(Error::DivisionByZero("bare_coupling: n_absorbers = 0"));
    }
    if !(n_absorbers > 0.0) {
        return Err(Error::InvalidInput(format!(
            "absorber count must be positive (got {n_absorbers})"
        )));
    }
    Ok(g_co / n_absorbers.sqrt())
}

/// Transfers a bare coupling between mode volumes: g √(V_ss / V_uf).
pub fn rescale_coupling(g: f64, vol_steady_state: f64, vol_ultrafast: f64) -> Result<f64> {
    if !(vol_steady_state > 0.0 && vol_ultrafast > 0.0) {
        return Err(Error::InvalidInput(format!(
            "volumes must be positive (got {vol_steady_state}, {vol_ultrafast})"
        )));
    }
    Ok(g * (vol_steady_state / vol_ultrafast).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    pub stack: LayerStack,
    pub spectral: CoupledOscillatorParams,
    pub dynamics: DynamicsParams,
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidInput("device name is empty".into()));
        }
        self.stack.validate()?;
        self.spectral.validate()?;
        self.dynamics.validate()
    }

    /// Absorbers under the steady-state spot.
    pub fn steady_state_absorbers(&self) -> Result<f64> {
        absorber_count(&self.stack, DEFAULT_SPOT_AREA_MM2)
    }
}
