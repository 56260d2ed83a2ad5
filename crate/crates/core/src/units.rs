//! Physical constants and the internal unit system.
//!
//! Energies are carried in eV, times in ps and rates in ps⁻¹. The equations of
//! motion work with ħ = 1, so every energy entering them goes through
//! [`ev_to_angular_rate`] first.

/// Compiled-in constants. Never configurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// mol⁻¹
    pub avogadro: f64,
    /// eV·ps
    pub hbar: f64,
    /// g/cm³
    pub cupc_density: f64,
    /// g/mol
    pub cupc_molar_mass: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    avogadro: AVOGADRO,
    hbar: HBAR_EV_PS,
    cupc_density: CUPC_DENSITY_G_PER_CM3,
    cupc_molar_mass: CUPC_MOLAR_MASS_G_PER_MOL,
};

pub const AVOGADRO: f64 = 6.022_140_76e23;
pub const HBAR_EV_PS: f64 = 6.582_119_569e-4;
pub const CUPC_DENSITY_G_PER_CM3: f64 = 1.6;
pub const CUPC_MOLAR_MASS_G_PER_MOL: f64 = 576.07;

/// hc in eV·nm, used to turn wavelengths into photon energies.
pub const HC_EV_NM: f64 = 1_239.841_984;

pub const NM_TO_CM: f64 = 1e-7;
pub const MM2_TO_CM2: f64 = 1e-2;
pub const FS_TO_PS: f64 = 1e-3;
pub const NEV: f64 = 1e-9;
pub const MEV: f64 = 1e-3;

/// Converts an energy in eV to an angular rate in ps⁻¹ (E/ħ).
pub fn ev_to_angular_rate(e: f64) -> f64 {
    e / HBAR_EV_PS
}

/// Inverse of [`ev_to_angular_rate`].
pub fn angular_rate_to_ev(w: f64) -> f64 {
    w * HBAR_EV_PS
}

pub fn photon_energy_ev(wavelength_nm: f64) -> f64 {
    HC_EV_NM / wavelength_nm
}
