//! Built-in presets for the eight fabricated devices D1–D8.

use crate::device::{DeviceSpec, LayerStack};
use crate::dynamics::{DynamicsParams, PulseParams};
use crate::error::{Error, Result};
use crate::polariton::CoupledOscillatorParams;
use crate::units::{MEV, NEV};

pub const DELTA1: f64 = 1.80;
pub const DELTA2: f64 = 1.98;
pub const DELTA_T: f64 = 1.2;
/// Bare coupling used for the ultrafast (small-spot) dynamics.
pub const ULTRAFAST_COUPLING: f64 = 500.0 * NEV;
/// Common CuPc layer thickness (nm).
const PURE_CUPC: f64 = 15.0;

struct Row {
    name: &'static str,
    mixed_nm: f64,
    fraction: f64,
    c60_nm: f64,
    delta_c: f64,
    g_co_mev: f64,
    i0_e2: f64,
    sigma_e2: f64,
    n_e10: f64,
    kappa: f64,
    gamma_minus: f64,
    gamma_t_minus: f64,
    gamma_z: f64,
    gamma_isc: f64,
}

#[rustfmt::skip]
const ROWS: [Row; 8] = [
    Row { name: "D1", mixed_nm: 5.0, fraction: 0.3, c60_nm: 75.0, delta_c: 1.79, g_co_mev: 80.0, i0_e2: 1.2, sigma_e2: 6.0, n_e10: 2.2, kappa: 25.0, gamma_minus: 0.5, gamma_t_minus: 0.4, gamma_z: 20.0, gamma_isc: 5.0 },
    Row { name: "D2", mixed_nm: 10.0, fraction: 0.3, c60_nm: 70.0, delta_c: 1.72, g_co_mev: 85.0, i0_e2: 1.2, sigma_e2: 6.0, n_e10: 2.6, kappa: 25.0, gamma_minus: 0.3, gamma_t_minus: 0.2, gamma_z: 20.0, gamma_isc: 5.0 },
    Row { name: "D3", mixed_nm: 40.0, fraction: 0.2, c60_nm: 40.0, delta_c: 1.86, g_co_mev: 100.0, i0_e2: 1.2, sigma_e2: 6.0, n_e10: 3.0, kappa: 33.0, gamma_minus: 0.5, gamma_t_minus: 0.1, gamma_z: 17.0, gamma_isc: 5.0 },
    Row { name: "D4", mixed_nm: 20.0, fraction: 0.7, c60_nm: 60.0, delta_c: 1.85, g_co_mev: 109.0, i0_e2: 1.0, sigma_e2: 7.0, n_e10: 3.8, kappa: 29.0, gamma_minus: 0.5, gamma_t_minus: 0.4, gamma_z: 17.0, gamma_isc: 5.0 },
    Row { name: "D5", mixed_nm: 40.0, fraction: 0.5, c60_nm: 40.0, delta_c: 1.82, g_co_mev: 142.0, i0_e2: 1.0, sigma_e2: 6.0, n_e10: 5.0, kappa: 29.0, gamma_minus: 0.5, gamma_t_minus: 0.01, gamma_z: 20.0, gamma_isc: 5.0 },
    Row { name: "D6", mixed_nm: 40.0, fraction: 0.6, c60_nm: 40.0, delta_c: 1.85, g_co_mev: 141.0, i0_e2: 1.2, sigma_e2: 7.0, n_e10: 5.6, kappa: 33.0, gamma_minus: 0.5, gamma_t_minus: 0.01, gamma_z: 20.0, gamma_isc: 5.0 },
    Row { name: "D7", mixed_nm: 40.0, fraction: 0.7, c60_nm: 40.0, delta_c: 1.94, g_co_mev: 157.0, i0_e2: 1.0, sigma_e2: 7.0, n_e10: 6.1, kappa: 33.0, gamma_minus: 0.5, gamma_t_minus: 0.01, gamma_z: 20.0, gamma_isc: 5.0 },
    Row { name: "D8", mixed_nm: 40.0, fraction: 0.8, c60_nm: 40.0, delta_c: 2.10, g_co_mev: 158.0, i0_e2: 1.4, sigma_e2: 7.0, n_e10: 6.2, kappa: 40.0, gamma_minus: 0.5, gamma_t_minus: 0.01, gamma_z: 20.0, gamma_isc: 5.0 },
];

/// Measured steady-state absorber counts and bare couplings, kept as
/// regression references for the counting rule. (N, g in eV)
#[rustfmt::skip]
pub const STEADY_STATE_REFERENCE: [(&str, f64, f64); 8] = [
    ("D1", 1.10e14, 7.63 * NEV),
    ("D2", 1.20e14, 7.30 * NEV),
    ("D3", 1.54e14, 8.03 * NEV),
    ("D4", 1.94e14, 7.81 * NEV),
    ("D5", 2.34e14, 9.30 * NEV),
    ("D6", 2.61e14, 8.73 * NEV),
    ("D7", 2.88e14, 9.25 * NEV),
    ("D8", 3.14e14, 8.94 * NEV),
];

/// Reported mean of the bare-coupling column (eV).
pub const STEADY_STATE_MEAN_COUPLING: f64 = 8.37 * NEV;

/// Cavity frequency of the averaged ("idealized") device (eV).
pub const IDEALIZED_DELTA_C: f64 = 1.87;
/// Cavity loss of the averaged device (ps⁻¹).
pub const IDEALIZED_KAPPA: f64 = 33.0;

fn build(row: &Row) -> DeviceSpec {
    let spectral = CoupledOscillatorParams {
        delta1: DELTA1,
        delta2: DELTA2,
        delta_c: row.delta_c,
        g_co: row.g_co_mev * MEV,
        i0: row.i0_e2 * 1e-2,
        sigma: row.sigma_e2 * 1e-2,
    };
    let dynamics = DynamicsParams {
        delta1: DELTA1,
        delta2: DELTA2,
        delta_t: DELTA_T,
        delta_c: row.delta_c,
        nu: row.delta_c,
        g: ULTRAFAST_COUPLING,
        n_molecules: row.n_e10 * 1e10,
        kappa: row.kappa,
        gamma_minus: row.gamma_minus,
        gamma_t_minus: row.gamma_t_minus,
        gamma_z: row.gamma_z,
        gamma_isc: row.gamma_isc,
        pulse: PulseParams::default(),
    }
    .tuned_to_lower_polariton();
    DeviceSpec {
        name: row.name.to_string(),
        stack: LayerStack::photovoltaic(PURE_CUPC, row.mixed_nm, row.fraction, row.c60_nm),
        spectral,
        dynamics,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCatalog {
    entries: Vec<DeviceSpec>,
}

impl Default for DeviceCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl DeviceCatalog {
    pub fn builtin() -> Self {
        Self {
            entries: ROWS.iter().map(build).collect(),
        }
    }

    pub fn entries(&self) -> &[DeviceSpec] {
        &self.entries
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|d| d.name.clone()).collect()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Result<&DeviceSpec> {
        self.entries
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownDevice {
                name: name.to_string(),
                valid: self.names(),
            })
    }
}

/// Device averaged over the catalog: D5 dynamics with Δc = 1.87 eV and
/// κ = 33 ps⁻¹, at `n_molecules` absorbers, drive tuned to its LP.
pub fn idealized_device(n_molecules: f64) -> DynamicsParams {
    let base = DeviceCatalog::builtin().get("D5").expect("D5 is built in").dynamics;
    DynamicsParams {
        delta_c: IDEALIZED_DELTA_C,
        kappa: IDEALIZED_KAPPA,
        n_molecules,
        ..base
    }
    .tuned_to_lower_polariton()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{absorber_count, bare_coupling};

    #[test]
    fn eight_unique_devices() {
        let c = DeviceCatalog::builtin();
        assert_eq!(c.names(), ["D1", "D2", "D3", "D4", "D5", "D6", "D7", "D8"]);
        for d in c.entries() {
            d.validate().unwrap();
        }
    }

    #[test]
    fn unknown_device_lists_names() {
        match DeviceCatalog::builtin().get("D9") {
            Err(Error::UnknownDevice { valid, .. }) => assert_eq!(valid.len(), 8),
            other => panic!("{other:?}"),
        }
        assert_eq!(DeviceCatalog::builtin().get("d3").unwrap().name, "D3");
    }

    #[test]
    fn table_checksum() {
        // sum of every tabulated number, guarding against silent edits
        let sum: f64 = ROWS
            .iter()
            .map(|r| {
                r.mixed_nm + r.fraction + r.c60_nm + r.delta_c + r.g_co_mev + r.i0_e2 + r.sigma_e2
                    + r.n_e10 + r.kappa + r.gamma_minus + r.gamma_t_minus + r.gamma_z + r.gamma_isc
            })
            .sum();
        assert!((sum - 2172.67).abs() < 1e-9, "{sum}");
        let c = DeviceCatalog::builtin();
        let d8 = c.get("D8").unwrap();
        assert_eq!(d8.dynamics.kappa, 40.0);
        assert_eq!(c.get("D1").unwrap().dynamics.kappa, 25.0);
        assert_eq!(d8.spectral.g_co, 0.158);
        assert_eq!(d8.dynamics.n_molecules, 6.2e10);
    }

    #[test]
    fn drive_sits_on_lower_polariton() {
        for d in DeviceCatalog::builtin().entries() {
            let p = d.dynamics;
            assert!((p.nu - p.lower_polariton_energy()).abs() < 1e-12);
            assert!(p.nu < p.delta_c.min(p.delta1));
        }
    }

    #[test]
    fn absorber_counts_within_one_percent() {
        let c = DeviceCatalog::builtin();
        for (name, n_ref, _) in STEADY_STATE_REFERENCE {
            let n = absorber_count(&c.get(name).unwrap().stack, 4.0).unwrap();
            assert!((n / n_ref - 1.0).abs() < 0.01, "{name}: {n:e}");
        }
    }

    #[test]
    fn bare_couplings_except_d2_within_half_percent() {
        // D2's tabulated coupling corresponds to g_co ≈ 80 meV rather than its
        // fitted 85 meV; the acceptance suite reports that row.
        let c = DeviceCatalog::builtin();
        for (name, n_ref, g_ref) in STEADY_STATE_REFERENCE {
            let d = c.get(name).unwrap();
            let n = absorber_count(&d.stack, 4.0).unwrap();
            let g = bare_coupling(d.spectral.g_co, n).unwrap();
            if name == "D2" {
                assert!((g / g_ref - 1.0).abs() > 0.05);
                assert!((bare_coupling(0.080, n_ref).unwrap() / g_ref - 1.0).abs() < 0.005);
            } else {
                assert!((g / g_ref - 1.0).abs() < 0.005, "{name}: {g:e}");
            }
        }
    }

    #[test]
    fn idealized_device_parameters() {
        let p = idealized_device(3.0e10);
        assert_eq!(p.delta_c, 1.87);
        assert_eq!(p.kappa, 33.0);
        assert_eq!(p.n_molecules, 3.0e10);
        assert!((p.nu - p.lower_polariton_energy()).abs() < 1e-12);
    }
}
