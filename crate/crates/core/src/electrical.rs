//! Electrical characterization: external quantum efficiency, maximum power
//! point and cavity-to-control power ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::photon_energy_ev;

/// EQE = E_ph[eV] · I[A] / P[W]. The electron charge cancels between ħω/e and
/// the photocurrent.
pub fn eqe(photon_energy_ev: f64, photocurrent: f64, incident_power: f64) -> Result<f64> {
    if !(incident_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "incident power must be positive (got {incident_power} W)"
        )));
    }
    Ok(photon_energy_ev * photocurrent / incident_power)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqePoint {
    pub wavelength: f64,
    pub photon_energy: f64,
    pub photocurrent: f64,
    pub incident_power: f64,
    pub eqe: f64,
}

impl EqePoint {
    /// Wavelength in nm, current in A, power in W.
    pub fn new(wavelength: f64, photocurrent: f64, incident_power: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::InvalidInput(format!("wavelength must be positive (got {wavelength})")));
        }
        let photon_energy = photon_energy_ev(wavelength);
        let photocurrent = photocurrent.abs();
        Ok(Self {
            wavelength,
            photon_energy,
            photocurrent,
            incident_power,
            eqe: eqe(photon_energy, photocurrent, incident_power)?,
        })
    }
}

/// Sign convention found in the raw data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConvention {
    /// Short-circuit current negative; currents were flipped on load.
    Load,
    /// Short-circuit current already positive.
    Generator,
}

impl std::fmt::Display for SignConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SignConvention::Load => "load",
            SignConvention::Generator => "generator",
        })
    }
}

/// Current-voltage sweep normalized to ascending voltage and a positive
/// short-circuit current, so extracted power is V·I > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvCurve {
    points: Vec<(f64, f64)>,
    /// mW/cm², if known.
    pub illumination: Option<f64>,
    pub convention: SignConvention,
}

impl IvCurve {
    /// Accepts (V, A) samples with strictly ascending or descending voltage in
    /// either sign convention. A curve with zero short-circuit current is read
    /// in the load convention.
    pub fn new(mut points: Vec<(f64, f64)>, illumination: Option<f64>) -> Result<Self> {
        if points.iter().any(|(v, i)| !v.is_finite() || !i.is_finite()) {
            return Err(Error::InvalidInput("I-V curve contains non-finite values".into()));
        }
        if points.len() >= 2 && points[0].0 > points[points.len() - 1].0 {
            points.reverse();
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("I-V voltages must be strictly monotone".into()));
        }
        let convention = if short_circuit(&points) > 0.0 {
            SignConvention::Generator
        } else {
            SignConvention::Load
        };
        if convention == SignConvention::Load {
            points.iter_mut().for_each(|p| p.1 = -p.1);
        }
        Ok(Self {
            points,
            illumination,
            convention,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Current at V = 0 (linear interpolation, nearest end outside the range).
    pub fn short_circuit_current(&self) -> f64 {
        short_circuit(&self.points)
    }

    /// Same curve with every current multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|&(v, i)| (v, i * factor)).collect(),
            ..self.clone()
        }
    }
}

fn short_circuit(points: &[(f64, f64)]) -> f64 {
    match points {
        [] => 0.0,
        [only] => only.1,
        _ => {
            let k = points.partition_point(|p| p.0 < 0.0);
            if k == 0 {
                points[0].1
            } else if k == points.len() {
                points[k - 1].1
            } else {
                let ((v0, i0), (v1, i1)) = (points[k - 1], points[k]);
                i0 + (0.0 - v0) / (v1 - v0) * (i1 - i0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    /// V
    pub voltage: f64,
    /// A
    pub current: f64,
    /// W, positive when extracted.
    pub power: f64,
}

/// Sample with the largest extracted power V·I > 0; ties go to the smaller |V|.
pub fn max_power_point(curve: &IvCurve) -> Result<PowerPoint> {
    if curve.points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "maximum power point needs at least 3 samples (got {})",
            curve.points.len()
        )));
    }
    let mut best: Option<PowerPoint> = None;
    for &(v, i) in &curve.points {
        let power = v * i;
        if power <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => power > b.power || (power == b.power && v.abs() < b.voltage.abs()),
        };
        if better {
            best = Some(PowerPoint {
                voltage: v,
                current: i,
                power,
            });
        }
    }
    best.ok_or(Error::NoPowerPoint)
}

/// Peak extracted power of the cavity device over that of its control.
pub fn power_ratio(cavity: &IvCurve, control: &IvCurve) -> Result<f64> {
    let pc = max_power_point(cavity)?.power;
    let pn = max_power_point(control)?.power;
    if pn == 0.0 {
        return Err(Error::DivisionByZero("power_ratio: control power is zero"));
    }
    Ok(pc / pn)
}
