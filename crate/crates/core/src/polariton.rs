//! Steady-state coupled-oscillator model of the microcavity.
//!
//! The molecular ensemble is a single three-level emitter (ground plus the two
//! Davydov-split singlets) coupled to one cavity mode with collective strength
//! `g_co`. Within the single-excitation manifold the Hamiltonian is the 3×3
//! matrix returned by [`hamiltonian_matrix`], in the basis
//! `{|1⟩ph|0⟩, |0⟩ph|S₁⁰⟩, |0⟩ph|S₁¹⟩}`.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledOscillatorParams {
    /// Lower Davydov level Δ₁ (eV).
    pub delta1: f64,
    /// Upper Davydov level Δ₂ (eV).
    pub delta2: f64,
    /// Cavity frequency Δc (eV).
    pub delta_c: f64,
    /// Collective light-matter coupling (eV).
    pub g_co: f64,
    /// Dimensionless absorption intensity I₀.
    pub i0: f64,
    /// Gaussian broadening (eV). Standard deviation of each absorption line.
    pub sigma: f64,
}

impl CoupledOscillatorParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta1,
            self.delta2,
            self.delta_c,
            self.g_co,
            self.i0,
            self.sigma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite oscillator parameter".into()));
        }
        if self.delta1 >= self.delta2 {
            return Err(Error::InvalidInput(format!(
                "Davydov levels must satisfy delta1 < delta2 (got {} and {})",
                self.delta1, self.delta2
            )));
        }
        if self.g_co < 0.0 {
            return Err(Error::InvalidInput("g_co must be non-negative".into()));
        }
        if self.i0 <= 0.0 || self.sigma <= 0.0 {
            return Err(Error::InvalidInput("i0 and sigma must be positive".into()));
        }
        Ok(())
    }

    /// Same detunings with a different collective coupling.
    pub fn with_coupling(&self, g_co: f64) -> Self {
        Self { g_co, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchLabel {
    #[serde(rename = "LP")]
    Lower,
    #[serde(rename = "MP")]
    Middle,
    #[serde(rename = "UP")]
    Upper,
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchLabel::Lower => "LP",
            BranchLabel::Middle => "MP",
            BranchLabel::Upper => "UP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonBranch {
    pub label: BranchLabel,
    /// Eigenenergy ε (eV).
    pub energy: f64,
    /// Squared amplitudes (|c₁|², |c₂|², |c₃|²): photon, S₁⁰ exciton, S₁¹ exciton.
    pub amplitudes: [f64; 3],
    /// Signed eigenvector components in the same basis.
    #[serde(skip)]
    pub vector: [f64; 3],
}

impl PolaritonBranch {
    pub fn photon_weight(&self) -> f64 {
        self.amplitudes[0]
    }
}

/// Sampled curve with strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    points: Vec<(f64, f64)>,
}

impl Spectrum {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidInput("spectrum contains non-finite values".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "spectrum abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        (1..self.points.len().saturating_sub(1))
            .filter(|&i| {
                let v = self.points[i].1;
                v < self.points[i - 1].1 && v < self.points[i + 1].1
            })
            .collect()
    }
}

pub const DEFAULT_GRID_START_EV: f64 = 1.4;
pub const DEFAULT_GRID_END_EV: f64 = 2.4;
pub const DEFAULT_GRID_POINTS: usize = 500;

pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// 1.4–2.4 eV in 500 uniform points.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(
        DEFAULT_GRID_START_EV,
        DEFAULT_GRID_END_EV,
        DEFAULT_GRID_POINTS,
    )
}

pub fn hamiltonian_matrix(p: &CoupledOscillatorParams) -> Matrix3<f64> {
    let g = p.g_co;
    Matrix3::new(
        p.delta_c, g, g, //
        g, p.delta1, 0.0, //
        g, 0.0, p.delta2,
    )
}

/// Diagonalizes the single-excitation manifold. Branches come back sorted by
/// energy and labelled LP, MP, UP; exact energy ties put the more photonic
/// state first.
pub fn eigensystem(p: &CoupledOscillatorParams) -> [PolaritonBranch; 3] {
    let eig = SymmetricEigen::new(hamiltonian_matrix(p));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        let (ei, ej) = (eig.eigenvalues[i], eig.eigenvalues[j]);
        ei.total_cmp(&ej).then_with(|| {
            let wi = eig.eigenvectors[(0, i)].powi(2);
            let wj = eig.eigenvectors[(0, j)].powi(2);
            wj.total_cmp(&wi)
        })
    });

    let labels = [BranchLabel::Lower, BranchLabel::Middle, BranchLabel::Upper];
    std::array::from_fn(|k| {
        let col = eig.eigenvectors.column(order[k]);
        let norm = col.norm();
        let vector = [col[0] / norm, col[1] / norm, col[2] / norm];
        PolaritonBranch {
            label: labels[k],
            energy: eig.eigenvalues[order[k]],
            amplitudes: vector.map(|c| c * c),
            vector,
        }
    })
}

/// Fermi-golden-rule reflectance `R(ν) = 1 − I₀ Σ_μ |c₁(μ)|² exp(−(ε_μ − ν)²/2σ²)`.
/// Raw model values; no clamping.
pub fn reflectance(p: &CoupledOscillatorParams, grid: &[f64]) -> Result<Spectrum> {
    let branches = eigensystem(p);
    Spectrum::new(
        grid.iter()
            .map(|&nu| (nu, reflectance_at(&branches, p.i0, p.sigma, nu)))
            .collect(),
    )
}

pub(crate) fn reflectance_at(
    branches: &[PolaritonBranch; 3],
    i0: f64,
    sigma: f64,
    nu: f64,
) -> f64 {
    let two_var = 2.0 * sigma * sigma;
    let absorbed: f64 = branches
        .iter()
        .map(|b| b.photon_weight() * (-(b.energy - nu).powi(2) / two_var).exp())
        .sum();
    1.0 - i0 * absorbed
}

/// (ε_MP − ε_LP, ε_UP − ε_MP) in eV.
pub fn rabi_splittings(p: &CoupledOscillatorParams) -> (f64, f64) {
    let [lp, mp, up] = eigensystem(p);
    (mp.energy - lp.energy, up.energy - mp.energy)
}
