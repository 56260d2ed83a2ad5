//! Least-squares fit of the coupled-oscillator reflectance to a measured
//! spectrum, with the Davydov levels held fixed.

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polariton::{eigensystem, reflectance_at, CoupledOscillatorParams, Spectrum};

/// Simplex iterations allowed across all restarts.
pub const ITERATION_BUDGET: u64 = 5000;
/// Relative parameter change between restarts below which the fit is converged.
pub const PARAMETER_TOLERANCE: f64 = 1e-6;
const MIN_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: CoupledOscillatorParams,
    /// Sum of squared residuals.
    pub residual: f64,
    pub iterations: u64,
}

struct Objective<'a> {
    energies: Vec<f64>,
    measured: Vec<f64>,
    fixed: (f64, f64),
    scale: &'a [f64; 4],
}

impl Objective<'_> {
    fn params(&self, x: &[f64]) -> CoupledOscillatorParams {
        CoupledOscillatorParams {
            delta1: self.fixed.0,
            delta2: self.fixed.1,
            delta_c: x[0] * self.scale[0],
            g_co: (x[1] * self.scale[1]).abs(),
            i0: (x[2] * self.scale[2]).abs(),
            sigma: (x[3] * self.scale[3]).abs(),
        }
    }

    fn residual(&self, p: &CoupledOscillatorParams) -> f64 {
        let branches = eigensystem(p);
        self.energies
            .iter()
            .zip(&self.measured)
            .map(|(&e, &r)| (reflectance_at(&branches, p.i0, p.sigma, e) - r).powi(2))
            .sum()
    }
}

/// Borrowing adapter handed to the solver.
struct Cost<'a, 'b>(&'a Objective<'b>);

impl CostFunction for Cost<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let p = self.0.params(x);
        if p.sigma == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.0.residual(&p))
    }
}

/// Minimizes the squared reflectance residual over Δc, g_co, I₀ and σ, with
/// Δ₁ and Δ₂ fixed. Negative trial values of g_co, I₀, σ are folded to their
/// magnitudes. Non-convergence returns the best parameters inside the error.
pub fn fit_reflectance(
    measured: &Spectrum,
    fixed: (f64, f64),
    init: &CoupledOscillatorParams,
) -> Result<FitResult> {
    if measured.len() < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "fit needs at least {MIN_POINTS} spectral points (got {})",
            measured.len()
        )));
    }
    if !(fixed.0 < fixed.1) {
        return Err(Error::InvalidInput("fixed Davydov levels must satisfy delta1 < delta2".into()));
    }
    let start = [init.delta_c, init.g_co, init.i0, init.sigma];
    if start.iter().any(|v| !v.is_finite()) || init.i0 <= 0.0 || init.sigma <= 0.0 {
        return Err(Error::InvalidInput("initial guess needs finite values with i0, sigma > 0".into()));
    }
    // typical magnitudes, so the simplex works on O(1) coordinates
    let scale = [
        init.delta_c.abs().max(1e-3),
        init.g_co.abs().max(1e-2),
        init.i0.abs(),
        init.sigma.abs(),
    ];
    let objective = Objective {
        energies: measured.abscissae().collect(),
        measured: measured.values().collect(),
        fixed,
        scale: &scale,
    };

    let mut x: Vec<f64> = start.iter().zip(&scale).map(|(v, s)| v / s).collect();
    let mut used = 0u64;
    let mut best_cost = objective.residual(&objective.params(&x));
    loop {
        let remaining = ITERATION_BUDGET.saturating_sub(used);
        if remaining == 0 {
            return Err(Error::Convergence {
                iterations: used as usize,
                residual: best_cost,
                best: Box::new(objective.params(&x)),
            });
        }
        let simplex = initial_simplex(&x, 0.05);
        // relative to the residual floor, which roundoff cannot resolve below
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance((1e-13 * best_cost).max(1e-30))
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let outcome = Executor::new(Cost(&objective), solver)
            .configure(|s| s.max_iters(remaining))
            .run()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let state = outcome.state();
        used += state.get_iter();
        let Some(next) = state.get_best_param().cloned() else {
            break;
        };
        let cost = state.get_best_cost();
        let moved = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1e-3))
            .fold(0.0, f64::max);
        if cost <= best_cost {
            x = next;
            best_cost = cost;
        }
        let hit_budget = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::MaxItersReached)
        );
        if moved < PARAMETER_TOLERANCE && !hit_budget {
            break;
        }
    }
    Ok(FitResult {
        params: objective.params(&x),
        residual: best_cost,
        iterations: used,
    })
}

fn initial_simplex(x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x.to_vec()];
    for i in 0..x.len() {
        let mut v = x.to_vec();
        v[i] += if v[i] != 0.0 { step * v[i] } else { step };
        simplex.push(v);
    }
    simplex
}
