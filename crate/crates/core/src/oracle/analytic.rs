//! Closed-form and quadrature references for exactly solvable limits.

use num_complex::Complex64;

use crate::dynamics::DynamicsParams;

/// Populations (S₀, S₁⁰, S₁¹, T) at time `t` for the decoupled molecule (g = 0),
/// starting from `initial = (S₁⁰, S₁¹, T)` at t = 0.
pub fn rate_equation_solution(p: &DynamicsParams, initial: (f64, f64, f64), t: f64) -> [f64; 4] {
    let (s1, s2, tr) = initial;
    let k = p.gamma_minus + p.gamma_isc;
    let kt = p.gamma_t_minus;
    let decay = (-k * t).exp();
    let pop1 = s1 * decay;
    let pop2 = s2 * decay;
    let feed = p.gamma_isc * (s1 + s2);
    let dk = kt - k;
    // (e^{−kt} − e^{−kT t}) / (kT − k), continued smoothly through kT = k
    let kernel = if dk.abs() > 1e-9 * k.max(kt).max(1.0) {
        (decay - (-kt * t).exp()) / dk
    } else {
        t * (-kt * t).exp()
    };
    let pop_t = tr * (-kt * t).exp() + feed * kernel;
    [1.0 - pop1 - pop2 - pop_t, pop1, pop2, pop_t]
}

/// ⟨a⟩(t) for a bare cavity with constant drive, from `a0` at t = 0:
/// `a0 e^{−λt} + η/λ (1 − e^{−λt})`, λ = κ/2 + i·detuning (all in ps⁻¹).
pub fn driven_cavity_constant(kappa: f64, detuning: f64, eta: f64, a0: Complex64, t: f64) -> Complex64 {
    let lambda = Complex64::new(0.5 * kappa, detuning);
    let decay = (-lambda * t).exp();
    if lambda.norm() == 0.0 {
        return a0 + eta * t;
    }
    a0 * decay + eta / lambda * (1.0 - decay)
}

/// ⟨a⟩(t) for a bare cavity driven by an arbitrary real envelope, starting
/// from vacuum at `t_start`: `∫ e^{−λ(t−s)} η(s) ds` by composite Gauss–Legendre.
pub fn driven_cavity_solution(
    kappa: f64,
    detuning: f64,
    eta: impl Fn(f64) -> f64,
    t_start: f64,
    t: f64,
) -> Complex64 {
    if t <= t_start {
        return Complex64::new(0.0, 0.0);
    }
    let lambda = Complex64::new(0.5 * kappa, detuning);
    let panel = (0.2 / lambda.norm().max(1e-12)).min(2e-3);
    let panels = ((t - t_start) / panel).ceil().max(1.0) as usize;
    let h = (t - t_start) / panels as f64;
    let (nodes, weights) = gauss_legendre(10);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = t_start + (k as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = mid + 0.5 * h * x;
            acc += w * 0.5 * h * (-lambda * (t - s)).exp() * eta(s);
        }
    }
    acc
}

/// Nodes and weights on [−1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PulseParams;

    fn rates(gm: f64, gisc: f64, gt: f64) -> DynamicsParams {
        DynamicsParams {
            delta1: 1.8,
            delta2: 1.98,
            delta_t: 1.2,
            delta_c: 1.82,
            nu: 1.7,
            g: 0.0,
            n_molecules: 1.0,
            kappa: 29.0,
            gamma_minus: gm,
            gamma_t_minus: gt,
            gamma_z: 20.0,
            gamma_isc: gisc,
            pulse: PulseParams::default(),
        }
    }

    #[test]
    fn rate_solution_initial_and_frozen() {
        let p = rates(0.5, 5.0, 0.01);
        let start = rate_equation_solution(&p, (0.3, 0.2, 0.1), 0.0);
        for (a, b) in start.iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
        let frozen = rates(0.0, 0.0, 0.0);
        let pops = rate_equation_solution(&frozen, (0.3, 0.2, 0.1), 7.0);
        for (a, b) in pops.iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rate_solution_d5_value() {
        let p = rates(0.5, 5.0, 0.01);
        let pops = rate_equation_solution(&p, (1.0, 0.0, 0.0), 0.2);
        assert!((pops[1] - (-1.1f64).exp()).abs() < 1e-15);
        assert!((pops[1] - 0.3329).abs() < 1e-4);
    }

    #[test]
    fn rate_solution_degenerate_limit_is_continuous() {
        let t = 0.37;
        let exact = rate_equation_solution(&rates(0.5, 5.0, 5.5), (1.0, 0.0, 0.0), t);
        let near = rate_equation_solution(&rates(0.5, 5.0, 5.5 + 1e-7), (1.0, 0.0, 0.0), t);
        assert!((exact[3] - near[3]).abs() < 1e-6);
        // d popT/dt = γISC pop1 − γT popT, checked by central difference
        let p = rates(0.5, 5.0, 5.5);
        let h = 1e-5;
        let f = |t| rate_equation_solution(&p, (1.0, 0.0, 0.0), t);
        let lhs = (f(t + h)[3] - f(t - h)[3]) / (2.0 * h);
        let rhs = 5.0 * f(t)[1] - 5.5 * f(t)[3];
        assert!((lhs - rhs).abs() < 1e-6);
    }

    #[test]
    fn constant_drive_limits() {
        let (kappa, det, eta) = (29.0, 40.0, 3.0);
        let lambda = Complex64::new(0.5 * kappa, det);
        let late = driven_cavity_constant(kappa, det, eta, Complex64::new(0.0, 0.0), 50.0);
        assert!((late - eta / lambda).norm() < 1e-12);
        let a0 = Complex64::new(0.4, -0.1);
        let free = driven_cavity_constant(kappa, det, 0.0, a0, 0.3);
        assert!((free - a0 * (-lambda * 0.3).exp()).norm() < 1e-15);
        let t = 0.8;
        let unit = driven_cavity_constant(2.0, 0.0, eta, Complex64::new(0.0, 0.0), t);
        assert!((unit - eta * (1.0 - (-t).exp())).norm() < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let (kappa, det, eta) = (29.0, 40.0, 3.0);
        for t in [0.01, 0.2, 1.5] {
            let q = driven_cavity_solution(kappa, det, |_| eta, 0.0, t);
            let c = driven_cavity_constant(kappa, det, eta, Complex64::new(0.0, 0.0), t);
            assert!((q - c).norm() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
