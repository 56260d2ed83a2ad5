//! Dormand–Prince 5(4) integrator with the fourth-order continuous extension.
//!
//! The integrator works on flat real state vectors. Output times are served by
//! dense interpolation inside accepted steps, so requesting a fine output grid
//! never forces small steps. A piecewise step ceiling lets callers keep steps
//! short inside a known fast window (a laser pulse) without paying for it
//! everywhere else; the window edges act as breakpoints that are never stepped
//! over.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Upper bound on the step size as a function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCeiling {
    /// Interval in which `inside` applies; `outside` elsewhere.
    pub window: Option<(f64, f64)>,
    pub inside: f64,
    pub outside: f64,
}

impl StepCeiling {
    pub fn uniform(max_step: f64) -> Self {
        Self {
            window: None,
            inside: max_step,
            outside: max_step,
        }
    }

    fn at(&self, t: f64) -> f64 {
        match self.window {
            Some((lo, hi)) if t >= lo && t < hi => self.inside,
            _ => self.outside,
        }
    }

    fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.window?;
        [lo, hi].into_iter().find(|&b| b > t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub ceiling: StepCeiling,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            initial_step: 1e-4,
            min_step: 1e-12,
            max_steps: 10_000_000,
            ceiling: StepCeiling::uniform(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// One state per requested output time, in order.
    pub samples: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    pub stats: Stats,
}

#[derive(Debug)]
pub enum FailureKind<E> {
    Rhs(E),
    StepUnderflow { h: f64 },
    TooManySteps,
}

/// Integration stopped early. `samples` holds every output reached before `t`.
#[derive(Debug)]
pub struct Failure<E> {
    pub t: f64,
    pub kind: FailureKind<E>,
    pub samples: Vec<Vec<f64>>,
    pub stats: Stats,
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end` and samples the solution at
/// `outputs` (ascending, inside `[t0, t_end]`).
pub fn solve<F, E>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    outputs: &[f64],
    opts: &Options,
) -> Result<Solution, Failure<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let n = y0.len();
    let mut stats = Stats::default();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(outputs.len());
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        samples.push(y0.to_vec());
        next_out += 1;
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut cont = vec![vec![0.0; n]; 5];

    macro_rules! fail {
        ($kind:expr) => {
            return Err(Failure {
                t,
                kind: $kind,
                samples,
                stats,
            })
        };
    }

    if let Err(e) = f(t, &y, &mut k[0]) {
        fail!(FailureKind::Rhs(e));
    }
    stats.evaluations += 1;

    let mut h = opts.initial_step;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            fail!(FailureKind::TooManySteps);
        }
        h = h.min(opts.ceiling.at(t));
        // step endpoint that must be hit exactly, if this step reaches it
        let mut landing = None;
        if let Some(bp) = opts.ceiling.next_breakpoint(t) {
            if t + h >= bp - 0.01 * h {
                h = bp - t;
                landing = Some(bp);
            }
        }
        if t + h >= t_end - 0.01 * h {
            h = t_end - t;
            landing = Some(t_end);
        }
        if h < opts.min_step {
            fail!(FailureKind::StepUnderflow { h });
        }

        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, a)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * k[j][i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (_, rest) = k.split_at_mut(s + 1);
            if let Err(e) = f(t + c * h, &y_stage, &mut rest[0]) {
                fail!(FailureKind::Rhs(e));
            }
            stats.evaluations += 1;
        }
        for i in 0..n {
            y_new[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        {
            let (_, rest) = k.split_at_mut(6);
            if let Err(e) = f(t + h, &y_new, &mut rest[0]) {
                fail!(FailureKind::Rhs(e));
            }
            stats.evaluations += 1;
        }

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = if n == 0 { 0.0 } else { (err_sq / n as f64).sqrt() };

        if err.is_finite() && err <= 1.0 {
            stats.accepted += 1;
            let t_new = landing.unwrap_or(t + h);
            if next_out < outputs.len() && outputs[next_out] <= t_new {
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    cont[4][i] = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i]
                            + D6 * k[5][i]
                            + D7 * k[6][i]);
                }
                while next_out < outputs.len() && outputs[next_out] <= t_new {
                    let theta = ((outputs[next_out] - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - theta;
                    samples.push(
                        (0..n)
                            .map(|i| {
                                cont[0][i]
                                    + theta
                                        * (cont[1][i]
                                            + th1
                                                * (cont[2][i]
                                                    + theta * (cont[3][i] + th1 * cont[4][i])))
                            })
                            .collect(),
                    );
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;

            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h *= factor;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
        }
    }

    Ok(Solution {
        samples,
        final_state: y,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ()> {
        dy[0] = -y[0];
        Ok(())
    }

    #[test]
    fn exponential_decay_dense_output() {
        let outs: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let sol = solve(decay, 0.0, &[1.0], 5.0, &outs, &Options::default()).unwrap();
        assert_eq!(sol.samples.len(), outs.len());
        for (t, s) in outs.iter().zip(&sol.samples) {
            assert!((s[0] - (-t).exp()).abs() < 1e-8, "t={t}");
        }
        assert!((sol.final_state[0] - (-5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_with_ceiling() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<(), ()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let opts = Options {
            ceiling: StepCeiling {
                window: Some((1.0, 1.5)),
                inside: 1e-3,
                outside: 0.5,
            },
            ..Options::default()
        };
        let outs = [0.0, 1.0, 1.25, 1.5, 3.0];
        let sol = solve(f, 0.0, &[1.0, 0.0], 3.0, &outs, &opts).unwrap();
        for (t, s) in outs.iter().zip(&sol.samples) {
            assert!((s[0] - t.cos()).abs() < 1e-7);
            assert!((s[1] + t.sin()).abs() < 1e-7);
        }
        // 0.5 s of window at ≤1e-3 forces at least 500 accepted steps
        assert!(sol.stats.accepted >= 500);
    }

    #[test]
    fn rhs_error_returns_partial_samples() {
        let f = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), &'static str> {
            if t > 2.0 {
                return Err("boom");
            }
            dy[0] = -y[0];
            Ok(())
        };
        let outs = [0.0, 0.5, 1.0, 3.0];
        let err = solve(f, 0.0, &[1.0], 4.0, &outs, &Options::default()).unwrap_err();
        assert!(matches!(err.kind, FailureKind::Rhs("boom")));
        assert!(err.samples.len() >= 3);
    }

    #[test]
    fn step_underflow_on_singularity() {
        // y' = y², y(0)=1 blows up at t = 1
        let f = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<(), ()> {
            dy[0] = y[0] * y[0];
            Ok(())
        };
        let err = solve(f, 0.0, &[1.0], 2.0, &[], &Options::default()).unwrap_err();
        assert!(matches!(
            err.kind,
            FailureKind::StepUnderflow { .. } | FailureKind::TooManySteps
        ));
        assert!(err.t < 1.0 + 1e-6);
    }
}
