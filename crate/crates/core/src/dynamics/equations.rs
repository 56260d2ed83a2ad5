//! Second-order cumulant equations of motion.
//!
//! Every equation follows from `d⟨O⟩/dt = ⟨i[H, O] + Σ_k γ_k (L_k† O L_k − ½{L_k†L_k, O})⟩`
//! with the rotating-frame Dicke Hamiltonian and the five dissipator families
//! (cavity loss, singlet relaxation, triplet relaxation, singlet dephasing and
//! intersystem crossing). Three-operator averages are closed with
//! [`close_triple`].
//!
//! Relative to the published component equations, this derivation differs in:
//! - `d⟨aa⟩/dt` couples with `−2igN` to both `⟨aX₀₁⟩` and `⟨aX₀₂⟩`;
//! - in `d⟨aX_αβ⟩/dt` the `⟨a†aX₀β⟩(δ_α1 + δ_α2)` and `⟨aaX_kβ⟩δ_α0` terms enter
//!   with the opposite sign, and `aa†` is normal ordered so a bare `⟨X⟩` term
//!   survives only for `β = 0`;
//! - the pair equation uses the full commutator of both factors, which repairs
//!   the garbled final coupling term.

use crate::error::{Error, Result};

use super::params::{AngularParams, DynamicsParams};
use super::state::{
    moment_name, op, CumulantState, Layout, C64, LEVELS, OPS, PAIR_OFFSET,
};

const I: C64 = C64::new(0.0, 1.0);

/// `⟨MNO⟩ ≈ ⟨MN⟩⟨O⟩ + ⟨M⟩⟨NO⟩ + ⟨MO⟩⟨N⟩ − 2⟨M⟩⟨N⟩⟨O⟩` (third cumulant set to zero).
#[inline]
pub fn close_triple(mn: C64, mo: C64, no: C64, m: C64, n: C64, o: C64) -> C64 {
    mn * o + m * no + mo * n - 2.0 * m * n * o
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Photon {
    A,
    ADag,
}

/// One term `coef · ⟨op X_target⟩` of `i[H_int, X_p]`.
#[derive(Debug, Clone, Copy)]
struct CouplingTerm {
    coef: C64,
    photon: Photon,
    target: usize,
}

/// Precomputed linear pieces of the equations for one parameter set.
#[derive(Debug, Clone)]
pub struct Generator {
    /// Local single-molecule generator: d X_p = Σ_q local[p] (q, c) X_q.
    local: Vec<Vec<(usize, C64)>>,
    coupling: Vec<Vec<CouplingTerm>>,
    /// −(κ/2 + iΔc')
    field_decay: C64,
    kappa: f64,
    cavity: f64,
    g: f64,
    n: f64,
}

impl Generator {
    pub fn new(p: &DynamicsParams) -> Self {
        let AngularParams { level, cavity, g } = p.angular();
        let jumps = [
            (p.gamma_minus, 0, 1),
            (p.gamma_minus, 0, 2),
            (p.gamma_t_minus, 0, 3),
            (p.gamma_z, 1, 1),
            (p.gamma_z, 2, 2),
            (p.gamma_isc, 3, 1),
            (p.gamma_isc, 3, 2),
        ];

        let mut local = Vec::with_capacity(OPS);
        let mut coupling = Vec::with_capacity(OPS);
        for pidx in 0..OPS {
            let (alpha, beta) = (pidx / LEVELS, pidx % LEVELS);
            let mut row = [C64::new(0.0, 0.0); OPS];
            // i[Σ ω_γ X_γγ, X_αβ] = i(ω_α − ω_β) X_αβ
            row[pidx] += I * (level[alpha] - level[beta]);
            // L[X_στ]† acting on X_αβ
            for &(rate, sigma, tau) in &jumps {
                if rate == 0.0 {
                    continue;
                }
                if alpha == sigma && beta == sigma {
                    row[op(tau, tau)] += rate;
                }
                if alpha == tau {
                    row[op(tau, beta)] -= 0.5 * rate;
                }
                if beta == tau {
                    row[op(alpha, tau)] -= 0.5 * rate;
                }
            }
            local.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| c.norm() != 0.0)
                    .map(|(q, &c)| (q, c))
                    .collect(),
            );

            // i g Σ_k [a†(δ_kα X_0β − δ_β0 X_αk) + (δ_0α X_kβ − δ_βk X_α0) a]
            let mut terms = Vec::new();
            for k in [1, 2] {
                if alpha == k {
                    terms.push(CouplingTerm {
                        coef: I * g,
                        photon: Photon::ADag,
                        target: op(0, beta),
                    });
                }
                if beta == 0 {
                    terms.push(CouplingTerm {
                        coef: -I * g,
                        photon: Photon::ADag,
                        target: op(alpha, k),
                    });
                }
                if alpha == 0 {
                    terms.push(CouplingTerm {
                        coef: I * g,
                        photon: Photon::A,
                        target: op(k, beta),
                    });
                }
                if beta == k {
                    terms.push(CouplingTerm {
                        coef: -I * g,
                        photon: Photon::A,
                        target: op(alpha, 0),
                    });
                }
            }
            coupling.push(terms);
        }

        Self {
            local,
            coupling,
            field_decay: -(0.5 * p.kappa + I * cavity),
            kappa: p.kappa,
            cavity,
            g,
            n: p.n_molecules,
        }
    }

    #[inline]
    fn local_apply(&self, p: usize, f: impl Fn(usize) -> C64) -> C64 {
        self.local[p].iter().map(|&(q, c)| c * f(q)).sum()
    }

    /// ⟨op X_u X_v⟩ on distinct molecules.
    #[inline]
    fn triple_xx(s: &CumulantState, photon: Photon, u: usize, v: usize) -> C64 {
        match photon {
            Photon::A => close_triple(s.ax(u), s.ax(v), s.pair[u][v], s.a, s.x(u), s.x(v)),
            Photon::ADag => close_triple(
                s.adx(u),
                s.adx(v),
                s.pair[u][v],
                s.a.conj(),
                s.x(u),
                s.x(v),
            ),
        }
    }

    /// ⟨a†a X_u⟩
    #[inline]
    fn triple_ada(s: &CumulantState, u: usize) -> C64 {
        close_triple(
            C64::new(s.n_ph, 0.0),
            s.adx(u),
            s.ax(u),
            s.a.conj(),
            s.a,
            s.x(u),
        )
    }

    /// ⟨aa X_u⟩
    #[inline]
    fn triple_aa(s: &CumulantState, u: usize) -> C64 {
        close_triple(s.aa, s.ax(u), s.ax(u), s.a, s.a, s.x(u))
    }

    pub fn d_single(&self, s: &CumulantState, p: usize) -> C64 {
        let mut d = self.local_apply(p, |q| s.x(q));
        for t in &self.coupling[p] {
            d += t.coef
                * match t.photon {
                    Photon::A => s.ax(t.target),
                    Photon::ADag => s.adx(t.target),
                };
        }
        d
    }

    pub fn d_pair(&self, s: &CumulantState, p: usize, q: usize) -> C64 {
        let mut d = self.local_apply(p, |r| s.pair[r][q]) + self.local_apply(q, |r| s.pair[p][r]);
        for t in &self.coupling[p] {
            d += t.coef * Self::triple_xx(s, t.photon, t.target, q);
        }
        for t in &self.coupling[q] {
            d += t.coef * Self::triple_xx(s, t.photon, p, t.target);
        }
        d
    }

    pub fn d_mixed(&self, s: &CumulantState, p: usize, eta: f64) -> C64 {
        let (alpha, beta) = (p / LEVELS, p % LEVELS);
        let mut d = self.field_decay * s.ax(p) + eta * s.x(p) + self.local_apply(p, |q| s.ax(q));
        // −ig Σ_i S_i X_p^j: same-molecule part and the (N − 1) distinct-molecule part
        let mut same = C64::new(0.0, 0.0);
        let mut other = C64::new(0.0, 0.0);
        for k in [1, 2] {
            if alpha == k {
                same += s.x(op(0, beta));
            }
            other += s.pair[op(0, k)][p];
        }
        d += -I * self.g * (same + (self.n - 1.0) * other);
        // a · i[H_int, X_p], with a a† = a†a + 1
        for t in &self.coupling[p] {
            d += t.coef
                * match t.photon {
                    Photon::ADag => Self::triple_ada(s, t.target) + s.x(t.target),
                    Photon::A => Self::triple_aa(s, t.target),
                };
        }
        d
    }

    pub fn d_photon(&self, s: &CumulantState, eta: f64) -> (C64, f64, C64) {
        let lower = s.x(op(0, 1)) + s.x(op(0, 2));
        let da = self.field_decay * s.a - I * self.g * self.n * lower + eta;
        let dn = -self.kappa * s.n_ph + 2.0 * eta * s.a.re
            - 2.0 * self.g * self.n * (s.ax(op(1, 0)).im + s.ax(op(2, 0)).im);
        let daa = -(self.kappa + 2.0 * I * self.cavity) * s.aa
            - 2.0 * I * self.g * self.n * (s.ax(op(0, 1)) + s.ax(op(0, 2)))
            + 2.0 * eta * s.a;
        (da, dn, daa)
    }

    /// Writes the time derivative of every independent moment into `out`
    /// (flat layout).
    pub fn derivative_flat(&self, s: &CumulantState, eta: f64, out: &mut [f64]) {
        let (da, dn, daa) = self.d_photon(s, eta);
        out[0] = da.re;
        out[1] = da.im;
        out[2] = dn;
        out[3] = daa.re;
        out[4] = daa.im;
        let mut i = 5;
        for a in 0..LEVELS {
            for b in a..LEVELS {
                let d = self.d_single(s, op(a, b));
                out[i] = d.re;
                if a == b {
                    i += 1;
                } else {
                    out[i + 1] = d.im;
                    i += 2;
                }
            }
        }
        for p in 0..OPS {
            let d = self.d_mixed(s, p, eta);
            out[i] = d.re;
            out[i + 1] = d.im;
            i += 2;
        }
        debug_assert_eq!(i, PAIR_OFFSET);
        for rep in &Layout::get().pairs {
            let d = self.d_pair(s, rep.p, rep.q);
            out[i] = d.re;
            i += 1;
            if !rep.real {
                out[i] = d.im;
                i += 1;
            }
        }
    }
}

/// Time derivative of the full cumulant state at time `t` under the pulse in `p`.
/// The result is assembled from the independent elements and mirrored, so it
/// carries the same Hermiticity and swap symmetry as a state.
pub fn rhs(t: f64, s: &CumulantState, p: &DynamicsParams) -> Result<CumulantState> {
    rhs_with_drive(t, s, p, p.drive_amplitude(t))
}

pub fn rhs_with_drive(t: f64, s: &CumulantState, p: &DynamicsParams, eta: f64) -> Result<CumulantState> {
    let gen = Generator::new(p);
    let mut out = vec![0.0; Layout::get().len];
    gen.derivative_flat(s, eta, &mut out);
    check_finite(t, &out)?;
    Ok(CumulantState::from_flat(&out))
}

pub(crate) fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NumericalBlowup {
            moment: moment_name(i),
            t,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::params::PulseParams;
    use crate::dynamics::state::{GROUND, S1_LOWER, TRIPLET};

    fn params() -> DynamicsParams {
        DynamicsParams {
            delta1: 1.80,
            delta2: 1.98,
            delta_t: 1.2,
            delta_c: 1.82,
            nu: 1.70,
            g: 500e-9,
            n_molecules: 5.0e10,
            kappa: 29.0,
            gamma_minus: 0.5,
            gamma_t_minus: 0.01,
            gamma_z: 20.0,
            gamma_isc: 5.0,
            pulse: PulseParams::default(),
        }
    }

    #[test]
    fn close_triple_cases() {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let (p, q) = (C64::new(0.3, 0.1), C64::new(-0.2, 0.5));
        assert_eq!(close_triple(p, q, one, z, z, z), z);
        let (m, n, o) = (C64::new(0.5, 0.2), C64::new(-1.1, 0.4), C64::new(0.7, -0.3));
        let r = close_triple(m * n, m * o, n * o, m, n, o);
        assert!((r - m * n * o).norm() < 1e-15);
        assert_eq!(close_triple(one, z, z, z, z, C64::new(2.0, 0.0)), C64::new(2.0, 0.0));
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let d = rhs_with_drive(0.0, &CumulantState::ground(), &params(), 0.0).unwrap();
        assert_eq!(d.to_flat().iter().map(|x| x.abs()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn drive_pushes_field_only() {
        let eta0 = 3.5;
        let d = rhs_with_drive(0.0, &CumulantState::ground(), &params(), eta0).unwrap();
        assert_eq!(d.a, C64::new(eta0, 0.0));
        for a in 0..LEVELS {
            for b in 0..LEVELS {
                assert_eq!(d.single[a][b], C64::new(0.0, 0.0));
            }
        }
        assert!(d.pair.iter().flatten().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn decoupled_rates_match_three_level_model() {
        let p = DynamicsParams { g: 0.0, ..params() };
        let s = CumulantState::with_populations([0.0, 1.0, 0.0, 0.0]);
        let d = rhs_with_drive(0.0, &s, &p, 0.0).unwrap();
        let tol = 1e-12;
        assert!((d.single[S1_LOWER][S1_LOWER].re + (p.gamma_minus + p.gamma_isc)).abs() < tol);
        assert!((d.single[TRIPLET][TRIPLET].re - p.gamma_isc).abs() < tol);
        assert!((d.single[GROUND][GROUND].re - p.gamma_minus).abs() < tol);
    }

    #[test]
    fn derivative_preserves_trace_and_symmetry() {
        let mut s = CumulantState::with_populations([0.7, 0.2, 0.05, 0.05]);
        s.a = C64::new(3.0, -1.0);
        s.n_ph = 11.0;
        s.aa = C64::new(8.0, -6.0);
        for p in 0..OPS {
            s.mixed[p / 4][p % 4] = C64::new(0.01 * p as f64, -0.02);
        }
        let d = rhs_with_drive(0.01, &s, &params(), 2.0).unwrap();
        let tr: C64 = (0..LEVELS).map(|l| d.single[l][l]).sum();
        assert!(tr.norm() < 1e-9 * d.single.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max));
        assert!(d.hermiticity_deviation() == 0.0);
        assert!(d.swap_deviation() == 0.0);
    }

    #[test]
    fn blowup_is_reported_with_moment_name() {
        let mut s = CumulantState::ground();
        s.a = C64::new(f64::NAN, 0.0);
        match rhs_with_drive(0.5, &s, &params(), 0.0) {
            Err(Error::NumericalBlowup { moment, t }) => {
                assert_eq!(t, 0.5);
                assert!(moment.contains('<'));
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }
}
