//! Tracked expectation values and their flat real encoding.
//!
//! Molecular levels are indexed 0 = S₀, 1 = S₁⁰, 2 = S₁¹, 3 = T₁. A single-molecule
//! operator `X_αβ` is addressed by the compound index `4α + β`.
//!
//! Flat layout (all entries `f64`, fixed order):
//!
//! | offset | content |
//! |--------|---------|
//! | 0, 1   | Re, Im ⟨a⟩ |
//! | 2      | ⟨a†a⟩ |
//! | 3, 4   | Re, Im ⟨aa⟩ |
//! | 5..21  | ⟨X_αβ⟩ for α ≤ β row by row: diagonal entries as one real, the rest as (Re, Im) |
//! | 21..53 | ⟨aX_αβ⟩ for all 16 (α, β) row-major, (Re, Im) each |
//! | 53..   | one entry per pair orbit representative, in increasing compound order |
//!
//! Pair correlators `⟨X_p X_q⟩` satisfy `pair[p][q] = pair[q][p]` (distinct molecules
//! commute) and `pair[p][q] = conj(pair[p̄][q̄])` with `p̄` the transposed index. The
//! four images of `(p, q)` form an orbit; only its smallest member is stored, as a
//! single real when the orbit forces a real value.

use std::sync::OnceLock;

use num_complex::Complex64;

pub type C64 = Complex64;

pub const LEVELS: usize = 4;
pub const OPS: usize = LEVELS * LEVELS;
pub const GROUND: usize = 0;
pub const S1_LOWER: usize = 1;
pub const S1_UPPER: usize = 2;
pub const TRIPLET: usize = 3;

const LEVEL_NAMES: [&str; LEVELS] = ["0", "1", "2", "T"];

#[inline]
pub const fn op(alpha: usize, beta: usize) -> usize {
    alpha * LEVELS + beta
}

#[inline]
pub const fn transposed(p: usize) -> usize {
    op(p % LEVELS, p / LEVELS)
}

fn op_name(p: usize) -> String {
    format!("X{}{}", LEVEL_NAMES[p / LEVELS], LEVEL_NAMES[p % LEVELS])
}

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantState {
    /// ⟨a⟩
    pub a: C64,
    /// ⟨a†a⟩
    pub n_ph: f64,
    /// ⟨aa⟩
    pub aa: C64,
    /// ⟨X_αβ⟩ ensemble average.
    pub single: [[C64; LEVELS]; LEVELS],
    /// ⟨X_p X_q⟩ on distinct molecules, compound indices.
    pub pair: [[C64; OPS]; OPS],
    /// ⟨aX_αβ⟩
    pub mixed: [[C64; LEVELS]; LEVELS],
}

impl CumulantState {
    pub fn zero() -> Self {
        Self {
            a: ZERO,
            n_ph: 0.0,
            aa: ZERO,
            single: [[ZERO; LEVELS]; LEVELS],
            pair: [[ZERO; OPS]; OPS],
            mixed: [[ZERO; LEVELS]; LEVELS],
        }
    }

    /// Cavity vacuum, every molecule in S₀.
    pub fn ground() -> Self {
        Self::uncorrelated_molecules(&diag_populations([1.0, 0.0, 0.0, 0.0]))
    }

    /// Vacuum with every molecule in the same single-molecule density matrix and
    /// no inter-molecular correlation: `pair[p][q] = single[p]·single[q]`.
    pub fn uncorrelated_molecules(rho: &[[C64; LEVELS]; LEVELS]) -> Self {
        let mut s = Self::zero();
        // ⟨X_αβ⟩ = Tr(|α⟩⟨β| ρ) = ρ_βα
        for a in 0..LEVELS {
            for b in 0..LEVELS {
                s.single[a][b] = rho[b][a];
            }
        }
        for p in 0..OPS {
            for q in 0..OPS {
                s.pair[p][q] = s.x(p) * s.x(q);
            }
        }
        s
    }

    /// Populations from a classical distribution over the four levels.
    pub fn with_populations(pops: [f64; LEVELS]) -> Self {
        Self::uncorrelated_molecules(&diag_populations(pops))
    }

    #[inline]
    pub fn x(&self, p: usize) -> C64 {
        self.single[p / LEVELS][p % LEVELS]
    }

    /// ⟨aX_p⟩
    #[inline]
    pub fn ax(&self, p: usize) -> C64 {
        self.mixed[p / LEVELS][p % LEVELS]
    }

    /// ⟨a†X_p⟩ = conj⟨aX_p̄⟩
    #[inline]
    pub fn adx(&self, p: usize) -> C64 {
        self.ax(transposed(p)).conj()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.single[level][level].re
    }

    pub fn populations(&self) -> [f64; LEVELS] {
        std::array::from_fn(|l| self.population(l))
    }

    pub fn trace(&self) -> f64 {
        (0..LEVELS).map(|l| self.single[l][l].re).sum()
    }

    /// Largest |⟨X_αβ⟩ − conj⟨X_βα⟩| together with the largest violation of the
    /// pair conjugation rule and the largest imaginary part of a population.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for a in 0..LEVELS {
            dev = dev.max(self.single[a][a].im.abs());
            for b in 0..LEVELS {
                dev = dev.max((self.single[a][b] - self.single[b][a].conj()).norm());
            }
        }
        for p in 0..OPS {
            for q in 0..OPS {
                let img = self.pair[transposed(p)][transposed(q)].conj();
                dev = dev.max((self.pair[p][q] - img).norm());
            }
        }
        dev
    }

    pub fn swap_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for p in 0..OPS {
            for q in 0..OPS {
                dev = dev.max((self.pair[p][q] - self.pair[q][p]).norm());
            }
        }
        dev
    }

    /// Encodes the independent real degrees of freedom. Only the stored
    /// representative of each symmetry orbit is read.
    pub fn to_flat(&self) -> Vec<f64> {
        let layout = Layout::get();
        let mut v = Vec::with_capacity(layout.len);
        v.extend([self.a.re, self.a.im, self.n_ph, self.aa.re, self.aa.im]);
        for a in 0..LEVELS {
            for b in a..LEVELS {
                if a == b {
                    v.push(self.single[a][a].re);
                } else {
                    v.extend([self.single[a][b].re, self.single[a][b].im]);
                }
            }
        }
        for p in 0..OPS {
            v.extend([self.ax(p).re, self.ax(p).im]);
        }
        for rep in &layout.pairs {
            let z = self.pair[rep.p][rep.q];
            v.push(z.re);
            if !rep.real {
                v.push(z.im);
            }
        }
        debug_assert_eq!(v.len(), layout.len);
        v
    }

    /// Decodes a flat vector, mirroring every symmetry-related element.
    pub fn from_flat(v: &[f64]) -> Self {
        let layout = Layout::get();
        assert_eq!(v.len(), layout.len, "flat state has wrong length");
        let mut s = Self::zero();
        s.a = C64::new(v[0], v[1]);
        s.n_ph = v[2];
        s.aa = C64::new(v[3], v[4]);
        let mut i = SINGLE_OFFSET;
        for a in 0..LEVELS {
            for b in a..LEVELS {
                if a == b {
                    s.single[a][a] = C64::new(v[i], 0.0);
                    i += 1;
                } else {
                    let z = C64::new(v[i], v[i + 1]);
                    s.single[a][b] = z;
                    s.single[b][a] = z.conj();
                    i += 2;
                }
            }
        }
        for p in 0..OPS {
            s.mixed[p / LEVELS][p % LEVELS] = C64::new(v[i], v[i + 1]);
            i += 2;
        }
        for rep in &layout.pairs {
            let z = if rep.real {
                C64::new(v[i], 0.0)
            } else {
                C64::new(v[i], v[i + 1])
            };
            i += if rep.real { 1 } else { 2 };
            let (p, q) = (rep.p, rep.q);
            let (pt, qt) = (transposed(p), transposed(q));
            s.pair[p][q] = z;
            s.pair[q][p] = z;
            s.pair[pt][qt] = z.conj();
            s.pair[qt][pt] = z.conj();
        }
        s
    }
}

fn diag_populations(pops: [f64; LEVELS]) -> [[C64; LEVELS]; LEVELS] {
    let mut rho = [[ZERO; LEVELS]; LEVELS];
    for l in 0..LEVELS {
        rho[l][l] = C64::new(pops[l], 0.0);
    }
    rho
}

pub(crate) const SINGLE_OFFSET: usize = 5;
pub(crate) const MIXED_OFFSET: usize = SINGLE_OFFSET + 16;
pub(crate) const PAIR_OFFSET: usize = MIXED_OFFSET + 2 * OPS;

#[derive(Debug, Clone, Copy)]
pub(crate) struct PairRep {
    pub p: usize,
    pub q: usize,
    pub real: bool,
}

#[derive(Debug)]
pub(crate) struct Layout {
    pub pairs: Vec<PairRep>,
    pub len: usize,
}

impl Layout {
    pub fn get() -> &'static Layout {
        static LAYOUT: OnceLock<Layout> = OnceLock::new();
        LAYOUT.get_or_init(|| {
            let mut pairs = Vec::new();
            for p in 0..OPS {
                for q in 0..OPS {
                    let idx = p * OPS + q;
                    let (pt, qt) = (transposed(p), transposed(q));
                    let orbit = [idx, q * OPS + p, pt * OPS + qt, qt * OPS + pt];
                    if orbit.iter().all(|&o| o >= idx) {
                        let real = (pt, qt) == (p, q) || (qt, pt) == (p, q);
                        pairs.push(PairRep { p, q, real });
                    }
                }
            }
            let pair_len: usize = pairs.iter().map(|r| if r.real { 1 } else { 2 }).sum();
            Layout {
                len: PAIR_OFFSET + pair_len,
                pairs,
            }
        })
    }
}

/// Number of reals in the flat encoding.
pub fn flat_len() -> usize {
    Layout::get().len
}

/// Human-readable name of a flat-vector entry.
pub fn moment_name(index: usize) -> String {
    const PHOTON: [&str; 5] = ["Re<a>", "Im<a>", "<a'a>", "Re<aa>", "Im<aa>"];
    if index < SINGLE_OFFSET {
        return PHOTON[index].to_string();
    }
    let layout = Layout::get();
    let mut i = SINGLE_OFFSET;
    for a in 0..LEVELS {
        for b in a..LEVELS {
            let width = if a == b { 1 } else { 2 };
            if index < i + width {
                let part = if index == i { "Re" } else { "Im" };
                return format!("{part}<{}>", op_name(op(a, b)));
            }
            i += width;
        }
    }
    if index < PAIR_OFFSET {
        let k = index - MIXED_OFFSET;
        let part = if k.is_multiple_of(2) { "Re" } else { "Im" };
        return format!("{part}<a{}>", op_name(k / 2));
    }
    let mut i = PAIR_OFFSET;
    for rep in &layout.pairs {
        let width = if rep.real { 1 } else { 2 };
        if index < i + width {
            let part = if index == i { "Re" } else { "Im" };
            return format!("{part}<{}{}>", op_name(rep.p), op_name(rep.q));
        }
        i += width;
    }
    format!("#{index}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(seed: u64) -> CumulantState {
        // small deterministic LCG; only symmetry structure matters here
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut s = CumulantState::zero();
        s.a = C64::new(next(), next());
        s.n_ph = next();
        s.aa = C64::new(next(), next());
        for p in 0..OPS {
            s.mixed[p / 4][p % 4] = C64::new(next(), next());
        }
        for a in 0..4 {
            s.single[a][a] = C64::new(next(), 0.0);
            for b in a + 1..4 {
                let z = C64::new(next(), next());
                s.single[a][b] = z;
                s.single[b][a] = z.conj();
            }
        }
        for rep in &Layout::get().pairs {
            let z = if rep.real {
                C64::new(next(), 0.0)
            } else {
                C64::new(next(), next())
            };
            let (p, q) = (rep.p, rep.q);
            let (pt, qt) = (transposed(p), transposed(q));
            s.pair[p][q] = z;
            s.pair[q][p] = z;
            s.pair[pt][qt] = z.conj();
            s.pair[qt][pt] = z.conj();
        }
        s
    }

    #[test]
    fn flat_round_trip_is_exact() {
        let s = random_state(7);
        assert!(s.hermiticity_deviation() < 1e-15);
        assert!(s.swap_deviation() < 1e-15);
        let v = s.to_flat();
        assert_eq!(v.len(), flat_len());
        assert_eq!(CumulantState::from_flat(&v), s);
    }

    #[test]
    fn orbits_cover_all_pairs() {
        // every (p, q) is the image of exactly one representative
        let mut seen = [[false; OPS]; OPS];
        for rep in &Layout::get().pairs {
            let (p, q) = (rep.p, rep.q);
            let (pt, qt) = (transposed(p), transposed(q));
            for (a, b) in [(p, q), (q, p), (pt, qt), (qt, pt)] {
                seen[a][b] = true;
            }
        }
        assert!(seen.iter().flatten().all(|&s| s));
        // 256 complex entries reduce to 136 independent reals:
        // dimension of the symmetric square of the 16-dim real space of Hermitian 4×4s
        let pair_reals = flat_len() - PAIR_OFFSET;
        assert_eq!(pair_reals, 136);
    }

    #[test]
    fn ground_state_structure() {
        let g = CumulantState::ground();
        assert_eq!(g.trace(), 1.0);
        assert_eq!(g.pair[0][0], C64::new(1.0, 0.0));
        assert_eq!(g.populations(), [1.0, 0.0, 0.0, 0.0]);
        let nonzero_pairs = g.pair.iter().flatten().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero_pairs, 1);
    }

    #[test]
    fn single_uses_operator_convention() {
        // ρ with a coherence ρ_10 = c gives ⟨X_01⟩ = Tr(|0⟩⟨1|ρ) = ρ_10
        let mut rho = [[ZERO; 4]; 4];
        rho[0][0] = C64::new(0.7, 0.0);
        rho[1][1] = C64::new(0.3, 0.0);
        rho[1][0] = C64::new(0.1, 0.2);
        rho[0][1] = C64::new(0.1, -0.2);
        let s = CumulantState::uncorrelated_molecules(&rho);
        assert_eq!(s.single[0][1], C64::new(0.1, 0.2));
        assert!(s.hermiticity_deviation() < 1e-16);
    }

    #[test]
    fn moment_names() {
        assert_eq!(moment_name(0), "Re<a>");
        assert_eq!(moment_name(SINGLE_OFFSET), "Re<X00>");
        assert_eq!(moment_name(SINGLE_OFFSET + 1), "Re<X01>");
        assert_eq!(moment_name(SINGLE_OFFSET + 2), "Im<X01>");
        assert_eq!(moment_name(MIXED_OFFSET + 1), "Im<aX00>");
        assert_eq!(moment_name(PAIR_OFFSET), "Re<X00X00>");
    }
}
