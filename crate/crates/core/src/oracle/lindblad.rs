//! Dense master-equation propagation for one or two molecules and a truncated
//! cavity mode, in the same rotating frame as the cumulant engine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{
    CumulantState, Drive, DynamicsParams, IntegrationOptions, GROUND, LEVELS, OPS, S1_LOWER,
    S1_UPPER, TRIPLET,
};
use crate::error::{Error, Result};
use crate::integrator::{self, FailureKind, StepCeiling};
use crate::units::ev_to_angular_rate;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Largest Hilbert dimension accepted by the dense solver.
pub const MAX_DIMENSION: usize = 4096;
/// Population allowed in the highest retained Fock level.
pub const CUTOFF_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockConfig {
    /// Highest photon number retained.
    pub photon_cutoff: usize,
    /// 1 or 2.
    pub n_molecules: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            photon_cutoff: 6,
            n_molecules: 1,
        }
    }
}

impl FockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.photon_cutoff < 2 {
            return Err(Error::InvalidInput(format!(
                "photon cutoff must be at least 2 (got {})",
                self.photon_cutoff
            )));
        }
        if !(1..=2).contains(&self.n_molecules) {
            return Err(Error::InvalidInput(format!(
                "dense solver supports 1 or 2 molecules (got {})",
                self.n_molecules
            )));
        }
        if self.dimension() > MAX_DIMENSION {
            return Err(Error::InvalidInput(format!(
                "Hilbert dimension {} exceeds {MAX_DIMENSION}",
                self.dimension()
            )));
        }
        Ok(())
    }

    fn molecular_dimension(&self) -> usize {
        LEVELS.pow(self.n_molecules as u32)
    }

    pub fn dimension(&self) -> usize {
        (self.photon_cutoff + 1) * self.molecular_dimension()
    }
}

/// Row-major density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub elements: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            elements: vec![ZERO; dim * dim],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.elements[row * self.dim + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_fn(self.dim, self.dim, |r, c| {
            0.5 * (self.get(r, c) + self.get(c, r).conj())
        });
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn to_reals(&self) -> Vec<f64> {
        self.elements.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn from_reals(dim: usize, v: &[f64]) -> Self {
        Self {
            dim,
            elements: v.chunks_exact(2).map(|z| C64::new(z[0], z[1])).collect(),
        }
    }
}

/// Operator as a list of nonzero entries (row, col, value).
#[derive(Debug, Clone, Default)]
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn scaled(&self, c: C64) -> Sparse {
        Sparse {
            entries: self.entries.iter().map(|&(r, k, v)| (r, k, c * v)).collect(),
        }
    }

    fn adjoint(&self) -> Sparse {
        Sparse {
            entries: self.entries.iter().map(|&(r, k, v)| (k, r, v.conj())).collect(),
        }
    }

    fn add(&mut self, other: &Sparse) {
        self.entries.extend_from_slice(&other.entries);
    }

    fn product(&self, other: &Sparse, dim: usize) -> Sparse {
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for &(k, c, w) in &other.entries {
            by_row[k].push((c, w));
        }
        let mut out = Sparse::default();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                out.entries.push((r, c, v * w));
            }
        }
        out.compact()
    }

    fn compact(mut self) -> Sparse {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        Sparse { entries: merged }
    }

    /// Tr(A ρ)
    fn expect(&self, rho: &[C64], dim: usize) -> C64 {
        self.entries.iter().map(|&(r, k, v)| v * rho[k * dim + r]).sum()
    }
}

/// Master-equation generator for a fixed parameter set and truncation.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    cfg: FockConfig,
    dim: usize,
    /// H₀ − (i/2) Σ L†L
    h_eff: Sparse,
    /// i(a† − a)
    drive: Sparse,
    jumps: Vec<Sparse>,
    photon_ops: [Sparse; 3],
    single_ops: Vec<[Sparse; OPS]>,
    mixed_ops: Vec<[Sparse; OPS]>,
}

impl LindbladModel {
    pub fn new(p: &DynamicsParams, cfg: FockConfig) -> Result<Self> {
        cfg.validate()?;
        p.validate()?;
        let b = Builder::new(cfg);
        let dim = cfg.dimension();
        let w = p_angular(p);

        let a = b.embed(&b.photon(Photon::A), &[]);
        let n_op = b.embed(&b.photon(Photon::N), &[]);
        let aa = b.embed(&b.photon(Photon::AA), &[]);
        let ad = a.adjoint();

        let mut h0 = n_op.scaled(ONE * w.cavity);
        let mut jumps = vec![a.scaled(ONE * p.kappa.sqrt())];
        let channels = [
            (p.gamma_minus, GROUND, S1_LOWER),
            (p.gamma_minus, GROUND, S1_UPPER),
            (p.gamma_t_minus, GROUND, TRIPLET),
            (p.gamma_z, S1_LOWER, S1_LOWER),
            (p.gamma_z, S1_UPPER, S1_UPPER),
            (p.gamma_isc, TRIPLET, S1_LOWER),
            (p.gamma_isc, TRIPLET, S1_UPPER),
        ];
        let identity = b.photon(Photon::Identity);
        for j in 0..cfg.n_molecules {
            for l in 0..LEVELS {
                h0.add(&b.embed(&identity, &[(j, l, l)]).scaled(ONE * w.level[l]));
            }
            for k in [S1_LOWER, S1_UPPER] {
                let lower = b.embed(&identity, &[(j, GROUND, k)]);
                h0.add(&ad.product(&lower, dim).scaled(ONE * w.g));
                h0.add(&a.product(&lower.adjoint(), dim).scaled(ONE * w.g));
            }
            for &(rate, to, from) in &channels {
                if rate > 0.0 {
                    jumps.push(b.embed(&identity, &[(j, to, from)]).scaled(ONE * rate.sqrt()));
                }
            }
        }
        let mut h_eff = h0;
        for l in &jumps {
            h_eff.add(&l.adjoint().product(l, dim).scaled(-0.5 * I));
        }
        let h_eff = h_eff.compact();

        let mut drive = ad.clone();
        drive.add(&a.scaled(-ONE));
        let drive = drive.scaled(I).compact();

        let single_ops: Vec<[Sparse; OPS]> = (0..cfg.n_molecules)
            .map(|j| std::array::from_fn(|q| b.embed(&identity, &[(j, q / LEVELS, q % LEVELS)])))
            .collect();
        let mixed_ops = single_ops
            .iter()
            .map(|ops| std::array::from_fn(|q| a.product(&ops[q], dim)))
            .collect();

        Ok(Self {
            cfg,
            dim,
            h_eff,
            drive,
            jumps,
            photon_ops: [a, n_op, aa],
            single_ops,
            mixed_ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> FockConfig {
        self.cfg
    }

    /// Cavity vacuum with every molecule in S₀.
    pub fn ground_state(&self) -> DensityMatrix {
        let mut rho = DensityMatrix::zeros(self.dim);
        rho.elements[0] = ONE;
        rho
    }

    /// Pure photon state (Fock amplitudes, renormalized) times `molecule` on
    /// every molecule. `molecule[α][β]` is the matrix element ⟨α|ρ|β⟩.
    pub fn product_state(
        &self,
        photon: &[C64],
        molecule: &[[C64; LEVELS]; LEVELS],
    ) -> Result<DensityMatrix> {
        let nc = self.cfg.photon_cutoff + 1;
        if photon.len() > nc {
            return Err(Error::InvalidInput(format!(
                "{} photon amplitudes exceed cutoff {}",
                photon.len(),
                self.cfg.photon_cutoff
            )));
        }
        let norm = photon.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DivisionByZero("photon state norm"));
        }
        let md = self.cfg.molecular_dimension();
        let levels = |m: usize| -> Vec<usize> {
            (0..self.cfg.n_molecules)
                .map(|j| (m / LEVELS.pow((self.cfg.n_molecules - 1 - j) as u32)) % LEVELS)
                .collect()
        };
        let mut rho = DensityMatrix::zeros(self.dim);
        for (n1, c1) in photon.iter().enumerate() {
            for (n2, c2) in photon.iter().enumerate() {
                let ph = c1 * c2.conj() / (norm * norm);
                for m1 in 0..md {
                    let l1 = levels(m1);
                    for m2 in 0..md {
                        let l2 = levels(m2);
                        let mol: C64 = l1.iter().zip(&l2).map(|(&x, &y)| molecule[x][y]).product();
                        rho.elements[(n1 * md + m1) * self.dim + n2 * md + m2] = ph * mol;
                    }
                }
            }
        }
        Ok(rho)
    }

    /// dρ/dt for drive amplitude `eta` (ps⁻¹); `out` is overwritten. `rho`
    /// must be Hermitian: the commutator part uses ρH† = (Hρ)†.
    pub fn derivative(&self, eta: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        // Hρ with H = H_eff + η D, then −i(Hρ − (Hρ)†)
        left_mul(&self.h_eff, rho, out, d, ONE);
        if eta != 0.0 {
            left_mul(&self.drive, rho, out, d, ONE * eta);
        }
        for r in 0..d {
            for c in r..d {
                let (x, y) = (out[r * d + c], out[c * d + r]);
                out[r * d + c] = -I * (x - y.conj());
                out[c * d + r] = -I * (y - x.conj());
            }
        }
        for l in &self.jumps {
            for &(r, k, v) in &l.entries {
                for &(c, m, w) in &l.entries {
                    out[r * d + c] += v * rho[k * d + m] * w.conj();
                }
            }
        }
    }

    /// Ensemble-averaged moments in the cumulant engine's convention. Linear in
    /// `rho`, so applying it to dρ/dt gives exact moment derivatives. Pair
    /// moments are left at zero for a single molecule.
    pub fn moments(&self, rho: &[C64]) -> CumulantState {
        let d = self.dim;
        let nm = self.cfg.n_molecules as f64;
        let mut s = CumulantState::zero();
        s.a = self.photon_ops[0].expect(rho, d);
        s.n_ph = self.photon_ops[1].expect(rho, d).re;
        s.aa = self.photon_ops[2].expect(rho, d);
        for q in 0..OPS {
            let (al, be) = (q / LEVELS, q % LEVELS);
            s.single[al][be] =
                self.single_ops.iter().map(|ops| ops[q].expect(rho, d)).sum::<C64>() / nm;
            s.mixed[al][be] =
                self.mixed_ops.iter().map(|ops| ops[q].expect(rho, d)).sum::<C64>() / nm;
        }
        if self.cfg.n_molecules == 2 {
            for p in 0..OPS {
                for q in 0..OPS {
                    let forward = self.single_ops[0][p].product(&self.single_ops[1][q], d);
                    let backward = self.single_ops[1][p].product(&self.single_ops[0][q], d);
                    s.pair[p][q] = 0.5 * (forward.expect(rho, d) + backward.expect(rho, d));
                }
            }
        }
        s
    }

    /// Level populations averaged over molecules.
    pub fn populations(&self, rho: &DensityMatrix) -> [f64; LEVELS] {
        let d = self.dim;
        let nm = self.cfg.n_molecules as f64;
        std::array::from_fn(|l| {
            self.single_ops
                .iter()
                .map(|ops| ops[l * LEVELS + l].expect(&rho.elements, d).re)
                .sum::<f64>()
                / nm
        })
    }

    /// ⟨a⟩
    pub fn field(&self, rho: &DensityMatrix) -> C64 {
        self.photon_ops[0].expect(&rho.elements, self.dim)
    }

    pub fn photon_number(&self, rho: &DensityMatrix) -> f64 {
        self.photon_ops[1].expect(&rho.elements, self.dim).re
    }

    pub fn top_fock_population(&self, rho: &DensityMatrix) -> f64 {
        let md = self.cfg.molecular_dimension();
        let start = self.cfg.photon_cutoff * md;
        (start..start + md).map(|i| rho.get(i, i).re).sum()
    }

    /// Propagates `initial` from `t_start` and returns ρ at each of `t_grid`.
    pub fn propagate(
        &self,
        p: &DynamicsParams,
        initial: &DensityMatrix,
        drive: Drive,
        t_start: f64,
        t_grid: &[f64],
        options: &IntegrationOptions,
    ) -> Result<Vec<DensityMatrix>> {
        if initial.dim != self.dim {
            return Err(Error::InvalidInput(format!(
                "initial state has dimension {}, model has {}",
                initial.dim, self.dim
            )));
        }
        let Some(&t_end) = t_grid.last() else {
            return Ok(Vec::new());
        };
        if t_grid.iter().any(|&t| t < t_start) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "time grid must be increasing and not precede the start time".into(),
            ));
        }
        let window = match drive {
            Drive::Pulse => Some(p.pulse_window()),
            _ => None,
        };
        let opts = integrator::Options {
            rel_tol: options.rel_tol,
            abs_tol: options.abs_tol,
            initial_step: options.initial_step,
            min_step: 1e-14,
            max_steps: options.max_steps,
            ceiling: StepCeiling {
                window,
                inside: options.max_step_pulse,
                outside: options.max_step_outside,
            },
        };
        let n = self.dim * self.dim;
        let mut rho = vec![ZERO; n];
        let mut drho = vec![ZERO; n];
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            // Hermitian part only: the derivative assumes it, and anti-Hermitian
            // round-off would otherwise be amplified by the dephasing terms
            let d = self.dim;
            for r in 0..d {
                for c in r..d {
                    let (i, j) = (2 * (r * d + c), 2 * (c * d + r));
                    let z = 0.5 * (C64::new(y[i], y[i + 1]) + C64::new(y[j], -y[j + 1]));
                    rho[r * d + c] = z;
                    rho[c * d + r] = z.conj();
                }
            }
            self.derivative(drive.amplitude(t, p), &rho, &mut drho);
            for (out, z) in dy.chunks_exact_mut(2).zip(&drho) {
                out[0] = z.re;
                out[1] = z.im;
            }
            if dy.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::NumericalBlowup {
                    moment: "density matrix".into(),
                    t,
                })
            }
        };
        let y0 = initial.to_reals();
        let t_end_integration = t_end.max(t_start);
        let solution = if t_end_integration > t_start {
            integrator::solve(rhs, t_start, &y0, t_end_integration, t_grid, &opts).map_err(|f| {
                let reason = match f.kind {
                    FailureKind::Rhs(e) => e.to_string(),
                    FailureKind::StepUnderflow { h } => format!("step size underflow (h = {h:e} ps)"),
                    FailureKind::TooManySteps => "step budget exhausted".to_string(),
                };
                Error::Integration {
                    t: f.t,
                    reason,
                    partial: Box::new(crate::dynamics::Trajectory::empty(*p)),
                }
            })?
        } else {
            integrator::Solution {
                samples: vec![y0.clone(); t_grid.len()],
                final_state: y0,
                stats: Default::default(),
            }
        };
        let states: Vec<DensityMatrix> = solution
            .samples
            .iter()
            .map(|v| DensityMatrix::from_reals(self.dim, v))
            .collect();
        for rho in &states {
            let top = self.top_fock_population(rho);
            if top > CUTOFF_TOLERANCE {
                return Err(Error::CutoffInsufficient { top_population: top });
            }
        }
        Ok(states)
    }
}

/// Propagates the pulse-driven system from the ground state at `t_grid[0]`.
pub fn lindblad_propagate(
    p: &DynamicsParams,
    cfg: FockConfig,
    t_grid: &[f64],
) -> Result<Vec<DensityMatrix>> {
    let model = LindbladModel::new(p, cfg)?;
    let Some(&t_start) = t_grid.first() else {
        return Ok(Vec::new());
    };
    model.propagate(
        p,
        &model.ground_state(),
        Drive::Pulse,
        t_start,
        t_grid,
        &IntegrationOptions::default(),
    )
}

/// out += coef · A ρ
fn left_mul(a: &Sparse, rho: &[C64], out: &mut [C64], d: usize, coef: C64) {
    for &(r, k, v) in &a.entries {
        let cv = coef * v;
        let src = &rho[k * d..(k + 1) * d];
        for (o, x) in out[r * d..(r + 1) * d].iter_mut().zip(src) {
            *o += cv * x;
        }
    }
}

struct Angular {
    level: [f64; LEVELS],
    cavity: f64,
    g: f64,
}

fn p_angular(p: &DynamicsParams) -> Angular {
    Angular {
        level: [
            0.0,
            ev_to_angular_rate(p.delta1 - p.nu),
            ev_to_angular_rate(p.delta2 - p.nu),
            ev_to_angular_rate(p.delta_t),
        ],
        cavity: ev_to_angular_rate(p.delta_c - p.nu),
        g: ev_to_angular_rate(p.g),
    }
}

#[derive(Clone, Copy)]
enum Photon {
    Identity,
    A,
    N,
    AA,
}

struct Builder {
    cfg: FockConfig,
}

impl Builder {
    fn new(cfg: FockConfig) -> Self {
        Self { cfg }
    }

    fn photon(&self, kind: Photon) -> Vec<(usize, usize, f64)> {
        let nc = self.cfg.photon_cutoff + 1;
        match kind {
            Photon::Identity => (0..nc).map(|n| (n, n, 1.0)).collect(),
            Photon::A => (1..nc).map(|n| (n - 1, n, (n as f64).sqrt())).collect(),
            Photon::N => (1..nc).map(|n| (n, n, n as f64)).collect(),
            Photon::AA => (2..nc)
                .map(|n| (n - 2, n, ((n * (n - 1)) as f64).sqrt()))
                .collect(),
        }
    }

    /// Photon operator times |α⟩⟨β| on the listed molecules (slot, α, β),
    /// identity on the rest.
    fn embed(&self, photon: &[(usize, usize, f64)], factors: &[(usize, usize, usize)]) -> Sparse {
        let nm = self.cfg.n_molecules;
        let md = self.cfg.molecular_dimension();
        let stride = |j: usize| LEVELS.pow((nm - 1 - j) as u32);
        let mut entries = Vec::new();
        for &(r, c, v) in photon {
            'cols: for m in 0..md {
                let mut row = m;
                for &(j, alpha, beta) in factors {
                    let level = (m / stride(j)) % LEVELS;
                    if level != beta {
                        continue 'cols;
                    }
                    row = row - beta * stride(j) + alpha * stride(j);
                }
                entries.push((r * md + row, c * md + m, ONE * v));
            }
        }
        Sparse { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PulseParams;

    fn params() -> DynamicsParams {
        DynamicsParams {
            delta1: 1.8,
            delta2: 1.98,
            delta_t: 1.2,
            delta_c: 1.82,
            nu: 1.7,
            g: 0.05,
            n_molecules: 2.0,
            kappa: 29.0,
            gamma_minus: 0.5,
            gamma_t_minus: 0.01,
            gamma_z: 20.0,
            gamma_isc: 5.0,
            pulse: PulseParams::default(),
        }
    }

    #[test]
    fn config_validation() {
        assert!(FockConfig { photon_cutoff: 1, n_molecules: 1 }.validate().is_err());
        assert!(FockConfig { photon_cutoff: 4, n_molecules: 3 }.validate().is_err());
        assert!(FockConfig { photon_cutoff: 256, n_molecules: 2 }.validate().is_err());
        assert_eq!(FockConfig { photon_cutoff: 6, n_molecules: 2 }.dimension(), 112);
    }

    #[test]
    fn generator_is_trace_free_and_hermitian() {
        let cfg = FockConfig { photon_cutoff: 4, n_molecules: 2 };
        let model = LindbladModel::new(&params(), cfg).unwrap();
        let photon = [C64::new(0.8, 0.0), C64::new(0.3, 0.2), C64::new(0.1, -0.1)];
        let mut mol = [[ZERO; LEVELS]; LEVELS];
        mol[0][0] = C64::new(0.6, 0.0);
        mol[1][1] = C64::new(0.3, 0.0);
        mol[3][3] = C64::new(0.1, 0.0);
        mol[0][1] = C64::new(0.2, 0.1);
        mol[1][0] = mol[0][1].conj();
        let rho = model.product_state(&photon, &mol).unwrap();
        assert!((rho.trace() - ONE).norm() < 1e-14);
        let mut out = vec![ZERO; rho.elements.len()];
        model.derivative(3.0, &rho.elements, &mut out);
        let d = DensityMatrix { dim: rho.dim, elements: out };
        assert!(d.trace().norm() < 1e-10);
        assert!(d.hermiticity_deviation() < 1e-10);
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let cfg = FockConfig { photon_cutoff: 3, n_molecules: 1 };
        let model = LindbladModel::new(&params(), cfg).unwrap();
        let rho = model.ground_state();
        let mut out = vec![ZERO; rho.elements.len()];
        model.derivative(0.0, &rho.elements, &mut out);
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn moments_of_product_state() {
        let cfg = FockConfig { photon_cutoff: 5, n_molecules: 2 };
        let model = LindbladModel::new(&params(), cfg).unwrap();
        let photon = [C64::new(1.0, 0.0), C64::new(0.0, 0.5)];
        let mut mol = [[ZERO; LEVELS]; LEVELS];
        mol[0][0] = C64::new(0.7, 0.0);
        mol[2][2] = C64::new(0.3, 0.0);
        let rho = model.product_state(&photon, &mol).unwrap();
        let s = model.moments(&rho.elements);
        assert!((s.a - C64::new(0.0, 0.4)).norm() < 1e-14);
        assert!((s.n_ph - 0.2).abs() < 1e-14);
        assert!((s.single[2][2].re - 0.3).abs() < 1e-14);
        assert!((s.pair[10][10].re - 0.09).abs() < 1e-14);
        assert!((s.mixed[0][0] - 0.7 * s.a).norm() < 1e-14);
        for (a, b) in model.populations(&rho).iter().zip([0.7, 0.0, 0.3, 0.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
