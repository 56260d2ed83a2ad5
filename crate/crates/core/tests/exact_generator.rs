//! On an uncorrelated state (any photon state times identical molecular
//! factors) the closure is exact, so the cumulant right-hand side must equal
//! the moments of the full master-equation generator.

use num_complex::Complex64 as C64;
use qbattery::dynamics::{DynamicsParams, Generator, PulseParams, LEVELS, OPS};
use qbattery::oracle::{FockConfig, LindbladModel};

fn params(g: f64) -> DynamicsParams {
    DynamicsParams {
        delta1: 1.80,
        delta2: 1.98,
        delta_t: 1.2,
        delta_c: 1.82,
        nu: 1.71,
        g,
        n_molecules: 2.0,
        kappa: 29.0,
        gamma_minus: 0.5,
        gamma_t_minus: 0.4,
        gamma_z: 20.0,
        gamma_isc: 5.0,
        pulse: PulseParams::default(),
    }
}

fn coherent(alpha: C64, cutoff: usize) -> Vec<C64> {
    let mut amps = vec![C64::new(1.0, 0.0)];
    for n in 1..=cutoff {
        let prev = amps[n - 1];
        amps.push(prev * alpha / (n as f64).sqrt());
    }
    amps
}

/// Pure molecular state with weight on every level, including the triplet.
fn molecule() -> [[C64; LEVELS]; LEVELS] {
    let psi = [
        C64::new(0.8, 0.0),
        C64::new(0.3, 0.2),
        C64::new(0.2, -0.1),
        C64::new(0.0, 0.25),
    ];
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut rho = [[C64::new(0.0, 0.0); LEVELS]; LEVELS];
    for a in 0..LEVELS {
        for b in 0..LEVELS {
            rho[a][b] = psi[a] * psi[b].conj() / (norm * norm);
        }
    }
    rho
}

fn compare(g_ev: f64, eta: f64, alpha: C64) {
    let p = params(g_ev);
    let model = LindbladModel::new(&p, FockConfig { photon_cutoff: 12, n_molecules: 2 }).unwrap();
    let rho = model.product_state(&coherent(alpha, 12), &molecule()).unwrap();
    let s = model.moments(&rho.elements);
    let mut drho = vec![C64::new(0.0, 0.0); rho.elements.len()];
    model.derivative(eta, &rho.elements, &mut drho);
    let exact = model.moments(&drho);
    let gen = Generator::new(&p);

    // rates reach ~1e3 ps⁻¹, so this is ~1e-10 relative
    let scale = 1e-7;
    let (da, dn, daa) = gen.d_photon(&s, eta);
    assert!((da - exact.a).norm() < scale, "a: {da} vs {}", exact.a);
    assert!((dn - exact.n_ph).abs() < scale, "n: {dn} vs {}", exact.n_ph);
    assert!((daa - exact.aa).norm() < scale, "aa: {daa} vs {}", exact.aa);
    for q in 0..OPS {
        let (a, b) = (q / LEVELS, q % LEVELS);
        let d = gen.d_single(&s, q);
        assert!((d - exact.single[a][b]).norm() < scale, "X{a}{b}: {d} vs {}", exact.single[a][b]);
        let d = gen.d_mixed(&s, q, eta);
        assert!((d - exact.mixed[a][b]).norm() < scale, "aX{a}{b}: {d} vs {}", exact.mixed[a][b]);
    }
    for q in 0..OPS {
        for r in 0..OPS {
            let d = gen.d_pair(&s, q, r);
            assert!((d - exact.pair[q][r]).norm() < scale, "pair {q},{r}: {d} vs {}", exact.pair[q][r]);
        }
    }
}

#[test]
fn cumulant_rhs_matches_master_equation_without_coupling() {
    compare(0.0, 4.0, C64::new(0.3, -0.2));
}

#[test]
fn cumulant_rhs_matches_master_equation_with_coupling() {
    compare(0.08, 0.0, C64::new(0.3, 0.1));
}

#[test]
fn cumulant_rhs_matches_master_equation_driven_and_coupled() {
    compare(0.112, 7.5, C64::new(-0.25, 0.2));
}
