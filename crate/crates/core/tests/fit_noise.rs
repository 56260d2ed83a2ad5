use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use qbattery::catalog::{DeviceCatalog, DELTA1, DELTA2};
use qbattery::fit::fit_reflectance;
use qbattery::polariton::{default_grid, reflectance, Spectrum};

/// Gaussian noise at 1% of the absorption amplitude on the D5 spectrum.
#[test]
fn noisy_d5_spectrum_recovers_parameters_within_two_percent() {
    let truth = DeviceCatalog::builtin().get("D5").unwrap().spectral;
    let clean = reflectance(&truth, &default_grid()).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01 * truth.i0).unwrap();
    let noisy = Spectrum::new(clean.points().iter().map(|&(e, r)| (e, r + noise.sample(&mut rng))).collect()).unwrap();

    let init = truth.with_coupling(truth.g_co * 0.9);
    let fit = fit_reflectance(&noisy, (DELTA1, DELTA2), &init).unwrap();
    let p = fit.params;
    for (name, got, want) in [
        ("delta_c", p.delta_c, truth.delta_c),
        ("g_co", p.g_co, truth.g_co),
        ("i0", p.i0, truth.i0),
        ("sigma", p.sigma, truth.sigma),
    ] {
        let rel = (got - want).abs() / want;
        assert!(rel < 0.02, "{name}: {got} vs {want} ({rel:.2e})");
    }
}
