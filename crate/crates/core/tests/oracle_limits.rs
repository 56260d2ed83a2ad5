//! Dense master-equation solver in the decoupled limit against the closed
//! forms it must reproduce.

use num_complex::Complex64;
use qbattery::catalog::DeviceCatalog;
use qbattery::dynamics::{uniform_times, Drive, DynamicsParams, IntegrationOptions};
use qbattery::oracle::{driven_cavity_solution, rate_equation_solution, FockConfig, LindbladModel};
use qbattery::units::ev_to_angular_rate;

const TOL: f64 = 1e-8;

fn decoupled() -> DynamicsParams {
    let mut p = DeviceCatalog::builtin().get("D5").unwrap().dynamics;
    p.g = 0.0;
    // ⟨a⟩ stays below ~0.2, far from the Fock cutoff
    p.pulse.r = 1e-12;
    p
}

#[test]
fn dense_solver_with_zero_coupling_matches_closed_forms() {
    let p = decoupled();
    let model = LindbladModel::new(&p, FockConfig { photon_cutoff: 6, n_molecules: 1 }).unwrap();
    let z = Complex64::new(0.0, 0.0);
    let mut molecule = [[z; 4]; 4];
    let initial = (0.5, 0.3, 0.1);
    for (k, w) in [0.1, initial.0, initial.1, initial.2].into_iter().enumerate() {
        molecule[k][k] = Complex64::new(w, 0.0);
    }
    let rho0 = model.product_state(&[Complex64::new(1.0, 0.0)], &molecule).unwrap();

    let t_start = -0.2;
    let times = uniform_times(t_start, 5.0, 0.01);
    let opts = IntegrationOptions::with_tolerances(1e-10, 1e-12);
    let states = model.propagate(&p, &rho0, Drive::Pulse, t_start, &times, &opts).unwrap();

    let detuning = ev_to_angular_rate(p.delta_c - p.nu);
    let (mut pop_dev, mut field_dev) = (0.0f64, 0.0f64);
    for (rho, &t) in states.iter().zip(&times) {
        let exact = rate_equation_solution(&p, initial, t - t_start);
        for (a, b) in model.populations(rho).iter().zip(exact) {
            pop_dev = pop_dev.max((a - b).abs());
        }
        let a = driven_cavity_solution(p.kappa, detuning, |s| p.drive_amplitude(s), t_start, t);
        field_dev = field_dev.max((model.field(rho) - a).norm());
    }
    assert!(pop_dev < TOL, "population deviation {pop_dev:e}");
    assert!(field_dev < TOL, "field deviation {field_dev:e}");
}
