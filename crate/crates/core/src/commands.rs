//! Command implementations behind the `qbattery` binary. Each command writes
//! its outputs into `cfg.output_dir` together with `provenance.toml`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::catalog::{DeviceCatalog, DELTA1, DELTA2};
use crate::config::{RunConfig, RunSettings};
use crate::device::DeviceSpec;
use crate::electrical::{max_power_point, power_ratio, EqePoint};
use crate::error::{Error, Result};
use crate::fit::fit_reflectance;
use crate::io::{self, Provenance, Tolerances};
use crate::observables::{charging_report, delta_r_over_r, scaling_sweep, simulate_charging, ChargingReport};
use crate::polariton::{eigensystem, rabi_splittings, reflectance, uniform_grid, PolaritonBranch};
use crate::validate::{self, CheckResult};

/// Exit status for a run whose checks did not all pass.
pub const VALIDATION_FAILURE: i32 = 3;

/// What a command produced. `exit_code` is 0 unless a per-item failure was
/// recorded without aborting the run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl Outcome {
    fn fail(&mut self, code: i32) {
        self.exit_code = self.exit_code.max(code);
    }
}

struct Output<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            outcome: Outcome::default(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.outcome.files.push(p.clone());
        p
    }

    fn provenance(&mut self, cfg: &RunConfig, command: &str, settings: &RunSettings, devices: &[DeviceSpec]) -> Result<()> {
        let path = self.path("provenance.toml");
        io::write_record(
            &path,
            &Provenance {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                seed: cfg.seed,
                settings,
                tolerances: Tolerances {
                    rel_tol: settings.integration.rel_tol,
                    abs_tol: settings.integration.abs_tol,
                },
                devices,
            },
        )
    }
}

#[derive(Serialize)]
struct BranchReport<'a> {
    device: &'a str,
    rabi_lp_mp_ev: f64,
    rabi_mp_up_ev: f64,
    branches: [PolaritonBranch; 3],
}

#[derive(Serialize)]
struct ErrorRecord {
    device: String,
    exit_code: i32,
    error: String,
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let (devices, settings) = cfg.resolve()?;
    let grid = uniform_grid(settings.spectrum_start, settings.spectrum_end, settings.spectrum_points);
    let mut out = Output::new(&cfg.output_dir)?;
    for d in &devices {
        let spectrum = reflectance(&d.spectral, &grid)?;
        let path = out.path(&format!("{}_spectrum.csv", d.name));
        io::write_spectrum(&path, &spectrum)?;
        let (a, b) = rabi_splittings(&d.spectral);
        let path = out.path(&format!("{}_branches.toml", d.name));
        io::write_record(
            &path,
            &BranchReport {
                device: &d.name,
                rabi_lp_mp_ev: a,
                rabi_mp_up_ev: b,
                branches: eigensystem(&d.spectral),
            },
        )?;
    }
    out.provenance(cfg, "spectrum", &settings, &devices)?;
    Ok(out.outcome)
}

#[derive(Serialize)]
struct FitRecord {
    source: String,
    converged: bool,
    delta1_ev: f64,
    delta2_ev: f64,
    delta_c_ev: f64,
    g_co_ev: f64,
    i0: f64,
    sigma_ev: f64,
    residual: f64,
    iterations: u64,
}

/// Fits Δc, g_co, I₀, σ with the Davydov levels fixed, starting from the
/// resolved device's spectral parameters. A non-converged fit still writes
/// its best parameters.
pub fn run_fit(cfg: &RunConfig, spectrum_file: &Path) -> Result<Outcome> {
    let (devices, settings) = cfg.resolve()?;
    let init = devices
        .first()
        .ok_or_else(|| Error::Config("fit needs a device for the initial guess".into()))?
        .spectral;
    let measured = io::read_spectrum(spectrum_file)?;
    let result = fit_reflectance(&measured, (DELTA1, DELTA2), &init);
    let (params, residual, iterations, converged) = match &result {
        Ok(f) => (f.params, f.residual, f.iterations, true),
        Err(Error::Convergence {
            iterations,
            residual,
            best,
        }) => (**best, *residual, *iterations as u64, false),
        Err(_) => return result.map(|_| Outcome::default()),
    };
    let mut out = Output::new(&cfg.output_dir)?;
    let path = out.path("fit.toml");
    io::write_record(
        &path,
        &FitRecord {
            source: spectrum_file.display().to_string(),
            converged,
            delta1_ev: params.delta1,
            delta2_ev: params.delta2,
            delta_c_ev: params.delta_c,
            g_co_ev: params.g_co,
            i0: params.i0,
            sigma_ev: params.sigma,
            residual,
            iterations,
        },
    )?;
    out.provenance(cfg, "fit", &settings, &devices)?;
    result?;
    Ok(out.outcome)
}

/// Charging run per device. A failing device leaves an error record (and,
/// for integration failures, the partial trajectory) and the run goes on.
pub fn run_charge(cfg: &RunConfig) -> Result<Outcome> {
    let (devices, settings) = cfg.resolve()?;
    let mut out = Output::new(&cfg.output_dir)?;
    for d in &devices {
        if let Err(e) = charge_one(&mut out, d, &settings) {
            if let Error::Integration { partial, .. } = &e {
                let path = out.path(&format!("{}_trajectory.csv", d.name));
                io::write_trajectory(&path, partial)?;
            }
            let code = e.exit_code();
            out.outcome.warnings.push(format!("{}: {e}", d.name));
            let path = out.path(&format!("{}_error.toml", d.name));
            io::write_record(
                &path,
                &ErrorRecord {
                    device: d.name.clone(),
                    exit_code: code,
                    error: e.to_string(),
                },
            )?;
            out.outcome.fail(code);
        }
    }
    out.provenance(cfg, "charge", &settings, &devices)?;
    Ok(out.outcome)
}

fn charge_one(out: &mut Output<'_>, d: &DeviceSpec, settings: &RunSettings) -> Result<()> {
    let traj = simulate_charging(&d.dynamics, &settings.window, &settings.integration)?;
    let path = out.path(&format!("{}_trajectory.csv", d.name));
    io::write_trajectory(&path, &traj)?;
    let path = out.path(&format!("{}_delta_r.csv", d.name));
    io::write_delta_r(&path, &delta_r_over_r(&traj, &settings.irf)?)?;
    let report = charging_report(&traj, &d.dynamics)?;
    let path = out.path(&format!("{}_report.csv", d.name));
    io::write_table(&path, io::REPORT_HEADER, [io::report_row(&report)])
}

/// Catalog absorber counts plus 20 log-spaced points strictly between the
/// smallest and largest of them, ascending.
pub fn default_sweep_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = DeviceCatalog::builtin()
        .entries()
        .iter()
        .map(|d| d.dynamics.n_molecules)
        .collect();
    grid.sort_by(f64::total_cmp);
    let (lo, hi) = (grid[0].ln(), grid[grid.len() - 1].ln());
    grid.extend((1..=20).map(|k| (lo + (hi - lo) * k as f64 / 21.0).exp()));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub device: String,
    pub points: usize,
    pub failed_points: usize,
    pub tau_strictly_decreasing: bool,
    pub e_max_strictly_increasing: bool,
    pub p_max_strictly_increasing: bool,
}

/// Monotonicity of the successful points, in the order given.
pub fn summarize(device: &str, reports: &[ChargingReport], failed: usize) -> SweepSummary {
    let strictly = |f: &dyn Fn(&ChargingReport) -> f64, sign: f64| {
        reports.windows(2).all(|w| sign * (f(&w[1]) - f(&w[0])) > 0.0)
    };
    SweepSummary {
        device: device.to_string(),
        points: reports.len() + failed,
        failed_points: failed,
        tau_strictly_decreasing: strictly(&|r| r.tau, -1.0),
        e_max_strictly_increasing: strictly(&|r| r.e_max, 1.0),
        p_max_strictly_increasing: strictly(&|r| r.p_max, 1.0),
    }
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let (base, settings) = cfg.sweep_base()?;
    let grid = settings.n_values.clone().unwrap_or_else(default_sweep_grid);
    let points = scaling_sweep(&base.dynamics, &grid, &settings.window, &settings.integration)?;
    let mut out = Output::new(&cfg.output_dir)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for pt in points {
        match pt.report {
            Ok(r) => reports.push(r),
            Err(e) => {
                out.outcome.warnings.push(format!("N = {}: {e}", pt.n_molecules));
                out.outcome.fail(e.exit_code());
                failures.push(vec![format!("{}", pt.n_molecules), e.to_string()]);
            }
        }
    }
    let path = out.path("sweep.csv");
    io::write_table(&path, io::REPORT_HEADER, reports.iter().map(io::report_row))?;
    if !failures.is_empty() {
        let path = out.path("sweep_failures.csv");
        io::write_table(&path, &["n_molecules", "error"], failures.iter().cloned())?;
    }
    let summary = summarize(&base.name, &reports, failures.len());
    let path = out.path("sweep_summary.toml");
    io::write_record(&path, &summary)?;
    for (flag, what) in [
        (summary.tau_strictly_decreasing, "tau is not strictly decreasing in N"),
        (summary.p_max_strictly_increasing, "P_max is not strictly increasing in N"),
    ] {
        if !flag {
            out.outcome.warnings.push(what.into());
        }
    }
    out.provenance(cfg, "sweep", &settings, std::slice::from_ref(&base))?;
    Ok(out.outcome)
}

/// Runs the full check suite. Any failed check gives exit status 3; the
/// report is written either way.
pub fn run_validate(cfg: &RunConfig) -> Result<Outcome> {
    let (devices, settings) = cfg.resolve()?;
    let results = validate::run_all(&settings.integration);
    let mut out = Output::new(&cfg.output_dir)?;
    let path = out.path("validation.csv");
    io::write_table(&path, &["check", "deviation", "tolerance", "passed"], results.iter().map(check_row))?;
    for r in results.iter().filter(|r| !r.passed) {
        out.outcome.warnings.push(format!("check failed: {} (deviation {})", r.name, r.deviation));
        out.outcome.fail(VALIDATION_FAILURE);
    }
    out.provenance(cfg, "validate", &settings, &devices)?;
    Ok(out.outcome)
}

fn check_row(r: &CheckResult) -> Vec<String> {
    vec![r.name.clone(), format!("{}", r.deviation), format!("{}", r.tolerance), r.passed.to_string()]
}

#[derive(Default)]
struct DeviceFiles {
    cavity: Option<PathBuf>,
    control: Option<PathBuf>,
    eqe: Option<PathBuf>,
}

/// Groups input files by device from their names: `<device>_cavity.csv`,
/// `<device>_control.csv` and optional `<device>_eqe.csv`. A bare
/// `<device>.csv` counts as the cavity curve.
fn pair_files(files: &[PathBuf]) -> Result<BTreeMap<String, DeviceFiles>> {
    let mut map: BTreeMap<String, DeviceFiles> = BTreeMap::new();
    for f in files {
        let stem = f
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidInput(format!("cannot name a device from {}", f.display())))?;
        let (device, role) = match stem.rsplit_once('_') {
            Some((d, r @ ("cavity" | "control" | "eqe"))) => (d, r),
            _ => (stem, "cavity"),
        };
        let entry = map.entry(device.to_string()).or_default();
        let slot = match role {
            "cavity" => &mut entry.cavity,
            "control" => &mut entry.control,
            _ => &mut entry.eqe,
        };
        if slot.replace(f.clone()).is_some() {
            return Err(Error::InvalidInput(format!("two {role} files for device {device}")));
        }
    }
    Ok(map)
}

#[derive(Serialize)]
struct ConventionRecord {
    device: String,
    cavity: Option<String>,
    control: Option<String>,
}

/// Maximum power points and cavity/control power ratios. Devices without a
/// control curve get an empty ratio and a warning.
pub fn run_electrical(cfg: &RunConfig, files: &[PathBuf]) -> Result<Outcome> {
    if files.is_empty() {
        return Err(Error::InvalidInput("electrical needs at least one I-V file".into()));
    }
    let (_, settings) = cfg.resolve()?;
    let groups = pair_files(files)?;
    let mut out = Output::new(&cfg.output_dir)?;
    let mut rows = Vec::new();
    let mut conventions = Vec::new();
    for (device, g) in &groups {
        let cavity = g.cavity.as_deref().map(|p| io::read_iv(p, None)).transpose()?;
        let control = g.control.as_deref().map(|p| io::read_iv(p, None)).transpose()?;
        conventions.push(ConventionRecord {
            device: device.clone(),
            cavity: cavity.as_ref().map(|c| c.convention.to_string()),
            control: control.as_ref().map(|c| c.convention.to_string()),
        });
        match (&cavity, &control) {
            (Some(c), Some(n)) => {
                let mpp = max_power_point(c)?;
                let ratio = power_ratio(c, n)?;
                rows.push(vec![device.clone(), format!("{}", mpp.voltage), format!("{}", mpp.power), format!("{ratio}")]);
            }
            (Some(c), None) => {
                out.outcome.warnings.push(format!("{device}: no control curve; ratio left empty"));
                let mpp = max_power_point(c)?;
                rows.push(vec![device.clone(), format!("{}", mpp.voltage), format!("{}", mpp.power), String::new()]);
            }
            (None, _) if g.control.is_some() => {
                out.outcome.warnings.push(format!("{device}: control curve without a cavity curve"));
            }
            (None, _) => {}
        }
        if let Some(p) = &g.eqe {
            let points = io::read_eqe(p)?;
            let path = out.path(&format!("{device}_eqe.csv"));
            io::write_table(
                &path,
                &["wavelength_nm", "photon_energy_ev", "eqe"],
                points.iter().map(|e: &EqePoint| vec![format!("{}", e.wavelength), format!("{}", e.photon_energy), format!("{}", e.eqe)]),
            )?;
        }
    }
    let path = out.path("electrical.csv");
    io::write_table(&path, &["device", "v_mpp", "p_mpp", "ratio"], rows)?;
    let path = out.path("sign_conventions.toml");
    io::write_record(&path, &BTreeMap::from([("curve", conventions)]))?;
    out.provenance(cfg, "electrical", &settings, &[])?;
    Ok(out.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_28_ascending_points() {
        let g = default_sweep_grid();
        assert_eq!(g.len(), 28);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pairing_by_file_name() {
        let files: Vec<PathBuf> = ["D1_cavity.csv", "D1_control.csv", "D4_cavity.csv", "D2.csv", "D2_eqe.csv"]
            .iter()
            .map(PathBuf::from)
            .collect();
        let m = pair_files(&files).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m["D1"].control.is_some());
        assert!(m["D4"].control.is_none());
        assert!(m["D2"].cavity.is_some() && m["D2"].eqe.is_some());
        assert!(pair_files(&[PathBuf::from("a.csv"), PathBuf::from("a_cavity.csv")]).is_err());
    }

    #[test]
    fn summary_flags() {
        let r = |tau, e| ChargingReport { e_max: e, tau, p_max: e / tau, n_molecules: 1.0 };
        let s = summarize("x", &[r(2.0, 1.0), r(1.0, 2.0)], 0);
        assert!(s.tau_strictly_decreasing && s.e_max_strictly_increasing && s.p_max_strictly_increasing);
        let s = summarize("x", &[r(1.0, 1.0), r(1.0, 2.0)], 1);
        assert!(!s.tau_strictly_decreasing && s.points == 3);
    }
}
