use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qbattery(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbattery"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = qbattery(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn numbers(path: &Path) -> Vec<Vec<f64>> {
    rows(path)
        .into_iter()
        .map(|r| r.iter().map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn provenance(dir: &Path) -> toml::Table {
    fs::read_to_string(dir.join("provenance.toml")).unwrap().parse().unwrap()
}

fn device_value(dir: &Path, section: &str, key: &str) -> f64 {
    provenance(dir)["devices"][0][section][key].as_float().unwrap()
}

#[test]
fn spectrum_for_every_device_has_ordered_branches() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["spectrum", "--device", "all", "--out", out]);
    for k in 1..=8 {
        let name = format!("D{k}");
        let spectrum = numbers(&dir.path().join(format!("{name}_spectrum.csv")));
        assert_eq!(spectrum.len(), 500);
        assert_eq!(spectrum[0][0], 1.4);
        assert_eq!(spectrum[499][0], 2.4);
        let report: toml::Table = fs::read_to_string(dir.path().join(format!("{name}_branches.toml")))
            .unwrap()
            .parse()
            .unwrap();
        let e: Vec<f64> = report["branches"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["energy"].as_float().unwrap())
            .collect();
        assert!(e[0] < e[1] && e[1] < e[2], "{name}: {e:?}");
    }
}

#[test]
fn zero_coupling_gives_single_dip_at_cavity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // narrow lines so the bare cavity and the two Davydov lines stay apart
    run_ok(&["spectrum", "--device", "D5", "--set", "g_co=0", "--set", "spectral.sigma_ev=0.02", "--out", out]);
    let s = numbers(&dir.path().join("D5_spectrum.csv"));
    let minima: Vec<f64> = (1..s.len() - 1)
        .filter(|&i| s[i][1] < s[i - 1][1] && s[i][1] < s[i + 1][1])
        .map(|i| s[i][0])
        .collect();
    let delta_c = device_value(dir.path(), "spectral", "delta_c");
    assert_eq!(minima.len(), 1, "{minima:?}");
    assert!((minima[0] - delta_c).abs() < 2.5e-3);
}

#[test]
fn charge_report_is_consistent_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        run_ok(&["charge", "--device", "D5", "--out", d.path().to_str().unwrap()]);
    }
    for f in ["D5_trajectory.csv", "D5_delta_r.csv", "D5_report.csv", "provenance.toml"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r = &numbers(&a.path().join("D5_report.csv"))[0];
    assert_eq!(r[3], r[1] / r[2]);
    let header = fs::read_to_string(a.path().join("D5_trajectory.csv")).unwrap();
    assert!(header.starts_with("time_ps,re_a,im_a,n_ph,pop_s0,pop_s1a,pop_s1b,pop_t,energy_ev\n"));
}

#[test]
fn charge_without_drive_records_undefined_tau() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbattery(&["charge", "--device", "D5", "--set", "r=0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let record = fs::read_to_string(dir.path().join("D5_error.toml")).unwrap();
    assert!(record.contains("charging time undefined"));
    let traj = numbers(&dir.path().join("D5_trajectory.csv"));
    assert!(traj.iter().all(|r| r[8] == 0.0));
}

#[test]
fn catalog_rates_reach_the_run() {
    for (device, kappa) in [("D1", 25.0), ("D8", 40.0)] {
        let dir = tempfile::tempdir().unwrap();
        run_ok(&["charge", "--device", device, "--set", "window.t_end_ps=0.2", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(device_value(dir.path(), "dynamics", "kappa"), kappa);
    }
}

#[test]
fn single_point_sweep_matches_charge() {
    let charge = tempfile::tempdir().unwrap();
    let sweep = tempfile::tempdir().unwrap();
    run_ok(&["charge", "--device", "D5", "--out", charge.path().to_str().unwrap()]);
    run_ok(&["sweep", "--device", "D5", "--set", "sweep.n_values=5e10", "--out", sweep.path().to_str().unwrap()]);
    assert_eq!(rows(&charge.path().join("D5_report.csv")), rows(&sweep.path().join("sweep.csv")));
}

#[test]
fn idealized_sweep_uses_averaged_device() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["sweep", "--idealized", "--set", "sweep.n_values=2e10,4e10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(device_value(dir.path(), "dynamics", "delta_c"), 1.87);
    assert_eq!(device_value(dir.path(), "dynamics", "kappa"), 33.0);
    assert_eq!(numbers(&dir.path().join("sweep.csv")).len(), 2);
    assert!(dir.path().join("sweep_summary.toml").exists());
}

#[test]
fn fit_recovers_self_generated_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["spectrum", "--device", "D3", "--out", out]);
    let spectrum = dir.path().join("D3_spectrum.csv");
    let fit_dir = dir.path().join("fit");
    run_ok(&["fit", spectrum.to_str().unwrap(), "--out", fit_dir.to_str().unwrap()]);
    let rec: toml::Table = fs::read_to_string(fit_dir.join("fit.toml")).unwrap().parse().unwrap();
    for (k, want) in [("delta_c_ev", 1.86), ("g_co_ev", 0.100), ("i0", 0.012), ("sigma_ev", 0.06)] {
        let got = rec[k].as_float().unwrap();
        assert!((got - want).abs() < 0.01 * want, "{k}: {got}");
    }
}

#[test]
fn empty_spectrum_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.csv");
    fs::write(&file, "").unwrap();
    let out = qbattery(&["fit", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty.csv:1"));
}

#[test]
fn bad_device_and_bad_key_exit_with_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbattery(&["spectrum", "--device", "D9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D1, D2"));
    let out = qbattery(&["charge", "--set", "kapa=3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("o");
    fs::write(
        &cfg,
        format!("device = \"D2\"\noutput_dir = {:?}\n[spectrum]\npoints = 11\n", out_dir.to_str().unwrap()),
    )
    .unwrap();
    run_ok(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(numbers(&out_dir.join("D2_spectrum.csv")).len(), 11);
}

fn linear_iv(path: &Path, isc: f64) {
    let mut text = String::from("voltage_v,current_a\n");
    for k in 0..=60 {
        let v = k as f64 * 0.01;
        text.push_str(&format!("{v},{}\n", -isc * (1.0 - v / 0.6)));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn electrical_ratios_and_unpaired_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, factor) in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0].iter().enumerate() {
        for (role, isc) in [("cavity", 1e-3 * factor), ("control", 1e-3)] {
            let p = dir.path().join(format!("E{k}_{role}.csv"));
            linear_iv(&p, isc);
            files.push(p);
        }
    }
    let lone = dir.path().join("D4_cavity.csv");
    linear_iv(&lone, 2e-3);
    files.push(lone);
    let out_dir = dir.path().join("out");
    let mut args = vec!["electrical", "--out", out_dir.to_str().unwrap()];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let out = run_ok(&args);
    assert!(String::from_utf8_lossy(&out.stderr).contains("D4: no control curve"));

    let table = rows(&out_dir.join("electrical.csv"));
    let d4 = table.iter().find(|r| r[0] == "D4").unwrap();
    assert_eq!(d4[3], "");
    let ratios: Vec<f64> = table.iter().filter(|r| r[0].starts_with('E')).map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(ratios[0], 1.0);
    assert!((ratios[4] - 3.0).abs() < 1e-12);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    // mid-grid samples of the linear fixture: MPP at V_oc / 2
    assert!(table.iter().all(|r| (r[1].parse::<f64>().unwrap() - 0.3).abs() < 0.01));
    let conv = fs::read_to_string(out_dir.join("sign_conventions.toml")).unwrap();
    assert!(conv.contains("\"load\""));
}

#[test]
fn validate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbattery(&["validate", "--out", dir.path().to_str().unwrap()]);
    let table = rows(&dir.path().join("validation.csv"));
    let names: Vec<&str> = table.iter().map(|r| r[0].as_str()).collect();
    for want in ["rate_equation_g0", "driven_cavity_constant", "driven_cavity_pulse"] {
        assert!(names.contains(&want), "{names:?}");
    }
    let all_passed = table.iter().all(|r| r[3] == "true");
    assert_eq!(out.status.code(), Some(if all_passed { 0 } else { 3 }));
    assert!(all_passed, "{table:?}");
}
