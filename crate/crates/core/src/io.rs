//! CSV ingestion and emission, plus the provenance record written next to
//! every run's outputs.
//!
//! Numbers are written with Rust's `Display` for `f64`, which is the shortest
//! decimal that parses back to the same bits, so reruns are byte-identical.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::device::DeviceSpec;
use crate::dynamics::Trajectory;
use crate::electrical::{EqePoint, IvCurve};
use crate::error::{Error, Result};
use crate::observables::{energy_curve, ChargingReport};
use crate::polariton::Spectrum;

pub const SPECTRUM_HEADER: &[&str] = &["energy_ev", "reflectance"];
pub const DELTA_R_HEADER: &[&str] = &["time_ps", "delta_r_over_r"];
pub const IV_HEADER: &[&str] = &["voltage_v", "current_a"];
pub const EQE_HEADER: &[&str] = &["wavelength_nm", "photocurrent_a", "incident_power_w"];
pub const TRAJECTORY_HEADER: &[&str] = &[
    "time_ps", "re_a", "im_a", "n_ph", "pop_s0", "pop_s1a", "pop_s1b", "pop_t", "energy_ev",
];
pub const REPORT_HEADER: &[&str] = &["n_molecules", "e_max_ev", "tau_ps", "p_max_ev_per_ps"];

/// Numeric table with a mandatory header row.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Reads a purely numeric CSV whose header must equal `header`. Errors carry
/// the 1-based line number.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(0, format!("{other:?}")),
        })?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for record in r.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = record.iter().collect();
            if got != header {
                return Err(parse_err(line, format!("expected header `{}`, found `{}`", header.join(","), got.join(","))));
            }
            seen_header = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(line, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if !seen_header {
        return Err(parse_err(1, "file is empty".into()));
    }
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    Ok(rows)
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    write_table(path, SPECTRUM_HEADER, s.points().iter().map(|&(x, y)| vec![num(x), num(y)]))
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let rows = read_table(path, SPECTRUM_HEADER)?;
    Spectrum::new(rows.into_iter().map(|r| (r[0], r[1])).collect()).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn write_delta_r(path: &Path, s: &Spectrum) -> Result<()> {
    write_table(path, DELTA_R_HEADER, s.points().iter().map(|&(x, y)| vec![num(x), num(y)]))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let energy = energy_curve(traj);
    write_table(
        path,
        TRAJECTORY_HEADER,
        (0..traj.len()).map(|i| {
            let a = traj.field(i);
            let pops = traj.populations(i);
            vec![
                num(traj.times[i]),
                num(a.re),
                num(a.im),
                num(traj.photon_number(i)),
                num(pops[0]),
                num(pops[1]),
                num(pops[2]),
                num(pops[3]),
                num(energy[i]),
            ]
        }),
    )
}

pub fn report_row(r: &ChargingReport) -> Vec<String> {
    vec![num(r.n_molecules), num(r.e_max), num(r.tau), num(r.p_max)]
}

/// I-V curve; `illumination` feeds the sign-convention detection.
pub fn read_iv(path: &Path, illumination: Option<f64>) -> Result<IvCurve> {
    let rows = read_table(path, IV_HEADER)?;
    IvCurve::new(rows.into_iter().map(|r| (r[0], r[1])).collect(), illumination).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn read_eqe(path: &Path) -> Result<Vec<EqePoint>> {
    let rows = read_table(path, EQE_HEADER)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            EqePoint::new(r[0], r[1], r[2]).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

/// What produced a set of outputs. Contains no timestamps so that reruns are
/// byte-identical.
#[derive(Debug, Serialize)]
pub struct Provenance<'a, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub settings: &'a S,
    pub tolerances: Tolerances,
    pub devices: &'a [DeviceSpec],
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

/// Structured text record (TOML).
pub fn write_record<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let text = toml::to_string_pretty(record).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = Spectrum::new(vec![(1.4, 0.1 + 0.2), (1.7, 1.0 / 3.0), (2.0, 1e-300)]).unwrap();
        write_spectrum(&path, &s).unwrap();
        assert_eq!(read_spectrum(&path).unwrap(), s);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("energy_ev,reflectance\n1.4,0.30000000000000004\n"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "energy_ev,reflectance\n1.4,0.9\n1.5,x\n").unwrap();
        match read_spectrum(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "").unwrap();
        match read_spectrum(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 1);
                assert!(message.contains("empty"));
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "e,r\n1,2\n").unwrap();
        assert!(matches!(read_spectrum(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn iv_and_eqe_readers() {
        let dir = tempfile::tempdir().unwrap();
        let iv = dir.path().join("iv.csv");
        std::fs::write(&iv, "voltage_v,current_a\n0,1\n0.5,0.5\n1,0\n").unwrap();
        assert_eq!(read_iv(&iv, Some(1.0)).unwrap().points().len(), 3);
        let eqe = dir.path().join("eqe.csv");
        std::fs::write(&eqe, "wavelength_nm,photocurrent_a,incident_power_w\n620,1e-6,1e-5\n").unwrap();
        assert_eq!(read_eqe(&eqe).unwrap().len(), 1);
    }
}
