//! Run configuration: flat dotted keys from a TOML file and `--set` overrides.
//!
//! Parameter keys (units in the suffix):
//!
//! ```text
//! stack.pure_cupc_nm  stack.mixed_nm  stack.cupc_fraction  stack.c60_nm
//! spectral.delta1_ev  spectral.delta2_ev  spectral.delta_c_ev  spectral.g_co_ev
//! spectral.i0  spectral.sigma_ev
//! dynamics.delta1_ev  dynamics.delta2_ev  dynamics.delta_t_ev  dynamics.delta_c_ev
//! dynamics.nu_ev  dynamics.g_ev  dynamics.n_molecules  dynamics.kappa_per_ps
//! dynamics.gamma_minus_per_ps  dynamics.gamma_t_minus_per_ps  dynamics.gamma_z_per_ps
//! dynamics.gamma_isc_per_ps  dynamics.pulse.r  dynamics.pulse.sigma_t_ps  dynamics.pulse.t0_ps
//! window.t_start_ps  window.t_end_ps  window.dt_ps
//! integrator.rel_tol  integrator.abs_tol  irf.fwhm_ps
//! spectrum.start_ev  spectrum.end_ev  spectrum.points
//! sweep.idealized  sweep.n_values
//! ```
//!
//! The short names `g_co`, `r`, `kappa`, `g`, `n`, `delta_c`, `delta1`, `delta2`
//! are accepted as aliases; `delta*` aliases set both the spectral and the
//! dynamics value. Unless `dynamics.nu_ev` is set explicitly, the drive is
//! retuned to the lower polariton after overrides are applied.
//!
//! Top-level keys besides parameters: `device` (a catalog name, `all`, or an
//! inline table with `name`, optional `base` and parameter keys),
//! `output_dir`, `seed`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::catalog::{idealized_device, DeviceCatalog};
use crate::device::DeviceSpec;
use crate::dynamics::IntegrationOptions;
use crate::error::{Error, Result};
use crate::observables::{ChargeWindow, IrfParams};
use crate::polariton::{DEFAULT_GRID_END_EV, DEFAULT_GRID_POINTS, DEFAULT_GRID_START_EV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Spectrum,
    Fit,
    Charge,
    Sweep,
    Validate,
    Electrical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceSelection {
    Named(String),
    All,
    Inline {
        name: String,
        base: Option<String>,
        params: Vec<(String, Value)>,
    },
}

/// Parameter value as read from a config file or the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Bool(bool),
    List(Vec<f64>),
}

impl Value {
    /// Command-line form: number, `true`/`false`, or comma-separated numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            _ => {}
        }
        if let Ok(x) = t.parse::<f64>() {
            return Ok(Value::Number(x));
        }
        t.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::List)
            .map_err(|_| Error::Config(format!("cannot parse value `{text}`")))
    }

    fn number(&self, key: &str) -> Result<f64> {
        match self {
            Value::Number(x) => Ok(*x),
            _ => Err(Error::Config(format!("`{key}` expects a number"))),
        }
    }

    fn from_toml(key: &str, v: &toml::Value) -> Result<Self> {
        match v {
            toml::Value::Float(x) => Ok(Value::Number(*x)),
            toml::Value::Integer(i) => Ok(Value::Number(*i as f64)),
            toml::Value::Boolean(b) => Ok(Value::Bool(*b)),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(n) => Ok(*n as f64),
                    _ => Err(Error::Config(format!("`{key}` must be a list of numbers"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Value::List),
            _ => Err(Error::Config(format!("unsupported value for `{key}`"))),
        }
    }
}

/// Numerical settings shared by the commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub window: ChargeWindow,
    pub integration: IntegrationOptions,
    pub irf: IrfParams,
    pub spectrum_start: f64,
    pub spectrum_end: f64,
    pub spectrum_points: usize,
    pub idealized: bool,
    pub n_values: Option<Vec<f64>>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            window: ChargeWindow::default(),
            integration: IntegrationOptions::default(),
            irf: IrfParams::default(),
            spectrum_start: DEFAULT_GRID_START_EV,
            spectrum_end: DEFAULT_GRID_END_EV,
            spectrum_points: DEFAULT_GRID_POINTS,
            idealized: false,
            n_values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub device: DeviceSelection,
    /// Applied in order after the config file's own parameters.
    pub overrides: Vec<(String, Value)>,
    pub output_dir: PathBuf,
    /// Reserved; every computation is deterministic.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            device: DeviceSelection::Named("D5".into()),
            overrides: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }

    /// Reads a config file. Keys other than `device`, `output_dir`, `seed` and
    /// `command` become overrides.
    pub fn from_file(command: CommandKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(command, &text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(command: CommandKind, text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg = Self::new(command);
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut inline: Option<InlineParts> = None;
        for (key, value) in flat {
            match key.as_str() {
                "command" => {}
                "device" => match value.as_str() {
                    Some(name) => cfg.device = selection(name),
                    None => return Err(Error::Config("`device` must be a name or a table".into())),
                },
                "output_dir" => {
                    cfg.output_dir = PathBuf::from(
                        value.as_str().ok_or_else(|| Error::Config("`output_dir` must be a string".into()))?,
                    )
                }
                "seed" => {
                    cfg.seed = value
                        .as_integer()
                        .filter(|s| *s >= 0)
                        .ok_or_else(|| Error::Config("`seed` must be a non-negative integer".into()))?
                        as u64
                }
                k if k.starts_with("device.") => {
                    let entry = inline.get_or_insert((None, None, Vec::new()));
                    match &k["device.".len()..] {
                        "name" => entry.0 = value.as_str().map(str::to_string),
                        "base" => entry.1 = value.as_str().map(str::to_string),
                        param => entry.2.push((param.to_string(), Value::from_toml(param, &value)?)),
                    }
                }
                k => cfg.overrides.push((k.to_string(), Value::from_toml(k, &value)?)),
            }
        }
        if let Some((name, base, params)) = inline {
            let name = name.ok_or_else(|| Error::Config("inline device needs `device.name`".into()))?;
            cfg.device = DeviceSelection::Inline { name, base, params };
        }
        Ok(cfg)
    }

    /// Adds a `key=value` override from the command line.
    pub fn push_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.overrides.push((k.trim().to_string(), Value::parse(v)?));
        Ok(())
    }

    /// Devices selected by the configuration with every override applied, plus
    /// the numerical settings.
    pub fn resolve(&self) -> Result<(Vec<DeviceSpec>, RunSettings)> {
        let catalog = DeviceCatalog::builtin();
        let mut settings = RunSettings::default();
        let mut devices = match &self.device {
            DeviceSelection::Named(name) => vec![catalog.get(name)?.clone()],
            DeviceSelection::All => catalog.entries().to_vec(),
            DeviceSelection::Inline { name, base, params } => {
                let mut spec = match base {
                    Some(b) => catalog.get(b)?.clone(),
                    None => blank_device(),
                };
                spec.name = name.clone();
                let explicit_nu = apply_all(&mut spec, &mut settings, params)?;
                if base.is_none() {
                    require_complete(&spec)?;
                }
                if !explicit_nu {
                    spec.dynamics = spec.dynamics.tuned_to_lower_polariton();
                }
                vec![spec]
            }
        };
        for spec in &mut devices {
            let explicit_nu = apply_all(spec, &mut settings, &self.overrides)?;
            if !explicit_nu && !self.overrides.is_empty() {
                spec.dynamics = spec.dynamics.tuned_to_lower_polariton();
            }
            spec.validate()?;
        }
        if devices.is_empty() {
            // overrides touching only settings still need validating
            apply_all(&mut blank_device(), &mut settings, &self.overrides)?;
        }
        Ok((devices, settings))
    }

    /// Base dynamics for sweeps: the idealized device if requested, otherwise
    /// the (single) resolved device.
    pub fn sweep_base(&self) -> Result<(DeviceSpec, RunSettings)> {
        let (devices, settings) = self.resolve()?;
        let mut spec = devices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Config("sweep needs a device".into()))?;
        if settings.idealized {
            spec.name = "idealized".into();
            spec.dynamics = idealized_device(spec.dynamics.n_molecules);
        }
        Ok((spec, settings))
    }
}

/// name, base, parameters
type InlineParts = (Option<String>, Option<String>, Vec<(String, Value)>);

fn selection(name: &str) -> DeviceSelection {
    if name.eq_ignore_ascii_case("all") {
        DeviceSelection::All
    } else {
        DeviceSelection::Named(name.to_string())
    }
}

impl DeviceSelection {
    pub fn from_name(name: &str) -> Self {
        selection(name)
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Every canonical parameter key, in documentation order.
pub const PARAMETER_KEYS: &[&str] = &[
    "stack.pure_cupc_nm",
    "stack.mixed_nm",
    "stack.cupc_fraction",
    "stack.c60_nm",
    "spectral.delta1_ev",
    "spectral.delta2_ev",
    "spectral.delta_c_ev",
    "spectral.g_co_ev",
    "spectral.i0",
    "spectral.sigma_ev",
    "dynamics.delta1_ev",
    "dynamics.delta2_ev",
    "dynamics.delta_t_ev",
    "dynamics.delta_c_ev",
    "dynamics.nu_ev",
    "dynamics.g_ev",
    "dynamics.n_molecules",
    "dynamics.kappa_per_ps",
    "dynamics.gamma_minus_per_ps",
    "dynamics.gamma_t_minus_per_ps",
    "dynamics.gamma_z_per_ps",
    "dynamics.gamma_isc_per_ps",
    "dynamics.pulse.r",
    "dynamics.pulse.sigma_t_ps",
    "dynamics.pulse.t0_ps",
    "window.t_start_ps",
    "window.t_end_ps",
    "window.dt_ps",
    "integrator.rel_tol",
    "integrator.abs_tol",
    "irf.fwhm_ps",
    "spectrum.start_ev",
    "spectrum.end_ev",
    "spectrum.points",
    "sweep.idealized",
    "sweep.n_values",
];

/// Keys whose values must come from an inline device without a base.
const DEVICE_KEYS: std::ops::Range<usize> = 0..25;

fn expand(key: &str) -> Result<Vec<&'static str>> {
    let aliases: &[&'static str] = match key {
        "g_co" => &["spectral.g_co_ev"],
        "r" => &["dynamics.pulse.r"],
        "kappa" => &["dynamics.kappa_per_ps"],
        "g" => &["dynamics.g_ev"],
        "n" | "n_molecules" => &["dynamics.n_molecules"],
        "nu" => &["dynamics.nu_ev"],
        "delta_c" => &["spectral.delta_c_ev", "dynamics.delta_c_ev"],
        "delta1" => &["spectral.delta1_ev", "dynamics.delta1_ev"],
        "delta2" => &["spectral.delta2_ev", "dynamics.delta2_ev"],
        _ => &[],
    };
    if !aliases.is_empty() {
        return Ok(aliases.to_vec());
    }
    PARAMETER_KEYS
        .iter()
        .find(|k| **k == key)
        .map(|k| vec![*k])
        .ok_or_else(|| Error::Config(format!("unknown parameter `{key}`")))
}

/// Returns whether ν was set explicitly.
fn apply_all(spec: &mut DeviceSpec, settings: &mut RunSettings, params: &[(String, Value)]) -> Result<bool> {
    let mut explicit_nu = false;
    for (key, value) in params {
        for canonical in expand(key)? {
            explicit_nu |= canonical == "dynamics.nu_ev";
            set(spec, settings, canonical, value)?;
        }
    }
    Ok(explicit_nu)
}

fn set(spec: &mut DeviceSpec, s: &mut RunSettings, key: &str, value: &Value) -> Result<()> {
    if key == "sweep.idealized" {
        return match value {
            Value::Bool(b) => {
                s.idealized = *b;
                Ok(())
            }
            _ => Err(Error::Config("`sweep.idealized` expects true or false".into())),
        };
    }
    if key == "sweep.n_values" {
        s.n_values = Some(match value {
            Value::List(v) => v.clone(),
            Value::Number(x) => vec![*x],
            Value::Bool(_) => return Err(Error::Config("`sweep.n_values` expects numbers".into())),
        });
        return Ok(());
    }
    let x = value.number(key)?;
    let st = &mut spec.stack;
    let sp = &mut spec.spectral;
    let d = &mut spec.dynamics;
    let slot: &mut f64 = match key {
        "stack.pure_cupc_nm" => &mut st.pure_cupc_thickness,
        "stack.mixed_nm" => &mut st.mixed_layer_thickness,
        "stack.cupc_fraction" => &mut st.cupc_volume_fraction,
        "stack.c60_nm" => &mut st.c60_thickness,
        "spectral.delta1_ev" => &mut sp.delta1,
        "spectral.delta2_ev" => &mut sp.delta2,
        "spectral.delta_c_ev" => &mut sp.delta_c,
        "spectral.g_co_ev" => &mut sp.g_co,
        "spectral.i0" => &mut sp.i0,
        "spectral.sigma_ev" => &mut sp.sigma,
        "dynamics.delta1_ev" => &mut d.delta1,
        "dynamics.delta2_ev" => &mut d.delta2,
        "dynamics.delta_t_ev" => &mut d.delta_t,
        "dynamics.delta_c_ev" => &mut d.delta_c,
        "dynamics.nu_ev" => &mut d.nu,
        "dynamics.g_ev" => &mut d.g,
        "dynamics.n_molecules" => &mut d.n_molecules,
        "dynamics.kappa_per_ps" => &mut d.kappa,
        "dynamics.gamma_minus_per_ps" => &mut d.gamma_minus,
        "dynamics.gamma_t_minus_per_ps" => &mut d.gamma_t_minus,
        "dynamics.gamma_z_per_ps" => &mut d.gamma_z,
        "dynamics.gamma_isc_per_ps" => &mut d.gamma_isc,
        "dynamics.pulse.r" => &mut d.pulse.r,
        "dynamics.pulse.sigma_t_ps" => &mut d.pulse.sigma_t,
        "dynamics.pulse.t0_ps" => &mut d.pulse.t0,
        "window.t_start_ps" => &mut s.window.t_start,
        "window.t_end_ps" => &mut s.window.t_end,
        "window.dt_ps" => &mut s.window.dt,
        "integrator.rel_tol" => &mut s.integration.rel_tol,
        "integrator.abs_tol" => &mut s.integration.abs_tol,
        "irf.fwhm_ps" => &mut s.irf.fwhm,
        "spectrum.start_ev" => &mut s.spectrum_start,
        "spectrum.end_ev" => &mut s.spectrum_end,
        "spectrum.points" => {
            if !(x >= 2.0 && x.fract() == 0.0) {
                return Err(Error::Config("`spectrum.points` must be an integer >= 2".into()));
            }
            s.spectrum_points = x as usize;
            return Ok(());
        }
        other => return Err(Error::Config(format!("unknown parameter `{other}`"))),
    };
    *slot = x;
    Ok(())
}

fn blank_device() -> DeviceSpec {
    let mut spec = DeviceCatalog::builtin().get("D5").expect("D5 is built in").clone();
    let mut settings = RunSettings::default();
    for key in &PARAMETER_KEYS[DEVICE_KEYS] {
        set(&mut spec, &mut settings, key, &Value::Number(f64::NAN)).expect("device keys are settable");
    }
    spec
}

fn require_complete(spec: &DeviceSpec) -> Result<()> {
    let mut probe = spec.clone();
    let mut missing = Vec::new();
    for key in &PARAMETER_KEYS[DEVICE_KEYS] {
        let before = probe.clone();
        set(&mut probe, &mut RunSettings::default(), key, &Value::Number(0.0)).expect("device keys are settable");
        // a NaN left in place means the key was never provided
        if format!("{before:?}").matches("NaN").count() > format!("{probe:?}").matches("NaN").count() {
            missing.push(*key);
        }
        probe = before;
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("inline device is missing {}", missing.join(", "))))
    }
}
