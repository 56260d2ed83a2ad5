use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbattery::commands::{self, Outcome};
use qbattery::config::{CommandKind, DeviceSelection, RunConfig};
use qbattery::Result;

/// Organic microcavity quantum battery: steady-state polaritons, charging
/// dynamics and device analysis.
#[derive(Parser)]
#[command(name = "qbattery", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Catalog device (D1..D8) or `all`.
    #[arg(long)]
    device: Option<String>,
    /// TOML file with dotted parameter keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Reflectance spectrum and polariton branches.
    Spectrum(Common),
    /// Fit the coupled-oscillator model to a measured spectrum.
    Fit {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pulsed charging trajectory, ΔR/R and charging report.
    Charge(Common),
    /// Charging report across absorber counts.
    Sweep {
        /// Use the idealized averaged device.
        #[arg(long)]
        idealized: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exact-limit, oracle and conservation checks.
    Validate(Common),
    /// Maximum power points and cavity/control ratios from I-V files.
    Electrical {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn config(kind: CommandKind, c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(kind, path)?,
        None => RunConfig::new(kind),
    };
    if let Some(d) = &c.device {
        cfg.device = DeviceSelection::from_name(d);
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    for s in &c.overrides {
        cfg.push_override(s)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Spectrum(c) => commands::run_spectrum(&config(CommandKind::Spectrum, &c)?),
        Command::Fit { file, common } => commands::run_fit(&config(CommandKind::Fit, &common)?, &file),
        Command::Charge(c) => commands::run_charge(&config(CommandKind::Charge, &c)?),
        Command::Sweep { idealized, common } => {
            let mut cfg = config(CommandKind::Sweep, &common)?;
            if idealized {
                cfg.push_override("sweep.idealized=true")?;
            }
            commands::run_sweep(&cfg)
        }
        Command::Validate(c) => commands::run_validate(&config(CommandKind::Validate, &c)?),
        Command::Electrical { files, common } => {
            commands::run_electrical(&config(CommandKind::Electrical, &common)?, &files)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
