//! Command-line front end for the rpdc toolkit.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use rpdc_core::RpdcError;

pub mod commands;
pub mod config;
pub mod output;

use commands::{Context, Report};
use config::{ExperimentConfig, RangeSpec};

/// Failures split by exit status: bad input exits 2, anything else exits 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    /// Attach the offending file to a core error.
    pub fn from_core(e: RpdcError, path: &Path) -> Self {
        match CliError::from(e) {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl From<RpdcError> for CliError {
    fn from(e: RpdcError) -> Self {
        match e {
            RpdcError::NotConverged { .. } => CliError::Internal(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rpdc",
    version,
    about = "Rotated polarization directional coupler toolkit"
)]
pub struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map writing-beam offsets to axis angles through a calibration table.
    AxisCal {
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// `start:stop:step` or a comma list of offsets in degrees.
        #[arg(long)]
        thetas: Option<RangeSpec>,
    },
    /// Cross-port power of the slow and fast modes versus coupling length.
    CouplerSweep {
        #[arg(long)]
        device: Option<PathBuf>,
        /// `start:stop:step` or a comma list of lengths in mm.
        #[arg(long)]
        lengths: Option<RangeSpec>,
    },
    /// Extinction ratios of both output ports.
    Extinction {
        #[arg(long)]
        device: Option<PathBuf>,
    },
    /// Simulated tomography of the six cardinal states, or reconstruction
    /// from a measurement file.
    Tomography {
        #[arg(long = "device")]
        devices: Vec<PathBuf>,
        /// Photon counts per basis; omit for noiseless data.
        #[arg(long)]
        counts: Option<u64>,
        #[arg(long, conflicts_with_all = ["devices", "counts"])]
        measurements: Option<PathBuf>,
    },
    /// Locate the optic axis of a retarder between crossed polarizers.
    FindAxis {
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long)]
        retardance: Option<f64>,
        #[arg(long)]
        transmittance: Option<f64>,
    },
}

/// Resolve config, run the command, and write its artifacts.
pub fn run(cli: Cli) -> Result<(Report, PathBuf), CliError> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
    };
    let report = match &cli.command {
        Command::AxisCal {
            calibration,
            thetas,
        } => commands::axis_cal(&ctx, calibration, thetas)?,
        Command::CouplerSweep { device, lengths } => {
            commands::coupler_sweep(&ctx, device, lengths)?
        }
        Command::Extinction { device } => commands::extinction(&ctx, device)?,
        Command::Tomography {
            devices,
            counts,
            measurements,
        } => commands::tomography(&ctx, devices, *counts, measurements)?,
        Command::FindAxis {
            device,
            alpha,
            retardance,
            transmittance,
        } => commands::find_axis_cmd(&ctx, device, *alpha, *retardance, *transmittance)?,
    };
    for a in &report.artifacts {
        a.write_to(&out)?;
    }
    Ok((report, out))
}
