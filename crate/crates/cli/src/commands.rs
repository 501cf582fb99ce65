use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use rpdc_core::birefringence::{
    axis_from_offset, crossed_polarizer_transmission, find_axis, AxisCalibration, RotatedRetarder,
};
use rpdc_core::device::{extinction_ratios, sweep_coupling_length, DeviceFile, RpdcDevice};
use rpdc_core::polarization::{fidelity, Cardinal};
use rpdc_core::tomography::{
    linear_reconstruct, mle_reconstruct, read_measurements_path, run_tomography_experiment,
    MleConfig, NoiseConfig, ResultJson, TomographyResult,
};
use rpdc_core::RpdcError;

use crate::config::{ExperimentConfig, RangeSpec};
use crate::output::{centi, config_hash, file_digest, Artifact, Meta};
use crate::CliError;

/// Everything a command needs after flags and config have been merged.
#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    pub config: ExperimentConfig,
}

/// Artifacts to write plus a human-readable summary for stdout.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

fn meta(command: &str, seed: u64, resolved: serde_json::Value) -> Meta {
    Meta {
        command: command.to_owned(),
        seed,
        config_hash: config_hash(&json!({ "command": command, "seed": seed, "inputs": resolved })),
    }
}

fn required<'a>(
    flag: &'a Option<PathBuf>,
    fallback: &'a Option<PathBuf>,
    what: &str,
) -> Result<&'a Path, CliError> {
    flag.as_deref().or(fallback.as_deref()).ok_or_else(|| {
        CliError::Invalid(format!("no {what} given (use the flag or the config file)"))
    })
}

fn load_device(path: &Path) -> Result<RpdcDevice, CliError> {
    RpdcDevice::from_json_path(path).map_err(|e| CliError::from_core(e, path))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn axis_cal(
    ctx: &Context,
    calibration: &Option<PathBuf>,
    thetas: &Option<RangeSpec>,
) -> Result<Report, CliError> {
    let path = required(calibration, &ctx.config.calibration, "calibration file")?;
    let cal = AxisCalibration::from_csv_path(path).map_err(|e| CliError::from_core(e, path))?;
    let thetas = thetas
        .clone()
        .or_else(|| ctx.config.thetas.clone())
        .unwrap_or(RangeSpec::Grid {
            start: 0.0,
            stop: 180.0,
            step: 1.0,
        })
        .values()?;

    let rows = thetas
        .iter()
        .map(|&t| axis_from_offset(&cal, t).map(|a| vec![fmt(t), fmt(a)]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from)?;

    let m = meta(
        "axis-cal",
        ctx.seed,
        json!({ "calibration": file_digest(path)?, "thetas": thetas }),
    );
    Ok(Report {
        summary: format!(
            "interpolated {} angles from {} calibration samples",
            rows.len(),
            cal.len()
        ),
        artifacts: vec![Artifact::csv(
            "axis_calibration.csv",
            &m,
            &["theta_deg", "alpha_deg"],
            rows,
        )],
    })
}

pub fn coupler_sweep(
    ctx: &Context,
    device: &Option<PathBuf>,
    lengths: &Option<RangeSpec>,
) -> Result<Report, CliError> {
    let path = required(device, &ctx.config.device, "device file")?;
    let dev = load_device(path)?;
    let lengths = lengths
        .clone()
        .or_else(|| ctx.config.lengths.clone())
        .unwrap_or(RangeSpec::Grid {
            start: 0.0,
            stop: 50.0,
            step: 0.5,
        })
        .values()?;
    let table = sweep_coupling_length(&dev, &lengths)?;

    let best = table
        .iter()
        .max_by(|a, b| {
            (a.p_t_slow - a.p_t_fast)
                .abs()
                .total_cmp(&(b.p_t_slow - b.p_t_fast).abs())
        })
        .expect("ranges are non-empty");
    let m = meta(
        "coupler-sweep",
        ctx.seed,
        json!({ "device": DeviceFile::from(&dev), "lengths": lengths }),
    );
    let rows = table
        .iter()
        .map(|r| vec![fmt(r.length_mm), fmt(r.p_t_slow), fmt(r.p_t_fast)]);
    Ok(Report {
        summary: format!(
            "{} lengths; largest slow/fast cross-power separation {:.4} at {} mm",
            table.len(),
            (best.p_t_slow - best.p_t_fast).abs(),
            best.length_mm
        ),
        artifacts: vec![Artifact::csv(
            "coupler_sweep.csv",
            &m,
            &["length_mm", "P_cross_slow", "P_cross_fast"],
            rows,
        )],
    })
}

#[derive(Serialize)]
struct ExtinctionReport {
    er_t_db: f64,
    er_r_db: f64,
}

pub fn extinction(ctx: &Context, device: &Option<PathBuf>) -> Result<Report, CliError> {
    let path = required(device, &ctx.config.device, "device file")?;
    let dev = load_device(path)?;
    let er = extinction_ratios(&dev)?;
    let report = ExtinctionReport {
        er_t_db: centi(er.er_t_db),
        er_r_db: centi(er.er_r_db),
    };
    let m = meta(
        "extinction",
        ctx.seed,
        json!({ "device": DeviceFile::from(&dev) }),
    );
    Ok(Report {
        summary: format!(
            "ER_T = {:.2} dB, ER_R = {:.2} dB",
            report.er_t_db, report.er_r_db
        ),
        artifacts: vec![Artifact::json("extinction.json", &m, &report)?],
    })
}

#[derive(Serialize)]
struct StateResult {
    device: String,
    state: String,
    #[serde(flatten)]
    result: ResultJson,
}

#[derive(Serialize)]
struct DeviceSummary {
    device: String,
    average_fidelity: f64,
}

#[derive(Serialize)]
struct TomographyReport {
    results: Vec<StateResult>,
    devices: Vec<DeviceSummary>,
}

#[derive(Serialize)]
struct IngestedReport {
    linear: ResultJson,
    linear_physical: bool,
    mle: ResultJson,
    log_likelihood: f64,
}

fn device_label(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "device".to_owned(), |s| s.to_string_lossy().into_owned())
}

/// MLE that keeps the best iterate when the optimizer stops early.
fn mle_or_best(result: Result<TomographyResult, RpdcError>) -> Result<TomographyResult, CliError> {
    match result {
        Ok(r) => Ok(r),
        Err(RpdcError::NotConverged { best, .. }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

pub fn tomography(
    ctx: &Context,
    devices: &[PathBuf],
    counts: Option<u64>,
    measurements: &Option<PathBuf>,
) -> Result<Report, CliError> {
    if let Some(path) = measurements {
        return tomography_from_measurements(ctx, path);
    }
    let paths: Vec<PathBuf> = if !devices.is_empty() {
        devices.to_vec()
    } else if !ctx.config.devices.is_empty() {
        ctx.config.devices.clone()
    } else if let Some(d) = &ctx.config.device {
        vec![d.clone()]
    } else {
        return Err(CliError::Invalid(
            "no device file given (use --device or the config file)".into(),
        ));
    };
    let counts = counts.or(ctx.config.noise.counts_per_basis);
    let config = MleConfig::default();

    let mut results = Vec::new();
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    let mut resolved = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let dev = load_device(path)?;
        let label = device_label(path);
        resolved.push(json!({ "label": label, "device": DeviceFile::from(&dev) }));
        let mut sum = 0.0;
        for (j, state) in Cardinal::ALL.into_iter().enumerate() {
            let noise = NoiseConfig {
                counts_per_basis: counts,
                seed: ctx.seed.wrapping_add((i * Cardinal::ALL.len() + j) as u64),
            };
            let truth = state.density();
            let (fid, result) = match run_tomography_experiment(&truth, &dev, &noise, &config) {
                Ok(o) => (o.fidelity, o.result),
                Err(RpdcError::NotConverged { best, .. }) => (fidelity(&best.rho, &truth)?, *best),
                Err(e) => return Err(e.into()),
            };
            sum += fid;
            rows.push(vec![
                label.clone(),
                state.to_string(),
                fmt(fid),
                result.converged.to_string(),
                result.iterations.to_string(),
            ]);
            results.push(StateResult {
                device: label.clone(),
                state: state.to_string(),
                result: ResultJson::new(&result, Some(fid)),
            });
        }
        summaries.push(DeviceSummary {
            device: label,
            average_fidelity: sum / Cardinal::ALL.len() as f64,
        });
    }

    let m = meta(
        "tomography",
        ctx.seed,
        json!({ "devices": resolved, "counts_per_basis": counts }),
    );
    let summary = summaries
        .iter()
        .map(|s| format!("{}: average fidelity {:.6}", s.device, s.average_fidelity))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Report {
        artifacts: vec![
            Artifact::csv(
                "tomography_fidelity.csv",
                &m,
                &["device", "state", "fidelity", "converged", "iterations"],
                rows,
            ),
            Artifact::json(
                "tomography_results.json",
                &m,
                &TomographyReport {
                    results,
                    devices: summaries,
                },
            )?,
        ],
        summary,
    })
}

fn tomography_from_measurements(ctx: &Context, path: &Path) -> Result<Report, CliError> {
    let records = read_measurements_path(path).map_err(|e| CliError::from_core(e, path))?;
    let linear = linear_reconstruct(&records)?;
    let mle = mle_or_best(mle_reconstruct(&records, &MleConfig::default()))?;
    let m = meta(
        "tomography",
        ctx.seed,
        json!({ "measurements": file_digest(path)? }),
    );
    let report = IngestedReport {
        linear: ResultJson::new(&linear, None),
        linear_physical: linear.physical,
        mle: ResultJson::new(&mle, None),
        log_likelihood: mle.log_likelihood,
    };
    Ok(Report {
        summary: format!(
            "reconstructed from {} records; linear estimate {}physical; MLE converged: {}",
            records.len(),
            if linear.physical { "" } else { "non-" },
            mle.converged
        ),
        artifacts: vec![Artifact::json("tomography_result.json", &m, &report)?],
    })
}

#[derive(Serialize)]
struct FindAxisReport {
    alpha_estimate_deg: f64,
    retardance_rad: f64,
    amplitude_transmittance: f64,
}

pub fn find_axis_cmd(
    ctx: &Context,
    device: &Option<PathBuf>,
    alpha: Option<f64>,
    retardance: Option<f64>,
    transmittance: Option<f64>,
) -> Result<Report, CliError> {
    let retarder = match (alpha, retardance) {
        (Some(a), Some(d)) => RotatedRetarder::new(a, d, transmittance.unwrap_or(1.0))?,
        (None, None) => {
            let path = required(
                device,
                &ctx.config.device,
                "device file or --alpha/--retardance",
            )?;
            let dev = load_device(path)?;
            RotatedRetarder::new(dev.alpha, dev.retardance, dev.amplitude_transmittance)?
        }
        _ => {
            return Err(CliError::Invalid(
                "--alpha and --retardance must be given together".into(),
            ))
        }
    };
    let estimate = find_axis(&retarder)?;
    let m = meta("find-axis", ctx.seed, json!({ "retarder": retarder }));

    let scan = (0..360).map(|i| {
        let p = i as f64 * 0.5;
        vec![fmt(p), fmt(crossed_polarizer_transmission(&retarder, p))]
    });
    Ok(Report {
        summary: format!("axis at {estimate:.4}° (mod 90°)"),
        artifacts: vec![
            Artifact::json(
                "find_axis.json",
                &m,
                &FindAxisReport {
                    alpha_estimate_deg: estimate,
                    retardance_rad: retarder.retardance(),
                    amplitude_transmittance: retarder.amplitude_transmittance(),
                },
            )?,
            Artifact::csv(
                "find_axis_scan.csv",
                &m,
                &["pol_angle_deg", "transmission"],
                scan,
            ),
        ],
    })
}
