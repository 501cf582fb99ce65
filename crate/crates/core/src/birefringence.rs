//! Rotated-axis birefringent waveguides.
//!
//! A waveguide whose optical axis has been rotated by `alpha` acts as a
//! linear retarder `J = t·R(α)·diag(e^{−iδ/2}, e^{+iδ/2})·R(−α)`. The
//! symmetric phase split keeps `det J = t²` so chained elements carry no
//! stray global phase.
//!
//! The fabrication map θ → α (azimuthal track offset to axis rotation) is
//! an empirical curve; [`AxisCalibration`] holds measured samples and
//! interpolates them with a monotone piecewise-cubic Hermite scheme.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RpdcError};
use crate::polarization::{JonesVector, Mat2, C64};

/// Coarse scan resolution for [`find_axis`], degrees.
const AXIS_SCAN_STEP_DEG: f64 = 0.5;
/// Golden-section stops once the bracket is narrower than this, degrees.
const AXIS_BRACKET_DEG: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedRetarder {
    /// Fast-axis orientation in degrees, stored in `[0, 180)`.
    alpha: f64,
    /// Phase delay δ between slow and fast axis, radians.
    retardance: f64,
    amplitude_transmittance: f64,
}

impl RotatedRetarder {
    pub fn new(alpha_deg: f64, retardance: f64, amplitude_transmittance: f64) -> Result<Self> {
        if !alpha_deg.is_finite() {
            return Err(RpdcError::domain("retarder angle must be finite"));
        }
        if !(retardance >= 0.0) || !retardance.is_finite() {
            return Err(RpdcError::domain(format!(
                "retardance must be finite and non-negative, got {retardance}"
            )));
        }
        if !(amplitude_transmittance > 0.0 && amplitude_transmittance <= 1.0) {
            return Err(RpdcError::domain(format!(
                "amplitude transmittance must lie in (0, 1], got {amplitude_transmittance}"
            )));
        }
        Ok(Self {
            alpha: alpha_deg.rem_euclid(180.0),
            retardance,
            amplitude_transmittance,
        })
    }

    /// Lossless retarder.
    pub fn lossless(alpha_deg: f64, retardance: f64) -> Result<Self> {
        Self::new(alpha_deg, retardance, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn retardance(&self) -> f64 {
        self.retardance
    }

    pub fn amplitude_transmittance(&self) -> f64 {
        self.amplitude_transmittance
    }
}

/// `δ = 2π·Δn·L/λ` with `L` in millimetres and `λ` in nanometres.
pub fn retardance_from_physics(delta_n: f64, length_mm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(delta_n >= 0.0) || !delta_n.is_finite() {
        return Err(RpdcError::domain(format!(
            "birefringence must be non-negative, got {delta_n}"
        )));
    }
    if !(length_mm > 0.0) || !length_mm.is_finite() {
        return Err(RpdcError::domain(format!(
            "length must be positive, got {length_mm}"
        )));
    }
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(RpdcError::domain(format!(
            "wavelength must be positive, got {wavelength_nm}"
        )));
    }
    Ok(2.0 * PI * delta_n * length_mm * 1e6 / wavelength_nm)
}

/// Jones matrix of a linear retarder with its first eigenaxis at `alpha_deg`.
pub fn rotated_phase_plate(alpha_deg: f64, retardance: f64) -> Mat2 {
    let a = alpha_deg.to_radians();
    let half = 0.5 * retardance;
    let core = Mat2::diag(C64::from_polar(1.0, -half), C64::from_polar(1.0, half));
    Mat2::rotation(a) * core * Mat2::rotation(-a)
}

pub fn retarder_jones(r: &RotatedRetarder) -> Mat2 {
    rotated_phase_plate(r.alpha, r.retardance).scale(C64::new(r.amplitude_transmittance, 0.0))
}

/// Power through polarizer(`pol_angle`) → retarder → polarizer(`pol_angle + 90°`)
/// for unit input power.
pub fn crossed_polarizer_transmission(r: &RotatedRetarder, pol_angle_deg: f64) -> f64 {
    let p = pol_angle_deg.to_radians();
    let input = JonesVector::linear(p);
    let analyzer = JonesVector::linear(p + 0.5 * PI);
    let out = retarder_jones(r).apply(&input);
    analyzer.inner(&out).norm_sqr()
}

/// Locate the retarder axis from the minimum of the crossed-polarizer
/// transmission. The estimate is in `[0, 180)` and is only defined modulo
/// 90°: fast and slow axes both extinguish the analyzer.
pub fn find_axis(r: &RotatedRetarder) -> Result<f64> {
    // The contrast scales as sin²(δ/2); zero means the axis cannot be seen.
    if (0.5 * r.retardance).sin().powi(2) < 1e-12 {
        return Err(RpdcError::AxisUnobservable);
    }
    let f = |p: f64| crossed_polarizer_transmission(r, p);

    let steps = (180.0 / AXIS_SCAN_STEP_DEG).round() as usize;
    let (best_idx, _) = (0..steps)
        .map(|i| (i, f(i as f64 * AXIS_SCAN_STEP_DEG)))
        .fold(
            (0, f64::INFINITY),
            |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
        );
    let center = best_idx as f64 * AXIS_SCAN_STEP_DEG;

    let estimate = golden_section_min(
        f,
        center - AXIS_SCAN_STEP_DEG,
        center + AXIS_SCAN_STEP_DEG,
        AXIS_BRACKET_DEG,
    );
    Ok(estimate.rem_euclid(180.0))
}

/// Minimize a unimodal function on `[lo, hi]`; returns the bracket midpoint.
pub(crate) fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Measured (θ, α) samples in degrees with their interpolant.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisCalibration {
    thetas: Vec<f64>,
    alphas: Vec<f64>,
    slopes: Vec<f64>,
}

impl AxisCalibration {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(RpdcError::domain("calibration needs at least two samples"));
        }
        for (i, &(theta, alpha)) in samples.iter().enumerate() {
            if !theta.is_finite() || !alpha.is_finite() {
                return Err(RpdcError::domain(format!("sample {i} is not finite")));
            }
            if !(0.0..=180.0).contains(&theta) || !(0.0..=180.0).contains(&alpha) {
                return Err(RpdcError::domain(format!(
                    "sample {i} ({theta}, {alpha}) lies outside [0, 180] degrees"
                )));
            }
            if i > 0 && theta <= samples[i - 1].0 {
                return Err(RpdcError::domain(
                    "calibration thetas must be strictly increasing",
                ));
            }
        }
        let thetas: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let alphas: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let slopes = pchip_slopes(&thetas, &alphas);
        Ok(Self {
            thetas,
            alphas,
            slopes,
        })
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas.iter().copied().zip(self.alphas.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Parse the `theta_deg,alpha_deg` CSV format. Lines starting with `#`
    /// are ignored.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let header_line = headers.position().map_or(1, |p| p.line());
        if headers.iter().collect::<Vec<_>>() != ["theta_deg", "alpha_deg"] {
            return Err(RpdcError::Parse {
                line: header_line.max(1),
                message: format!(
                    "expected header `theta_deg,alpha_deg`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| RpdcError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                let v: f64 = raw.parse().map_err(|_| RpdcError::Parse {
                    line,
                    message: format!("invalid number `{raw}`"),
                })?;
                if !(0.0..=180.0).contains(&v) {
                    return Err(RpdcError::Parse {
                        line,
                        message: format!("angle {v} outside [0, 180]"),
                    });
                }
                Ok(v)
            };
            samples.push((field(0)?, field(1)?));
        }
        Self::new(&samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// α(θ) from the calibration. Exact at the samples; no extrapolation.
pub fn axis_from_offset(cal: &AxisCalibration, theta_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(RpdcError::domain(format!(
            "theta {theta_deg} outside [0, 180]"
        )));
    }
    let xs = &cal.thetas;
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if theta_deg < first || theta_deg > last {
        return Err(RpdcError::domain(format!(
            "theta {theta_deg} outside calibrated range [{first}, {last}]"
        )));
    }
    // Index of the interval containing theta.
    let k = match xs.partition_point(|&x| x <= theta_deg) {
        0 => 0,
        n if n >= xs.len() => xs.len() - 2,
        n => n - 1,
    };
    let h = xs[k + 1] - xs[k];
    let t = (theta_deg - xs[k]) / h;
    let (y0, y1) = (cal.alphas[k], cal.alphas[k + 1]);
    let (m0, m1) = (cal.slopes[k], cal.slopes[k + 1]);
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Ok(h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1)
}

/// Fritsch–Carlson derivative estimates with a weighted harmonic mean at
/// interior knots and a shape-preserving three-point rule at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
    }
    m[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Synthetic calibration used for tests and the shipped example table:
/// `α(θ) = θ − 10·sin(2θ)` in degrees, sampled every `step_deg` from 0 to 180.
///
/// This is a stand-in curve, not measured data.
pub fn synthetic_calibration_curve(theta_deg: f64) -> f64 {
    theta_deg - 10.0 * (2.0 * theta_deg.to_radians()).sin()
}

pub fn synthetic_calibration(step_deg: f64) -> Result<AxisCalibration> {
    if !(step_deg > 0.0) {
        return Err(RpdcError::domain("calibration step must be positive"));
    }
    let n = (180.0 / step_deg).round() as usize;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let theta = (i as f64 * step_deg).min(180.0);
            (theta, synthetic_calibration_curve(theta).clamp(0.0, 180.0))
        })
        .collect();
    AxisCalibration::new(&samples)
}
