//! Rotated polarization directional coupler as a polarization-resolved
//! two-port.
//!
//! The device frame has its first axis (the slow axis) at `alpha` from H and
//! the fast axis at `alpha + 90°`. Light is launched into the bar arm. Each
//! eigenpolarization sees its own synchronous coupler, so in the device
//! frame both port operators are diagonal:
//!
//! ```text
//! cross (T):  diag(−i·sin θ_S, −i·sin θ_F)     θ = K·Z + φ
//! bar   (R):  diag(   cos θ_S,    cos θ_F)
//! ```
//!
//! preceded by the residual retardance `diag(e^{−iδ/2}, e^{+iδ/2})` and
//! followed by the scalar amplitude transmittance. Since every factor is
//! diagonal in the device frame, the order of retarder and coupler does not
//! change the port fields.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::birefringence::{retarder_jones, rotated_phase_plate, RotatedRetarder};
use crate::coupled_mode::{propagate_analytic, CouplerParams, ModeAmplitudes};
use crate::error::{Result, RpdcError};
use crate::polarization::{
    density_to_stokes, jones_to_density, Cardinal, JonesVector, Mat2, StokesVector, C64,
};

/// Port powers below this are clamped before forming dB ratios.
pub const ER_POWER_FLOOR: f64 = 1e-15;
/// Extinction ratios at or above this are limited by [`ER_POWER_FLOOR`]
/// rather than by the device.
pub const CLAMP_LIMITED_DB: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpdcDevice {
    /// Slow-axis orientation from H, degrees.
    pub alpha: f64,
    pub coupler_slow: CouplerParams,
    pub coupler_fast: CouplerParams,
    pub amplitude_transmittance: f64,
    /// Residual retardance of the straight coupling region, radians.
    pub retardance: f64,
}

impl RpdcDevice {
    pub fn new(
        alpha: f64,
        coupler_slow: CouplerParams,
        coupler_fast: CouplerParams,
        amplitude_transmittance: f64,
        retardance: f64,
    ) -> Result<Self> {
        let dev = Self {
            alpha,
            coupler_slow,
            coupler_fast,
            amplitude_transmittance,
            retardance,
        };
        dev.validate()?;
        Ok(dev)
    }

    /// Device whose S-bends make a straight length of `l_effective` act like
    /// `l_straight`: each axis gets the bend phase `K·(l_straight − l_effective)`.
    pub fn bend_compensated(
        alpha: f64,
        k_slow: f64,
        k_fast: f64,
        l_straight: f64,
        l_effective: f64,
    ) -> Result<Self> {
        if l_effective > l_straight || l_effective < 0.0 {
            return Err(RpdcError::domain("need 0 ≤ L_effective ≤ L_straight"));
        }
        let dl = l_straight - l_effective;
        Self::new(
            alpha,
            CouplerParams::symmetric(0.0, k_slow, l_effective, k_slow * dl)?,
            CouplerParams::symmetric(0.0, k_fast, l_effective, k_fast * dl)?,
            1.0,
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(RpdcError::domain("device angle must be finite"));
        }
        self.coupler_slow.validate()?;
        self.coupler_fast.validate()?;
        if self.coupler_slow.length != self.coupler_fast.length {
            return Err(RpdcError::domain(format!(
                "slow and fast couplers disagree on length ({} vs {})",
                self.coupler_slow.length, self.coupler_fast.length
            )));
        }
        if self.coupler_slow.k12 < self.coupler_fast.k12 {
            return Err(RpdcError::CouplingOrder {
                k_slow: self.coupler_slow.k12,
                k_fast: self.coupler_fast.k12,
            });
        }
        if !(self.amplitude_transmittance > 0.0 && self.amplitude_transmittance <= 1.0) {
            return Err(RpdcError::domain(format!(
                "amplitude transmittance must lie in (0, 1], got {}",
                self.amplitude_transmittance
            )));
        }
        if !(self.retardance >= 0.0) || !self.retardance.is_finite() {
            return Err(RpdcError::domain(
                "retardance must be finite and non-negative",
            ));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.coupler_slow.length
    }

    pub fn with_length(&self, length: f64) -> Self {
        Self {
            coupler_slow: self.coupler_slow.with_length(length),
            coupler_fast: self.coupler_fast.with_length(length),
            ..*self
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Shift the coupling phases of each axis, e.g. to model bend or length
    /// errors of a fabricated device.
    pub fn with_phase_errors(&self, slow: f64, fast: f64) -> Self {
        let mut dev = *self;
        dev.coupler_slow.bend_phase += slow;
        dev.coupler_fast.bend_phase += fast;
        dev
    }

    /// Unit Jones vectors along the slow and fast axes.
    pub fn axis_states(&self) -> (JonesVector, JonesVector) {
        let a = self.alpha.to_radians();
        (JonesVector::linear(a), JonesVector::linear(a + FRAC_PI_2))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: DeviceFile = serde_json::from_str(s)?;
        file.to_device()
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// On-disk device description. All fields are required.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub alpha_deg: f64,
    pub k_slow_rad_per_mm: f64,
    pub k_fast_rad_per_mm: f64,
    pub length_mm: f64,
    pub bend_phase_slow_rad: f64,
    pub bend_phase_fast_rad: f64,
    pub transmittance: f64,
    pub retardance_rad: f64,
}

impl DeviceFile {
    /// Propagation constants are not part of the file: a common β only adds
    /// a global phase, and the slow/fast difference lives in `retardance_rad`.
    pub fn to_device(&self) -> Result<RpdcDevice> {
        RpdcDevice::new(
            self.alpha_deg,
            CouplerParams::symmetric(
                0.0,
                self.k_slow_rad_per_mm,
                self.length_mm,
                self.bend_phase_slow_rad,
            )?,
            CouplerParams::symmetric(
                0.0,
                self.k_fast_rad_per_mm,
                self.length_mm,
                self.bend_phase_fast_rad,
            )?,
            self.transmittance,
            self.retardance_rad,
        )
    }
}

impl From<&RpdcDevice> for DeviceFile {
    fn from(dev: &RpdcDevice) -> Self {
        Self {
            alpha_deg: dev.alpha,
            k_slow_rad_per_mm: dev.coupler_slow.k12,
            k_fast_rad_per_mm: dev.coupler_fast.k12,
            length_mm: dev.length(),
            bend_phase_slow_rad: dev.coupler_slow.bend_phase,
            bend_phase_fast_rad: dev.coupler_fast.bend_phase,
            transmittance: dev.amplitude_transmittance,
            retardance_rad: dev.retardance,
        }
    }
}

/// Output fields of both arms in the lab H/V basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortOutput {
    /// Cross (transmitted) arm.
    pub port_t: JonesVector,
    /// Bar (reflected) arm.
    pub port_r: JonesVector,
}

impl PortOutput {
    pub fn power_t(&self) -> f64 {
        self.port_t.norm_sqr()
    }

    pub fn power_r(&self) -> f64 {
        self.port_r.norm_sqr()
    }

    pub fn total_power(&self) -> f64 {
        self.power_t() + self.power_r()
    }
}

pub fn rpdc_transfer(dev: &RpdcDevice, input: &JonesVector) -> Result<PortOutput> {
    dev.validate()?;
    let a = dev.alpha.to_radians();
    let local = Mat2::rotation(-a).apply(input);

    let half = 0.5 * dev.retardance;
    let c_slow = local.h * C64::from_polar(1.0, -half);
    let c_fast = local.v * C64::from_polar(1.0, half);

    let slow = propagate_analytic(&dev.coupler_slow, &ModeAmplitudes::arm1(c_slow))?;
    let fast = propagate_analytic(&dev.coupler_fast, &ModeAmplitudes::arm1(c_fast))?;

    let back = Mat2::rotation(a).scale(C64::new(dev.amplitude_transmittance, 0.0));
    Ok(PortOutput {
        port_t: back.apply(&JonesVector::new(slow.a2, fast.a2)),
        port_r: back.apply(&JonesVector::new(slow.a1, fast.a1)),
    })
}

/// Port operators `(A_T, A_R)` such that `port_t = A_T·v`, `port_r = A_R·v`.
pub fn port_matrices(dev: &RpdcDevice) -> Result<(Mat2, Mat2)> {
    let e1 = rpdc_transfer(dev, &JonesVector::real(1.0, 0.0))?;
    let e2 = rpdc_transfer(dev, &JonesVector::real(0.0, 1.0))?;
    let cols = |a: JonesVector, b: JonesVector| Mat2::new(a.h, b.h, a.v, b.v);
    Ok((cols(e1.port_t, e2.port_t), cols(e1.port_r, e2.port_r)))
}

/// Port powers for unit inputs aligned with each device axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisPowers {
    pub t_slow: f64,
    pub t_fast: f64,
    pub r_slow: f64,
    pub r_fast: f64,
}

pub fn axis_aligned_powers(dev: &RpdcDevice) -> Result<AxisPowers> {
    let (slow, fast) = dev.axis_states();
    let s = rpdc_transfer(dev, &slow)?;
    let f = rpdc_transfer(dev, &fast)?;
    Ok(AxisPowers {
        t_slow: s.power_t(),
        t_fast: f.power_t(),
        r_slow: s.power_r(),
        r_fast: f.power_r(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRatios {
    pub er_t_db: f64,
    pub er_r_db: f64,
}

/// `|10·log10(p/q)|` after flooring both powers at [`ER_POWER_FLOOR`].
pub fn extinction_db(p: f64, q: f64) -> f64 {
    (10.0 * (p.max(ER_POWER_FLOOR) / q.max(ER_POWER_FLOOR)).log10()).abs()
}

pub fn extinction_ratios(dev: &RpdcDevice) -> Result<ExtinctionRatios> {
    let p = axis_aligned_powers(dev)?;
    Ok(ExtinctionRatios {
        er_t_db: extinction_db(p.t_fast, p.t_slow),
        er_r_db: extinction_db(p.r_fast, p.r_slow),
    })
}

/// Polarization analysis of the straight coupling region alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCheck {
    pub input: Cardinal,
    pub output: JonesVector,
    pub output_stokes: StokesVector,
    /// Ellipse orientation from H, degrees.
    pub orientation_deg: f64,
    /// Ellipticity angle, degrees; positive for right-handed.
    pub ellipticity_deg: f64,
    /// What an ideal half-wave region at the same angle would emit.
    pub expected: Cardinal,
    /// Contrast between the expected state and its orthogonal complement.
    pub visibility: f64,
    /// Cardinal state closest to the actual output.
    pub nearest: Cardinal,
}

/// Send a cardinal state through the coupling region, modelled as a single
/// rotated retarder with the device's angle, retardance and transmittance,
/// and compare with the ideal half-wave mapping.
pub fn simulate_axis_check(dev: &RpdcDevice, input: Cardinal) -> Result<AxisCheck> {
    dev.validate()?;
    let region = RotatedRetarder::new(dev.alpha, dev.retardance, dev.amplitude_transmittance)?;
    let output = retarder_jones(&region).apply(&input.jones());

    let ideal = rotated_phase_plate(dev.alpha, std::f64::consts::PI).apply(&input.jones());
    let expected = nearest_cardinal(&ideal);

    let e = expected.jones();
    let p_exp = e.inner(&output).norm_sqr();
    let p_orth = e.orthogonal().inner(&output).norm_sqr();
    let visibility = (p_exp - p_orth) / (p_exp + p_orth);

    let output_stokes = density_to_stokes(&jones_to_density(&output)?);
    Ok(AxisCheck {
        input,
        output,
        output_stokes,
        orientation_deg: output_stokes.orientation().to_degrees(),
        ellipticity_deg: output_stokes.ellipticity().to_degrees(),
        expected,
        visibility,
        nearest: nearest_cardinal(&output),
    })
}

fn nearest_cardinal(v: &JonesVector) -> Cardinal {
    let n = v.norm_sqr();
    Cardinal::ALL
        .into_iter()
        .map(|c| (c, c.jones().inner(v).norm_sqr() / n))
        .fold((Cardinal::H, f64::NEG_INFINITY), |best, x| {
            if x.1 > best.1 {
                x
            } else {
                best
            }
        })
        .0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length_mm: f64,
    pub p_t_slow: f64,
    pub p_t_fast: f64,
    pub p_r_slow: f64,
    pub p_r_fast: f64,
}

/// Normalized port powers of axis-aligned inputs versus straight length.
pub fn sweep_coupling_length(template: &RpdcDevice, lengths: &[f64]) -> Result<Vec<SweepRow>> {
    lengths
        .iter()
        .map(|&length| {
            if !(length >= 0.0) || !length.is_finite() {
                return Err(RpdcError::domain(format!(
                    "sweep length must be ≥ 0, got {length}"
                )));
            }
            let dev = template.with_length(length);
            let p = axis_aligned_powers(&dev)?;
            let norm = dev.amplitude_transmittance.powi(2);
            Ok(SweepRow {
                length_mm: length,
                p_t_slow: p.t_slow / norm,
                p_t_fast: p.t_fast / norm,
                p_r_slow: p.r_slow / norm,
                p_r_fast: p.r_fast / norm,
            })
        })
        .collect()
}
