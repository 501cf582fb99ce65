//! Two-waveguide coupled-mode propagation.
//!
//! Amplitudes evolve as
//!
//! ```text
//! da1/dz = −iβ1·a1 − iK12·a2
//! da2/dz = −iK21·a1 − iβ2·a2
//! ```
//!
//! which conserves `|a1|² + |a2|²` whenever `K12 = K21` is real. In the
//! synchronous case (`β1 = β2 = β`, `K12 = K21 = K`) the solution is a
//! rotation by `KZ` times the common phase `e^{−iβZ}`; the S-bend region at
//! the coupler ends contributes an extra coupling phase φ that simply adds
//! to the rotation angle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RpdcError};
use crate::polarization::C64;

/// Default integration step for [`propagate_numeric`], millimetres.
pub const DEFAULT_STEP_MM: f64 = 1e-3;

/// Equality tolerance used to decide whether the analytic path applies.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerParams {
    /// Propagation constants, rad/mm.
    pub beta1: f64,
    pub beta2: f64,
    /// Coupling coefficients, rad/mm.
    pub k12: f64,
    pub k21: f64,
    /// Straight coupling length, mm.
    pub length: f64,
    /// Additive coupling phase from the S-bends, radians.
    pub bend_phase: f64,
}

impl CouplerParams {
    /// Synchronous, reciprocal coupler.
    pub fn symmetric(beta: f64, k: f64, length: f64, bend_phase: f64) -> Result<Self> {
        Self::new(beta, beta, k, k, length, bend_phase)
    }

    pub fn new(
        beta1: f64,
        beta2: f64,
        k12: f64,
        k21: f64,
        length: f64,
        bend_phase: f64,
    ) -> Result<Self> {
        let p = Self {
            beta1,
            beta2,
            k12,
            k21,
            length,
            bend_phase,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.beta1,
            self.beta2,
            self.k12,
            self.k21,
            self.length,
            self.bend_phase,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(RpdcError::domain("coupler coefficients must be finite"));
        }
        if self.length < 0.0 {
            return Err(RpdcError::domain(format!(
                "coupler length must be ≥ 0, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (self.beta1 - self.beta2).abs() <= SYMMETRY_TOL
            && (self.k12 - self.k21).abs() <= SYMMETRY_TOL
    }

    /// `K·Z + φ` for the synchronous case.
    pub fn coupling_angle(&self) -> f64 {
        self.k12 * self.length + self.bend_phase
    }

    pub fn with_length(&self, length: f64) -> Self {
        Self { length, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub a1: C64,
    pub a2: C64,
}

impl ModeAmplitudes {
    pub const fn new(a1: C64, a2: C64) -> Self {
        Self { a1, a2 }
    }

    /// All power launched into waveguide 1.
    pub fn arm1(amplitude: C64) -> Self {
        Self::new(amplitude, C64::new(0.0, 0.0))
    }

    pub fn power(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.a1 - other.a1).norm().max((self.a2 - other.a2).norm())
    }

    fn axpy(&self, h: f64, k: &Self) -> Self {
        Self::new(self.a1 + k.a1 * h, self.a2 + k.a2 * h)
    }
}

/// Closed-form propagation for the synchronous, reciprocal coupler.
pub fn propagate_analytic(p: &CouplerParams, input: &ModeAmplitudes) -> Result<ModeAmplitudes> {
    p.validate()?;
    if !p.is_symmetric() {
        return Err(RpdcError::AsymmetricCoupler);
    }
    let (s, c) = p.coupling_angle().sin_cos();
    let phase = C64::from_polar(1.0, -p.beta1 * p.length);
    let mis = C64::new(0.0, -s);
    Ok(ModeAmplitudes::new(
        phase * (input.a1 * c + input.a2 * mis),
        phase * (input.a1 * mis + input.a2 * c),
    ))
}

/// Fixed-step RK4 integration of the coupled-mode equations.
///
/// The straight section is integrated over `length` with the step adjusted
/// down so it divides the length evenly. The bend phase is then applied as
/// an equivalent pure-coupling segment (`β = 0`, unit coupling) of
/// "length" φ, integrated the same way.
pub fn propagate_numeric(
    p: &CouplerParams,
    input: &ModeAmplitudes,
    step: f64,
) -> Result<ModeAmplitudes> {
    p.validate()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(RpdcError::domain(format!(
            "step must be positive, got {step}"
        )));
    }
    let straight = CoupledOde {
        beta1: p.beta1,
        beta2: p.beta2,
        k12: p.k12,
        k21: p.k21,
    };
    let out = integrate_rk4(&straight, *input, p.length, step);
    let bend = CoupledOde {
        beta1: 0.0,
        beta2: 0.0,
        k12: 1.0,
        k21: 1.0,
    };
    Ok(integrate_rk4(&bend, out, p.bend_phase, step))
}

#[derive(Clone, Copy, Debug)]
struct CoupledOde {
    beta1: f64,
    beta2: f64,
    k12: f64,
    k21: f64,
}

impl CoupledOde {
    fn derivative(&self, a: &ModeAmplitudes) -> ModeAmplitudes {
        let mi = C64::new(0.0, -1.0);
        ModeAmplitudes::new(
            mi * (a.a1 * self.beta1 + a.a2 * self.k12),
            mi * (a.a1 * self.k21 + a.a2 * self.beta2),
        )
    }
}

/// Integrate over a signed `span` with at most `|step|`-sized steps.
fn integrate_rk4(ode: &CoupledOde, mut a: ModeAmplitudes, span: f64, step: f64) -> ModeAmplitudes {
    if span == 0.0 {
        return a;
    }
    let n = (span.abs() / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for _ in 0..n {
        let k1 = ode.derivative(&a);
        let k2 = ode.derivative(&a.axpy(0.5 * h, &k1));
        let k3 = ode.derivative(&a.axpy(0.5 * h, &k2));
        let k4 = ode.derivative(&a.axpy(h, &k3));
        a = ModeAmplitudes::new(
            a.a1 + (k1.a1 + (k2.a1 + k3.a1) * 2.0 + k4.a1) * (h / 6.0),
            a.a2 + (k1.a2 + (k2.a2 + k3.a2) * 2.0 + k4.a2) * (h / 6.0),
        );
    }
    a
}

/// Field-amplitude splitting ratio: `T = |sin(KZ + φ)|`, `R = √(1 − T²)`.
pub fn cross_coupling_ratio(k: f64, z: f64, bend_phase: f64) -> Result<(f64, f64)> {
    if !(k >= 0.0) || !(z >= 0.0) || !bend_phase.is_finite() || !k.is_finite() || !z.is_finite() {
        return Err(RpdcError::domain(format!(
            "coupling ratio needs K ≥ 0 and Z ≥ 0 (K = {k}, Z = {z})"
        )));
    }
    let t = (k * z + bend_phase).sin().abs();
    Ok((t, (1.0 - t * t).sqrt()))
}

/// Shortest straight length at which the two polarizations exit opposite
/// ports: `π / (2(K_S − K_F))`.
pub fn pdc_coupling_length(k_slow: f64, k_fast: f64) -> Result<f64> {
    if !k_slow.is_finite() || !k_fast.is_finite() || k_fast < 0.0 {
        return Err(RpdcError::domain(
            "coupling coefficients must be finite and non-negative",
        ));
    }
    if k_slow <= k_fast {
        return Err(RpdcError::CouplingOrder { k_slow, k_fast });
    }
    Ok(PI / (2.0 * (k_slow - k_fast)))
}

/// Differential bend phase that lets a coupler of length `l_effective`
/// behave like a straight coupler of length `l_straight`.
pub fn bend_phase_from_shortening(l_straight: f64, l_effective: f64, delta_k: f64) -> Result<f64> {
    if !(l_effective > 0.0) || !(l_effective <= l_straight) || !l_straight.is_finite() {
        return Err(RpdcError::domain(format!(
            "need 0 < L_effective ≤ L_straight (got {l_effective}, {l_straight})"
        )));
    }
    if !(delta_k > 0.0) || !delta_k.is_finite() {
        return Err(RpdcError::domain(format!(
            "ΔK must be positive, got {delta_k}"
        )));
    }
    Ok(delta_k * (l_straight - l_effective))
}
