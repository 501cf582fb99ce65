//! Single-mode polarization algebra.
//!
//! Basis convention: `|0⟩ = H`, `|1⟩ = V`. The Stokes parameters are defined
//! from paired projection probabilities,
//!
//! ```text
//! S0 = P_H + P_V
//! S1 = P_D - P_A      D = (|0⟩ + |1⟩)/√2
//! S2 = P_R - P_L      R = (|0⟩ + i|1⟩)/√2
//! S3 = P_H - P_V
//! ```
//!
//! so that `S1`, `S2`, `S3` pair with the Pauli operators `σx`, `σy`, `σz`
//! respectively and `ρ = ½ Σ (S_i/S_0) σ_i`.
//!
//! Everything here is 2×2 and written out by hand; there is no reason to
//! pull in a general linear-algebra package for it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RpdcError};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity and trace tolerance for [`DensityMatrix`].
pub const MATRIX_TOL: f64 = 1e-12;
/// Eigenvalues down to this value are accepted as non-negative.
pub const PSD_TOL: f64 = -1e-10;

/// Dense 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    /// Real rotation by `angle` radians (counter-clockwise).
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2([
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
    }

    /// Outer product `u v†`.
    pub fn outer(u: &JonesVector, v: &JonesVector) -> Self {
        Mat2([
            [u.h * v.h.conj(), u.h * v.v.conj()],
            [u.v * v.h.conj(), u.v * v.v.conj()],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector {
            h: m[0][0] * v.h + m[0][1] * v.v,
            v: m[1][0] * v.h + m[1][1] * v.v,
        }
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `‖A − B‖_max`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    /// `A ρ A†`.
    pub fn conjugate(&self, rho: &Mat2) -> Mat2 {
        *self * *rho * self.adjoint()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for (row, rrow) in out.0.iter_mut().zip(rhs.0.iter()) {
            for (x, y) in row.iter_mut().zip(rrow.iter()) {
                *x += *y;
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(C64::new(-1.0, 0.0))
    }
}

/// The identity and the three Pauli operators, indexed to match `S0..S3`.
pub struct PauliBasis;

impl PauliBasis {
    pub const SIGMA: [Mat2; 4] = [
        Mat2::IDENTITY,
        // σ1 = σx
        Mat2::new(ZERO, ONE, ONE, ZERO),
        // σ2 = σy
        Mat2::new(ZERO, C64::new(0.0, -1.0), I, ZERO),
        // σ3 = σz
        Mat2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0)),
    ];

    pub fn sigma(i: usize) -> Mat2 {
        Self::SIGMA[i]
    }
}

/// Complex field amplitudes along H and V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub h: C64,
    pub v: C64,
}

impl JonesVector {
    pub const fn new(h: C64, v: C64) -> Self {
        Self { h, v }
    }

    pub fn real(h: f64, v: f64) -> Self {
        Self::new(C64::new(h, 0.0), C64::new(v, 0.0))
    }

    /// Linear polarization at `angle` radians from H.
    pub fn linear(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::real(c, s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.h * s, self.v * s)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(RpdcError::domain(
                "Jones vector has zero or non-finite norm",
            ));
        }
        Ok(self.scale(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &JonesVector) -> C64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// The state orthogonal to `self` with the same norm.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.v.conj(), self.h.conj())
    }
}

/// Build the pure-state projector `v v† / ‖v‖²`.
pub fn jones_to_density(v: &JonesVector) -> Result<DensityMatrix> {
    let n = v.norm_sqr();
    if !(n > 0.0) || !n.is_finite() {
        return Err(RpdcError::domain(
            "cannot build a density matrix from a zero Jones vector",
        ));
    }
    let m = Mat2::outer(v, v).scale(C64::new(1.0 / n, 0.0));
    DensityMatrix::new(m)
}

/// The six eigenstates of the Pauli operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cardinal {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Cardinal {
    pub const ALL: [Cardinal; 6] = [
        Cardinal::H,
        Cardinal::V,
        Cardinal::D,
        Cardinal::A,
        Cardinal::R,
        Cardinal::L,
    ];

    pub fn jones(self) -> JonesVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Cardinal::H => JonesVector::real(1.0, 0.0),
            Cardinal::V => JonesVector::real(0.0, 1.0),
            Cardinal::D => JonesVector::real(s, s),
            Cardinal::A => JonesVector::real(s, -s),
            Cardinal::R => JonesVector::new(C64::new(s, 0.0), C64::new(0.0, s)),
            Cardinal::L => JonesVector::new(C64::new(s, 0.0), C64::new(0.0, -s)),
        }
    }

    pub fn density(self) -> DensityMatrix {
        jones_to_density(&self.jones()).expect("cardinal states are normalized")
    }

    pub fn label(self) -> &'static str {
        match self {
            Cardinal::H => "H",
            Cardinal::V => "V",
            Cardinal::D => "D",
            Cardinal::A => "A",
            Cardinal::R => "R",
            Cardinal::L => "L",
        }
    }
}

impl fmt::Display for Cardinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Stokes parameters in raw power units; normalization happens on conversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub const fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    /// Copy scaled so that `s0 = 1`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.s0 > 0.0) {
            return Err(RpdcError::domain(format!(
                "S0 must be positive, got {}",
                self.s0
            )));
        }
        let k = 1.0 / self.s0;
        Ok(Self::new(1.0, self.s1 * k, self.s2 * k, self.s3 * k))
    }

    /// `|S⃗| / S0`.
    pub fn degree_of_polarization(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt() / self.s0
    }

    pub fn is_physical(&self) -> bool {
        self.s0 > 0.0 && self.degree_of_polarization() <= 1.0 + 1e-9
    }

    /// Orientation angle ψ of the polarization ellipse, radians in (−π/2, π/2].
    ///
    /// Uses the convention of this crate where `S3` is the H/V difference and
    /// `S1` the D/A difference, so ψ is measured from H.
    pub fn orientation(&self) -> f64 {
        0.5 * self.s1.atan2(self.s3)
    }

    /// Ellipticity angle χ, radians in [−π/4, π/4]; positive for R.
    pub fn ellipticity(&self) -> f64 {
        let lin = (self.s1 * self.s1 + self.s3 * self.s3).sqrt();
        0.5 * self.s2.atan2(lin)
    }
}

/// 2×2 Hermitian, trace-one operator.
///
/// Positivity is not enforced at construction because the linear inversion
/// of noisy data legitimately produces non-PSD matrices; check with
/// [`DensityMatrix::is_psd`] or [`DensityMatrix::ensure_physical`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    m: Mat2,
}

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(RpdcError::domain("density matrix has non-finite entries"));
        }
        if m.max_abs_diff(&m.adjoint()) >= MATRIX_TOL {
            return Err(RpdcError::domain("density matrix is not Hermitian"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() >= MATRIX_TOL || tr.im.abs() >= MATRIX_TOL {
            return Err(RpdcError::domain(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        Ok(Self { m })
    }

    /// Symmetrize and renormalize `m` before validating. Meant for
    /// matrices assembled from floating-point arithmetic.
    pub fn from_unnormalized(m: Mat2) -> Result<Self> {
        let herm = (m + m.adjoint()).scale(C64::new(0.5, 0.0));
        let tr = herm.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(RpdcError::domain("matrix has non-positive trace"));
        }
        let mut n = herm.scale(C64::new(1.0 / tr, 0.0));
        n.0[0][0].im = 0.0;
        n.0[1][1].im = 0.0;
        Self::new(n)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Mat2::diag(C64::new(0.5, 0.0), C64::new(0.5, 0.0)),
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m.0[row][col]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m.0[0][0].re;
        let d = self.m.0[1][1].re;
        let b = self.m.0[0][1];
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues()[0] >= PSD_TOL
    }

    pub fn ensure_physical(&self) -> Result<()> {
        let [lo, _] = self.eigenvalues();
        if lo < PSD_TOL {
            return Err(RpdcError::domain(format!(
                "density matrix is not positive semidefinite (min eigenvalue {lo:e})"
            )));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &JonesVector) -> f64 {
        psi.inner(&self.m.apply(psi)).re / psi.norm_sqr()
    }

    /// Bloch vector `(tr ρσx, tr ρσy, tr ρσz)`.
    pub fn bloch(&self) -> [f64; 3] {
        let s = density_to_stokes(self);
        [s.s1, s.s2, s.s3]
    }

    /// Trace distance `½ ‖a − b‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let a = self.bloch();
        let b = other.bloch();
        0.5 * a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// `s_i = tr(ρ σ_i)` with `s0 = 1`.
pub fn density_to_stokes(rho: &DensityMatrix) -> StokesVector {
    let s = |i: usize| (rho.m * PauliBasis::sigma(i)).trace().re;
    StokesVector::new(s(0), s(1), s(2), s(3))
}

/// `ρ = ½ Σ (s_i/s_0) σ_i`. The result is Hermitian and trace-one but is
/// PSD only when `s1² + s2² + s3² ≤ s0²`.
pub fn stokes_to_density(s: &StokesVector) -> Result<DensityMatrix> {
    if !(s.s0 > 0.0) || !s.s0.is_finite() {
        return Err(RpdcError::domain(format!(
            "S0 must be positive, got {}",
            s.s0
        )));
    }
    let [_, x, y, z] = s.as_array().map(|v| v / s.s0);
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(RpdcError::domain("Stokes vector has non-finite entries"));
    }
    let m = Mat2::new(
        C64::new(0.5 * (1.0 + z), 0.0),
        C64::new(0.5 * x, -0.5 * y),
        C64::new(0.5 * x, 0.5 * y),
        C64::new(0.5 * (1.0 - z), 0.0),
    );
    DensityMatrix::new(m)
}

/// Uhlmann fidelity `(tr √(√a b √a))²`.
///
/// For qubits this reduces to `tr(ab) + 2√(det a · det b)`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.ensure_physical()?;
    b.ensure_physical()?;
    let overlap = (a.m * b.m).trace().re;
    let dets = (a.m.det().re.max(0.0) * b.m.det().re.max(0.0)).sqrt();
    Ok((overlap + 2.0 * dets).clamp(0.0, 1.0))
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.m * rho.m).trace().re
}
