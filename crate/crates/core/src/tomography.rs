//! Single-qubit polarization tomography with an RPDC as the analyzer.
//!
//! Each basis is measured as one two-outcome record: wave plates map the
//! basis onto the device's slow/fast axes and the two coupler ports are
//! read out together. `p0` is the cross port (slow-axis projection) and
//! `p1` the bar port.
//!
//! Analyzer wave-plate settings for a device whose slow axis sits at `α`
//! (QWP first, then HWP; angles of the plate's first eigenaxis):
//!
//! | basis | first state | QWP | HWP |
//! |-------|-------------|-----|-----|
//! | H/V   | H           | 0°  | α/2 |
//! | D/A   | D           | 45° | (α + 45°)/2 |
//! | R/L   | R           | 0°  | (α − 45°)/2 |
//!
//! The QWP leaves H/V and D/A in place and turns R into A; the HWP then
//! reflects the first state of each basis onto the slow axis.

use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::birefringence::rotated_phase_plate;
use crate::device::{port_matrices, RpdcDevice};
use crate::error::{Result, RpdcError};
use crate::polarization::{
    density_to_stokes, fidelity, stokes_to_density, Cardinal, DensityMatrix, JonesVector, Mat2,
    StokesVector, C64,
};
use crate::simplex::{self, SimplexConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    RL,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::RL];

    pub fn states(self) -> (Cardinal, Cardinal) {
        match self {
            Basis::HV => (Cardinal::H, Cardinal::V),
            Basis::DA => (Cardinal::D, Cardinal::A),
            Basis::RL => (Cardinal::R, Cardinal::L),
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Basis::HV => "HV",
            Basis::DA => "DA",
            Basis::RL => "RL",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "HV" => Some(Basis::HV),
            "DA" => Some(Basis::DA),
            "RL" => Some(Basis::RL),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.states();
        write!(f, "{a}/{b}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSettings {
    pub qwp_deg: f64,
    pub hwp_deg: f64,
}

impl WaveplateSettings {
    /// Plate angles that route `basis` onto a device with slow axis at `alpha_deg`.
    pub fn for_basis(basis: Basis, alpha_deg: f64) -> Self {
        let (qwp_deg, hwp_deg) = match basis {
            Basis::HV => (0.0, 0.5 * alpha_deg),
            Basis::DA => (45.0, 0.5 * (alpha_deg + 45.0)),
            Basis::RL => (0.0, 0.5 * (alpha_deg - 45.0)),
        };
        Self { qwp_deg, hwp_deg }
    }

    /// Combined Jones operator, QWP applied first.
    pub fn jones(&self) -> Mat2 {
        let qwp = rotated_phase_plate(self.qwp_deg, std::f64::consts::FRAC_PI_2);
        let hwp = rotated_phase_plate(self.hwp_deg, std::f64::consts::PI);
        hwp * qwp
    }
}

/// Port powers `(p0, p1)` = (cross, bar) for state `rho` behind the plates.
pub fn project_probabilities(
    rho: &DensityMatrix,
    device: &RpdcDevice,
    settings: &WaveplateSettings,
) -> Result<(f64, f64)> {
    let plates = settings.jones();
    let (a_t, a_r) = port_matrices(device)?;
    let p = |port: Mat2| (port * plates).conjugate(rho.matrix()).trace().re.max(0.0);
    Ok((p(a_t), p(a_r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub basis: Basis,
    pub p0: f64,
    pub p1: f64,
    /// Raw detector counts, used as likelihood weights when present.
    pub counts: Option<(u64, u64)>,
}

impl MeasurementRecord {
    pub fn new(basis: Basis, p0: f64, p1: f64) -> Result<Self> {
        let r = Self {
            basis,
            p0,
            p1,
            counts: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn from_counts(basis: Basis, n0: u64, n1: u64) -> Result<Self> {
        let r = Self {
            basis,
            p0: n0 as f64,
            p1: n1 as f64,
            counts: Some((n0, n1)),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.p0) || !ok(self.p1) {
            return Err(RpdcError::domain(format!(
                "{} record has invalid powers",
                self.basis
            )));
        }
        if !(self.p0 + self.p1 > 0.0) {
            return Err(RpdcError::domain(format!(
                "{} record has zero total power",
                self.basis
            )));
        }
        if let Some((n0, n1)) = self.counts {
            if n0 + n1 == 0 {
                return Err(RpdcError::domain(format!(
                    "{} record has zero counts",
                    self.basis
                )));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.p0 + self.p1
    }

    /// `(p0 − p1)/(p0 + p1)`.
    pub fn contrast(&self) -> f64 {
        (self.p0 - self.p1) / self.total()
    }

    fn weights(&self) -> (f64, f64) {
        match self.counts {
            Some((n0, n1)) => (n0 as f64, n1 as f64),
            None => (self.p0 / self.total(), self.p1 / self.total()),
        }
    }
}

/// Records indexed by basis; exactly one per basis.
fn complete_set(records: &[MeasurementRecord]) -> Result<[MeasurementRecord; 3]> {
    let mut slots: [Option<MeasurementRecord>; 3] = [None; 3];
    for r in records {
        r.validate()?;
        let slot = &mut slots[r.basis.index()];
        if slot.is_some() {
            return Err(RpdcError::DuplicateBasis(r.basis));
        }
        *slot = Some(*r);
    }
    let get = |b: Basis| slots[b.index()].ok_or(RpdcError::MissingBasis(b));
    Ok([get(Basis::HV)?, get(Basis::DA)?, get(Basis::RL)?])
}

/// Noiseless records of `rho` under ideal projectors.
pub fn born_records(rho: &DensityMatrix) -> [MeasurementRecord; 3] {
    Basis::ALL.map(|b| {
        let (s0, s1) = b.states();
        MeasurementRecord {
            basis: b,
            p0: rho.expectation(&s0.jones()),
            p1: rho.expectation(&s1.jones()),
            counts: None,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub stokes: StokesVector,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `rho` is positive semidefinite. Always true for MLE output.
    pub physical: bool,
    /// Log-likelihood after each optimizer iteration.
    #[serde(skip)]
    pub likelihood_history: Vec<f64>,
}

/// Stokes vector from paired differences, every record rescaled to the
/// H/V total so that unequal integration times do not bias the estimate.
fn linear_stokes(set: &[MeasurementRecord; 3]) -> StokesVector {
    let [hv, da, rl] = set;
    let s0 = hv.total();
    StokesVector::new(
        s0,
        s0 * da.contrast(),
        s0 * rl.contrast(),
        s0 * hv.contrast(),
    )
}

/// `Σ_records Σ_outcomes n·log p(ρ)` under ideal projectors; outcomes with
/// zero weight are skipped.
pub fn log_likelihood(rho: &DensityMatrix, records: &[MeasurementRecord]) -> f64 {
    records
        .iter()
        .map(|r| record_log_likelihood(rho.matrix(), r))
        .sum()
}

fn record_log_likelihood(rho: &Mat2, r: &MeasurementRecord) -> f64 {
    let (w0, w1) = r.weights();
    let (s0, s1) = r.basis.states();
    let prob = |s: &JonesVector| s.inner(&rho.apply(s)).re;
    let term = |w: f64, p: f64| {
        if w == 0.0 {
            0.0
        } else if p <= 0.0 {
            f64::NEG_INFINITY
        } else {
            w * p.ln()
        }
    };
    term(w0, prob(&s0.jones())) + term(w1, prob(&s1.jones()))
}

/// Direct inversion of the records. Noisy data can yield a non-PSD matrix;
/// that is reported through `physical`, not repaired.
pub fn linear_reconstruct(records: &[MeasurementRecord]) -> Result<TomographyResult> {
    let set = complete_set(records)?;
    let stokes = linear_stokes(&set);
    let rho = stokes_to_density(&stokes)?;
    Ok(TomographyResult {
        rho,
        stokes,
        log_likelihood: log_likelihood(&rho, &set),
        iterations: 0,
        converged: true,
        physical: rho.is_psd(),
        likelihood_history: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleConfig {
    pub simplex: SimplexConfig,
    /// Starting points are pulled inside the Bloch ball to at most this radius.
    pub max_start_radius: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            simplex: SimplexConfig::default(),
            max_start_radius: 0.98,
        }
    }
}

/// `ρ = T†T / tr(T†T)` for `T = [[x0, 0], [x2 + i·x3, x1]]`.
pub fn cholesky_density(x: &[f64]) -> Option<Mat2> {
    let norm: f64 = x.iter().map(|v| v * v).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let t = Mat2::new(
        C64::new(x[0], 0.0),
        C64::new(0.0, 0.0),
        C64::new(x[2], x[3]),
        C64::new(x[1], 0.0),
    );
    Some((t.adjoint() * t).scale(C64::new(1.0 / norm, 0.0)))
}

/// Inverse of [`cholesky_density`] for a positive-definite `rho`, scaled to
/// unit parameter norm.
fn cholesky_params(rho: &Mat2) -> Vec<f64> {
    let x1 = rho.0[1][1].re.sqrt();
    let c = rho.0[1][0] / x1;
    let x0 = (rho.0[0][0].re - c.norm_sqr()).max(0.0).sqrt();
    vec![x0, x1, c.re, c.im]
}

fn unit_norm(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter().map(|v| v / n).collect()
    } else {
        x.to_vec()
    }
}

/// Maximum-likelihood density matrix, physical by construction.
///
/// Minimizes the negative log-likelihood over the Cholesky parameters with
/// the restarted simplex search, starting from the linear estimate pulled
/// inside the Bloch ball. The parametrization is invariant under scaling of
/// the parameters, so the best point is rescaled to unit norm before every
/// restart.
pub fn mle_reconstruct(
    records: &[MeasurementRecord],
    config: &MleConfig,
) -> Result<TomographyResult> {
    let set = complete_set(records)?;
    let stokes_lin = linear_stokes(&set);

    let bloch = [stokes_lin.s1, stokes_lin.s2, stokes_lin.s3].map(|v| v / stokes_lin.s0);
    let r = bloch.iter().map(|v| v * v).sum::<f64>().sqrt();
    let shrink = if r > config.max_start_radius {
        config.max_start_radius / r
    } else {
        1.0
    };
    let start = stokes_to_density(&StokesVector::new(
        1.0,
        bloch[0] * shrink,
        bloch[1] * shrink,
        bloch[2] * shrink,
    ))?;
    let x0 = cholesky_params(start.matrix());

    let nll = |x: &[f64]| -> f64 {
        match cholesky_density(x) {
            Some(rho) => -set
                .iter()
                .map(|r| record_log_likelihood(&rho, r))
                .sum::<f64>(),
            None => f64::INFINITY,
        }
    };
    let out = simplex::minimize(nll, &x0, &config.simplex, unit_norm);

    let rho_m =
        cholesky_density(&out.x).ok_or_else(|| RpdcError::domain("optimizer collapsed to zero"))?;
    let rho = DensityMatrix::from_unnormalized(rho_m)?;
    let mut stokes = density_to_stokes(&rho);
    stokes = StokesVector::new(
        stokes_lin.s0,
        stokes.s1 * stokes_lin.s0,
        stokes.s2 * stokes_lin.s0,
        stokes.s3 * stokes_lin.s0,
    );
    let result = TomographyResult {
        rho,
        stokes,
        log_likelihood: -out.f,
        iterations: out.iterations,
        converged: out.converged,
        physical: rho.is_psd(),
        likelihood_history: out.history.iter().map(|f| -f).collect(),
    };
    if !out.converged {
        return Err(RpdcError::NotConverged {
            restarts: out.restarts,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Measurement noise for simulated experiments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Mean detected counts per basis; `None` gives noiseless powers.
    pub counts_per_basis: Option<u64>,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn poisson(counts_per_basis: u64, seed: u64) -> Self {
        Self {
            counts_per_basis: Some(counts_per_basis),
            seed,
        }
    }
}

/// Records of `true_state` measured through `device`, optionally with
/// Poisson counting noise.
pub fn simulate_records(
    true_state: &DensityMatrix,
    device: &RpdcDevice,
    noise: &NoiseConfig,
) -> Result<[MeasurementRecord; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = Vec::with_capacity(3);
    for basis in Basis::ALL {
        let settings = WaveplateSettings::for_basis(basis, device.alpha);
        let (p0, p1) = project_probabilities(true_state, device, &settings)?;
        let record = match noise.counts_per_basis {
            None => MeasurementRecord::new(basis, p0, p1)?,
            Some(n) => {
                let total = p0 + p1;
                let mut draw = |p: f64| -> u64 {
                    let mean = n as f64 * p / total;
                    if mean > 0.0 {
                        Poisson::new(mean)
                            .map(|d| d.sample(&mut rng) as u64)
                            .unwrap_or(0)
                    } else {
                        0
                    }
                };
                let (n0, n1) = (draw(p0), draw(p1));
                MeasurementRecord::from_counts(basis, n0, n1)?
            }
        };
        out.push(record);
    }
    Ok([out[0], out[1], out[2]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub fidelity: f64,
    pub records: [MeasurementRecord; 3],
    pub result: TomographyResult,
}

pub fn run_tomography_experiment(
    true_state: &DensityMatrix,
    device: &RpdcDevice,
    noise: &NoiseConfig,
    config: &MleConfig,
) -> Result<ExperimentOutcome> {
    true_state.ensure_physical()?;
    let records = simulate_records(true_state, device, noise)?;
    let result = mle_reconstruct(&records, config)?;
    Ok(ExperimentOutcome {
        fidelity: fidelity(&result.rho, true_state)?,
        records,
        result,
    })
}

/// Parse the `basis,p0,p1[,n0,n1]` measurement CSV. Lines starting with `#`
/// are ignored.
pub fn read_measurements_csv(reader: impl Read) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let header_record = rdr.headers()?.clone();
    let header_line = header_record.position().map_or(1, |p| p.line());
    let headers: Vec<String> = header_record.iter().map(str::to_owned).collect();
    let with_counts = match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["basis", "p0", "p1"] => false,
        ["basis", "p0", "p1", "n0", "n1"] => true,
        _ => {
            return Err(RpdcError::Parse {
                line: header_line,
                message: format!(
                    "expected header `basis,p0,p1[,n0,n1]`, found `{}`",
                    headers.join(",")
                ),
            })
        }
    };
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| RpdcError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let perr = |message: String| RpdcError::Parse { line, message };
        let basis = Basis::from_code(&record[0]).ok_or_else(|| {
            perr(format!(
                "unknown basis `{}` (expected HV, DA or RL)",
                &record[0]
            ))
        })?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| perr(format!("invalid number `{}`", &record[i])))
        };
        let counts = if with_counts && !record[3].is_empty() {
            let int = |i: usize| -> Result<u64> {
                record[i]
                    .parse::<u64>()
                    .map_err(|_| perr(format!("invalid count `{}`", &record[i])))
            };
            Some((int(3)?, int(4)?))
        } else {
            None
        };
        let m = MeasurementRecord {
            basis,
            p0: num(1)?,
            p1: num(2)?,
            counts,
        };
        m.validate().map_err(|e| perr(e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

pub fn read_measurements_path(path: impl AsRef<Path>) -> Result<Vec<MeasurementRecord>> {
    read_measurements_csv(std::fs::File::open(path)?)
}

/// Serialized reconstruction: `rho` is row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub rho: [[f64; 2]; 4],
    pub stokes: [f64; 4],
    pub fidelity: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl ResultJson {
    pub fn new(result: &TomographyResult, fidelity: Option<f64>) -> Self {
        let m = result.rho.matrix().0;
        let flat = [m[0][0], m[0][1], m[1][0], m[1][1]].map(|z| [z.re, z.im]);
        Self {
            rho: flat,
            stokes: result.stokes.as_array(),
            fidelity,
            converged: result.converged,
            iterations: result.iterations,
        }
    }
}
