//! Drift and diffusion matrices of the linearized fluctuation equations.
//!
//! Quadratures follow x = (o + o†)/√2, p = −i(o − o†)/√2 for every mode, so
//! vacuum has variance 1/2 per quadrature. Quadrature vectors are ordered
//! (x₁, p₁, x₂, p₂, …) following the mode labels of the model.

use std::fmt;
use std::str::FromStr;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derived_rates, SystemParams};

/// Bosonic modes of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Ground-state coherence c₂.
    Coherence,
    /// Optical dipole c₃.
    Dipole,
    /// Cavity field a.
    Cavity,
    /// Mechanical mode b.
    Mirror,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Coherence => "c2",
            Mode::Dipole => "c3",
            Mode::Cavity => "a",
            Mode::Mirror => "b",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c2" => Ok(Mode::Coherence),
            "c3" => Ok(Mode::Dipole),
            "a" => Ok(Mode::Cavity),
            "b" => Ok(Mode::Mirror),
            other => Err(Error::NotFound(other.to_string())),
        }
    }
}

/// Linear equations ȯ = M·o + N·o* for a set of complex mode amplitudes,
/// with white input noise on each mode.
#[derive(Debug, Clone)]
pub struct ComplexDynamics {
    pub modes: Vec<Mode>,
    /// Coefficients multiplying the mode amplitudes.
    pub direct: DMatrix<Complex64>,
    /// Coefficients multiplying the conjugate amplitudes.
    pub conjugate: DMatrix<Complex64>,
    /// Noise strength per mode as (u, v), with ⟨o_in o_in†⟩ = 2u·δ(t−t′) and
    /// ⟨o_in† o_in⟩ = 2v·δ(t−t′).
    pub noise: Vec<(f64, f64)>,
}

impl ComplexDynamics {
    fn zeros(modes: Vec<Mode>) -> Self {
        let n = modes.len();
        ComplexDynamics {
            modes,
            direct: DMatrix::zeros(n, n),
            conjugate: DMatrix::zeros(n, n),
            noise: vec![(0.0, 0.0); n],
        }
    }

    /// Right-hand side M·z + N·z̄ of the noiseless complex equations.
    pub fn rhs(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.modes.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.direct[(i, j)] * z[j] + self.conjugate[(i, j)] * z[j].conj())
                    .sum()
            })
            .collect()
    }

    pub fn to_model(&self) -> LinearModel {
        let n = self.modes.len();
        let mut drift = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let sum = self.direct[(i, j)] + self.conjugate[(i, j)];
                let diff = self.direct[(i, j)] - self.conjugate[(i, j)];
                drift[(2 * i, 2 * j)] = sum.re;
                drift[(2 * i, 2 * j + 1)] = -diff.im;
                drift[(2 * i + 1, 2 * j)] = sum.im;
                drift[(2 * i + 1, 2 * j + 1)] = diff.re;
            }
        }
        let mut diffusion = DMatrix::zeros(2 * n, 2 * n);
        for (i, &(u, v)) in self.noise.iter().enumerate() {
            diffusion[(2 * i, 2 * i)] = u + v;
            diffusion[(2 * i + 1, 2 * i + 1)] = u + v;
        }
        LinearModel { labels: self.modes.clone(), drift, diffusion }
    }
}

/// Drift A and diffusion D with dV/dt = A·V + V·Aᵀ + D.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub labels: Vec<Mode>,
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(labels: Vec<Mode>, drift: DMatrix<f64>, diffusion: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * labels.len();
        if drift.shape() != (dim, dim) || diffusion.shape() != (dim, dim) {
            return Err(Error::param(format!(
                "{} modes need {dim}x{dim} matrices, got drift {:?} and diffusion {:?}",
                labels.len(),
                drift.shape(),
                diffusion.shape()
            )));
        }
        Ok(LinearModel { labels, drift, diffusion })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        self.labels.iter().position(|&m| m == mode)
    }
}

/// Which set of equations to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTier {
    /// Four modes (c₂, c₃, a, b), no rotating-wave approximation.
    Full,
    /// Reduced (c̃₂, b̃) beamsplitter model on the anti-Stokes sideband.
    RwaAntiStokes,
    /// Reduced (c̃₂, b̃) down-conversion model on the Stokes sideband.
    RwaStokes,
    /// Cavity and mirror only, no atoms.
    Bare,
}

impl ModelTier {
    pub fn dynamics(&self, p: &SystemParams) -> Result<ComplexDynamics> {
        match self {
            ModelTier::Full => full_dynamics(p),
            ModelTier::RwaAntiStokes => rwa_dynamics(p, false),
            ModelTier::RwaStokes => rwa_dynamics(p, true),
            ModelTier::Bare => bare_dynamics(p),
        }
    }

    pub fn build(&self, p: &SystemParams) -> Result<LinearModel> {
        Ok(self.dynamics(p)?.to_model())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelTier::Full => "full",
            ModelTier::RwaAntiStokes => "rwa-anti-stokes",
            ModelTier::RwaStokes => "rwa-stokes",
            ModelTier::Bare => "bare",
        }
    }
}

impl fmt::Display for ModelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelTier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModelTier::Full),
            "rwa-anti-stokes" => Ok(ModelTier::RwaAntiStokes),
            "rwa-stokes" => Ok(ModelTier::RwaStokes),
            "bare" => Ok(ModelTier::Bare),
            other => Err(Error::Config(format!(
                "unknown model tier `{other}` (expected full | rwa-anti-stokes | rwa-stokes | bare)"
            ))),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn full_dynamics(p: &SystemParams) -> Result<ComplexDynamics> {
    p.validate()?;
    const C2: usize = 0;
    const C3: usize = 1;
    const A: usize = 2;
    const B: usize = 3;
    let g_n = p.collective_coupling();
    let big_g = p.om_coupling;
    let mut dy = ComplexDynamics::zeros(vec![Mode::Coherence, Mode::Dipole, Mode::Cavity, Mode::Mirror]);
    let m = &mut dy.direct;
    let n = &mut dy.conjugate;

    m[(C2, C2)] = c(-p.coherence_decay, -p.two_photon_detuning);
    m[(C2, C3)] = c(0.0, p.control_rabi);

    m[(C3, C3)] = c(-p.dipole_decay, -p.one_photon_detuning);
    m[(C3, A)] = c(0.0, g_n);
    m[(C3, C2)] = c(0.0, p.control_rabi);

    m[(A, A)] = c(-p.cavity_decay, -p.cavity_detuning);
    m[(A, C3)] = c(0.0, g_n);
    m[(A, B)] = c(0.0, big_g);
    n[(A, B)] = c(0.0, big_g);

    // Radiation pressure enters as iG(δa + δa†); the Brownian damping keeps
    // its non-rotating-wave +γ_m b† part.
    m[(B, B)] = c(-p.mech_damping, -p.mech_freq);
    n[(B, B)] = c(p.mech_damping, 0.0);
    m[(B, A)] = c(0.0, big_g);
    n[(B, A)] = c(0.0, big_g);

    dy.noise[C2] = (p.coherence_decay, 0.0);
    dy.noise[C3] = (p.dipole_decay, 0.0);
    dy.noise[A] = (p.cavity_decay, 0.0);
    dy.noise[B] = (
        p.mech_damping * (p.bath_occupancy + 1.0),
        p.mech_damping * p.bath_occupancy,
    );
    Ok(dy)
}

fn rwa_dynamics(p: &SystemParams, stokes: bool) -> Result<ComplexDynamics> {
    let r = derived_rates(p)?;
    let g = r.effective_coupling;
    let atom_decay = p.coherence_decay + r.pumping_rate_norm;
    let mirror_decay = p.mech_damping + r.optical_rate_norm;

    let mut dy = ComplexDynamics::zeros(vec![Mode::Coherence, Mode::Mirror]);
    dy.direct[(0, 0)] = c(-atom_decay, 0.0);
    dy.direct[(1, 1)] = c(-mirror_decay, 0.0);
    if stokes {
        // g(b†c₂† + b c₂): ċ₂ ∋ −i g b†, ḃ ∋ −i g c₂†
        dy.conjugate[(0, 1)] = c(0.0, -g);
        dy.conjugate[(1, 0)] = c(0.0, -g);
    } else {
        // g(b†c₂ + b c₂†): ċ₂ ∋ −i g b, ḃ ∋ −i g c₂
        dy.direct[(0, 1)] = c(0.0, -g);
        dy.direct[(1, 0)] = c(0.0, -g);
    }
    dy.noise[0] = (atom_decay, 0.0);
    dy.noise[1] = (
        r.optical_rate_norm + p.mech_damping * (p.bath_occupancy + 1.0),
        p.mech_damping * p.bath_occupancy,
    );
    Ok(dy)
}

fn bare_dynamics(p: &SystemParams) -> Result<ComplexDynamics> {
    let no_atoms = SystemParams { atom_coupling: 0.0, ..*p };
    let full = full_dynamics(&no_atoms)?;
    let keep = [2usize, 3];
    let mut dy = ComplexDynamics::zeros(vec![Mode::Cavity, Mode::Mirror]);
    for (i, &fi) in keep.iter().enumerate() {
        for (j, &fj) in keep.iter().enumerate() {
            dy.direct[(i, j)] = full.direct[(fi, fj)];
            dy.conjugate[(i, j)] = full.conjugate[(fi, fj)];
        }
        dy.noise[i] = full.noise[fi];
    }
    Ok(dy)
}

pub fn build_full(p: &SystemParams) -> Result<LinearModel> {
    ModelTier::Full.build(p)
}

pub fn build_rwa_anti_stokes(p: &SystemParams) -> Result<LinearModel> {
    ModelTier::RwaAntiStokes.build(p)
}

pub fn build_rwa_stokes(p: &SystemParams) -> Result<LinearModel> {
    ModelTier::RwaStokes.build(p)
}

pub fn build_bare(p: &SystemParams) -> Result<LinearModel> {
    ModelTier::Bare.build(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// Largest real part among the drift eigenvalues (rad/s).
    pub abscissa: f64,
    pub stable: bool,
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !a.is_square() || a.is_empty() {
        return Err(Error::NumericFailure("drift matrix is not square".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure("drift matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericFailure("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().cloned().collect())
}

/// Spectral abscissa of a drift matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Largest |Re λ| among the drift eigenvalues.
pub fn fastest_decay(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re.abs()).fold(0.0, f64::max))
}

pub fn stability(model: &LinearModel) -> Result<Stability> {
    let abscissa = spectral_abscissa(&model.drift)?;
    Ok(Stability { abscissa, stable: abscissa < 0.0 })
}

/// Relative tolerance of the bisection in [`instability_threshold`].
pub const THRESHOLD_RTOL: f64 = 1e-4;

/// Grid points scanned before bisecting in [`instability_threshold`].
pub const THRESHOLD_SCAN_POINTS: usize = 200;

/// Smallest coupling G in `g_range = (lo, hi)` at which the model built by
/// `tier` loses stability. Stability need not be monotonic in G, so the range
/// is scanned (log-spaced when lo > 0) for the first unstable point, which is
/// then bracketed by bisection. Unstable windows narrower than the scan
/// spacing can be missed.
pub fn instability_threshold(p: &SystemParams, tier: ModelTier, g_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = g_range;
    if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::param(format!("bad coupling range [{lo}, {hi}]")));
    }
    let abscissa_at = |g: f64| -> Result<f64> {
        let q = SystemParams { om_coupling: g, ..*p };
        spectral_abscissa(&tier.build(&q)?.drift)
    };
    if abscissa_at(lo)? >= 0.0 {
        return Err(Error::NoThreshold { lo, hi });
    }
    let n = THRESHOLD_SCAN_POINTS;
    let grid: Vec<f64> = if lo > 0.0 {
        (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
    } else {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let mut stable_at = lo;
    let mut unstable_at = None;
    for &g in &grid[1..] {
        if abscissa_at(g)? >= 0.0 {
            unstable_at = Some(g);
            break;
        }
        stable_at = g;
    }
    let (mut a, mut b) = match unstable_at {
        Some(g) => (stable_at, g),
        None => return Err(Error::NoThreshold { lo, hi }),
    };
    while (b - a) > THRESHOLD_RTOL * b {
        let mid = 0.5 * (a + b);
        if abscissa_at(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
