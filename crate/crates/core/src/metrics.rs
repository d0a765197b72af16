//! Observables of Gaussian states: occupancies, entanglement, Wigner
//! functions and fidelities. Vacuum has covariance I/2 throughout.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::Mode;
use crate::solver::GaussianState;

/// Mean excitation number of one mode, including the coherent part.
pub fn occupancy(state: &GaussianState, mode: Mode) -> Result<f64> {
    let (mu, v) = state.mode_moments(mode)?;
    Ok((v[(0, 0)] + v[(1, 1)] - 1.0) / 2.0 + (mu[0] * mu[0] + mu[1] * mu[1]) / 2.0)
}

/// Smallest quadrature variance of a mode over all phase-space angles.
pub fn min_quadrature_variance(state: &GaussianState, mode: Mode) -> Result<f64> {
    let (_, v) = state.mode_moments(mode)?;
    Ok(v.symmetric_eigenvalues().min())
}

/// Logarithmic negativity between two modes (natural log).
pub fn log_negativity(state: &GaussianState, mode_a: Mode, mode_b: Mode) -> Result<f64> {
    let v = state.two_mode_cov(mode_a, mode_b)?;
    GaussianState::new(vec![mode_a, mode_b], DVector::zeros(4), v.clone())?.check_physical()?;
    let det2 = |r: usize, c: usize| v[(r, c)] * v[(r + 1, c + 1)] - v[(r, c + 1)] * v[(r + 1, c)];
    let det_a = det2(0, 0);
    let det_b = det2(2, 2);
    let det_c = det2(0, 2);
    let det_v = v.determinant();

    let sigma = det_a + det_b - 2.0 * det_c;
    let disc = sigma * sigma - 4.0 * det_v;
    if disc < -1e-9 * sigma * sigma || !(sigma > 0.0) {
        return Err(Error::InvalidState(format!(
            "partially transposed covariance has complex symplectic spectrum (Σ = {sigma:e}, disc = {disc:e})"
        )));
    }
    // ν̃₋² = (Σ − √disc)/2, rewritten to avoid cancellation when det V ≪ Σ².
    let nu2 = 2.0 * det_v / (sigma + disc.max(0.0).sqrt());
    let e = -(2.0 * nu2.max(0.0).sqrt()).ln();
    // Product of pure states lands on ν̃₋ = 1/2 up to rounding.
    Ok(if e > 1e-12 { e } else { 0.0 })
}

/// Preparation recipe for a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSpec {
    Vacuum,
    Thermal { n: f64 },
    /// Squeezed vacuum; `angle` rotates the squeezed axis away from x.
    Squeezed { r: f64, angle: f64 },
}

impl ModeSpec {
    pub fn covariance(&self) -> Result<Matrix2<f64>> {
        match *self {
            ModeSpec::Vacuum => Ok(Matrix2::identity() * 0.5),
            ModeSpec::Thermal { n } => {
                if !(n >= 0.0) || !n.is_finite() {
                    return Err(Error::param(format!("thermal occupancy must be >= 0, got {n}")));
                }
                Ok(Matrix2::identity() * (n + 0.5))
            }
            ModeSpec::Squeezed { r, angle } => {
                if !r.is_finite() || !angle.is_finite() {
                    return Err(Error::param("squeezing parameters must be finite"));
                }
                let (s, c) = angle.sin_cos();
                let rot = Matrix2::new(c, -s, s, c);
                let d = Matrix2::new((-2.0 * r).exp() / 2.0, 0.0, 0.0, (2.0 * r).exp() / 2.0);
                Ok(rot * d * rot.transpose())
            }
        }
    }
}

/// Block-diagonal product state with zero mean.
pub fn prepare_product_state(specs: &[(Mode, ModeSpec)]) -> Result<GaussianState> {
    let n = specs.len();
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for (k, (_, spec)) in specs.iter().enumerate() {
        cov.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(&spec.covariance()?);
    }
    let labels = specs.iter().map(|(m, _)| *m).collect();
    GaussianState::new(labels, DVector::zeros(2 * n), cov)
}

/// Phase-space rotation of one mode, o → o·e^{−iφ}.
pub fn rotate_mode(state: &GaussianState, mode: Mode, phi: f64) -> Result<GaussianState> {
    let k = 2 * state.index_of(mode)?;
    let dim = state.cov.nrows();
    let (s, c) = phi.sin_cos();
    let mut r = DMatrix::<f64>::identity(dim, dim);
    r[(k, k)] = c;
    r[(k, k + 1)] = s;
    r[(k + 1, k)] = -s;
    r[(k + 1, k + 1)] = c;
    let cov = &r * &state.cov * r.transpose();
    GaussianState::new(state.labels.clone(), &r * &state.mean, (&cov + cov.transpose()) * 0.5)
}

/// Single-mode Gaussian state extracted from a larger state, relabelled.
pub fn reduced_state(state: &GaussianState, mode: Mode, label: Mode) -> Result<GaussianState> {
    let (mu, v) = state.mode_moments(mode)?;
    GaussianState::new(
        vec![label],
        DVector::from_column_slice(mu.as_slice()),
        DMatrix::from_column_slice(2, 2, v.as_slice()),
    )
}

fn check_single_mode(v: &Matrix2<f64>) -> Result<()> {
    let det = v.determinant();
    if !(v[(0, 0)] > 0.0) || !(v[(1, 1)] > 0.0) || det < 0.25 * (1.0 - 1e-9) {
        return Err(Error::InvalidState(format!(
            "single-mode covariance violates det V >= 1/4 (det = {det:e})"
        )));
    }
    Ok(())
}

/// Fidelity between the reduced states of `mode` in `s1` and `s2`.
pub fn gaussian_fidelity(s1: &GaussianState, s2: &GaussianState, mode: Mode) -> Result<f64> {
    let (mu1, v1) = s1.mode_moments(mode)?;
    let (mu2, v2) = s2.mode_moments(mode)?;
    fidelity_moments(&mu1, &v1, &mu2, &v2)
}

/// Single-mode Gaussian fidelity from reduced moments:
/// F = exp(−½ δμᵀ(V₁+V₂)⁻¹δμ) / (√(Δ + δ) − √δ) with Δ = det(V₁+V₂) and
/// δ = 4(det V₁ − ¼)(det V₂ − ¼).
pub fn fidelity_moments(
    mu1: &Vector2<f64>,
    v1: &Matrix2<f64>,
    mu2: &Vector2<f64>,
    v2: &Matrix2<f64>,
) -> Result<f64> {
    check_single_mode(v1)?;
    check_single_mode(v2)?;
    let sum = v1 + v2;
    let big_delta = sum.determinant();
    let small_delta = (4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25)).max(0.0);
    let inv = sum
        .try_inverse()
        .ok_or_else(|| Error::InvalidState("V₁ + V₂ is singular".into()))?;
    let dmu = mu1 - mu2;
    let displacement = (-0.5 * dmu.dot(&(inv * dmu))).exp();
    let f = displacement / ((big_delta + small_delta).sqrt() - small_delta.sqrt());
    Ok(f.min(1.0))
}

/// Axis-aligned sampling grid for [`wigner`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub points: usize,
}

impl GridSpec {
    /// Square grid spanning `n_sigma` of the widest quadrature around the mean.
    pub fn around(state: &GaussianState, mode: Mode, n_sigma: f64, points: usize) -> Result<Self> {
        let (mu, v) = state.mode_moments(mode)?;
        let half = n_sigma * v.symmetric_eigenvalues().max().sqrt();
        Ok(GridSpec {
            x_range: (mu[0] - half, mu[0] + half),
            p_range: (mu[1] - half, mu[1] + half),
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)]` is W(x_axis[i], p_axis[j]).
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    /// Riemann-sum integral over the grid.
    pub fn mass(&self) -> f64 {
        let dx = self.x_axis[1] - self.x_axis[0];
        let dp = self.p_axis[1] - self.p_axis[0];
        self.values.sum() * dx * dp
    }

    pub fn peak(&self) -> f64 {
        self.values.max()
    }
}

pub fn wigner(state: &GaussianState, mode: Mode, grid: &GridSpec) -> Result<WignerGrid> {
    if grid.points < 2 {
        return Err(Error::param("Wigner grid needs at least two points per axis"));
    }
    let (mu, v) = state.mode_moments(mode)?;
    let det = v.determinant();
    let inv = match v.try_inverse() {
        Some(inv) if det > 0.0 => inv,
        _ => return Err(Error::InvalidState(format!("reduced covariance of {mode} is singular"))),
    };
    let axis = |(lo, hi): (f64, f64)| crate::response::linspace(lo, hi, grid.points);
    let x_axis = axis(grid.x_range);
    let p_axis = axis(grid.p_range);
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let values = DMatrix::from_fn(x_axis.len(), p_axis.len(), |i, j| {
        let d = Vector2::new(x_axis[i] - mu[0], p_axis[j] - mu[1]);
        norm * (-0.5 * d.dot(&(inv * d))).exp()
    });
    Ok(WignerGrid { x_axis, p_axis, values })
}

/// Principal axes of a single-mode covariance: standard deviations along the
/// narrow and wide axes, and the angle of the narrow axis from x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub minor: f64,
    pub major: f64,
    pub angle: f64,
}

impl Ellipse {
    pub fn aspect(&self) -> f64 {
        self.major / self.minor
    }
}

pub fn ellipse(state: &GaussianState, mode: Mode) -> Result<Ellipse> {
    let (_, v) = state.mode_moments(mode)?;
    let eig = v.symmetric_eigen();
    let (i_min, i_max) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let axis = eig.eigenvectors.column(i_min);
    let mut angle = axis[1].atan2(axis[0]);
    // Axes are undirected: fold into (−π/2, π/2].
    if angle > PI / 2.0 {
        angle -= PI;
    } else if angle <= -PI / 2.0 {
        angle += PI;
    }
    Ok(Ellipse {
        minor: eig.eigenvalues[i_min].max(0.0).sqrt(),
        major: eig.eigenvalues[i_max].max(0.0).sqrt(),
        angle,
    })
}
