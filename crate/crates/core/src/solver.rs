//! Gaussian moments: steady-state Lyapunov solutions and exact time stepping.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linsys::{spectral_abscissa, stability, LinearModel, Mode};

/// Tolerance on the symplectic uncertainty relation, relative to
/// max(1, largest covariance entry).
pub const UNCERTAINTY_TOL: f64 = 1e-9;

/// Quadrature means and symmetrized covariance of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub labels: Vec<Mode>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(labels: Vec<Mode>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * labels.len();
        if mean.len() != dim || cov.shape() != (dim, dim) {
            return Err(Error::InvalidState(format!(
                "{} modes need a length-{dim} mean and {dim}x{dim} covariance",
                labels.len()
            )));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidState("covariance is not symmetric".into()));
        }
        Ok(GaussianState { labels, mean, cov })
    }

    pub fn vacuum(labels: Vec<Mode>) -> Self {
        let dim = 2 * labels.len();
        GaussianState {
            labels,
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * 0.5,
        }
    }

    pub fn index_of(&self, mode: Mode) -> Result<usize> {
        self.labels
            .iter()
            .position(|&m| m == mode)
            .ok_or_else(|| Error::NotFound(mode.label().to_string()))
    }

    /// Reduced single-mode moments.
    pub fn mode_moments(&self, mode: Mode) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        let k = 2 * self.index_of(mode)?;
        let mu = Vector2::new(self.mean[k], self.mean[k + 1]);
        let v = self.cov.fixed_view::<2, 2>(k, k).into_owned();
        Ok((mu, v))
    }

    /// Reduced 4×4 covariance of two modes, ordered (mode_a, mode_b).
    pub fn two_mode_cov(&self, mode_a: Mode, mode_b: Mode) -> Result<DMatrix<f64>> {
        let ia = 2 * self.index_of(mode_a)?;
        let ib = 2 * self.index_of(mode_b)?;
        let idx = [ia, ia + 1, ib, ib + 1];
        Ok(DMatrix::from_fn(4, 4, |r, c| self.cov[(idx[r], idx[c])]))
    }

    /// Smallest eigenvalue of V + (i/2)Ω_s.
    pub fn uncertainty_margin(&self) -> f64 {
        let dim = self.cov.nrows();
        let h = DMatrix::<Complex64>::from_fn(dim, dim, |r, c| {
            let sym = if r / 2 != c / 2 {
                0.0
            } else if r % 2 == 0 && c == r + 1 {
                0.5
            } else if r % 2 == 1 && c + 1 == r {
                -0.5
            } else {
                0.0
            };
            Complex64::new(self.cov[(r, c)], sym)
        });
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks the uncertainty relation V + (i/2)Ω_s ⪰ 0.
    pub fn check_physical(&self) -> Result<()> {
        let margin = self.uncertainty_margin();
        let tol = UNCERTAINTY_TOL * self.cov.amax().max(1.0);
        if margin < -tol {
            return Err(Error::InvalidState(format!(
                "uncertainty relation violated (min eigenvalue {margin:e})"
            )));
        }
        Ok(())
    }
}

fn kron_sum(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    id.kronecker(a) + a.kronecker(&id)
}

/// Rounds of iterative refinement in [`solve_lyapunov`].
const REFINEMENT_ROUNDS: usize = 4;

/// Solves A·V + V·Aᵀ + D = 0 by Kronecker vectorization, followed by
/// iterative refinement while the residual keeps shrinking. Does not check
/// stability.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lu = kron_sum(a).lu();
    let residual = |v: &DMatrix<f64>| a * v + v * a.transpose() + d;
    let sym = |x: &DVector<f64>| {
        let v = DMatrix::from_column_slice(n, n, x.as_slice());
        (&v + v.transpose()) * 0.5
    };
    let x = lu
        .solve(&DVector::from_column_slice((-d).as_slice()))
        .ok_or_else(|| Error::NumericFailure("singular Lyapunov operator".into()))?;
    let mut v = sym(&x);
    let mut res = residual(&v);
    for _ in 0..REFINEMENT_ROUNDS {
        let Some(dx) = lu.solve(&DVector::from_column_slice((-&res).as_slice())) else { break };
        let candidate = &v + sym(&dx);
        let next = residual(&candidate);
        if next.norm() >= res.norm() {
            break;
        }
        v = candidate;
        res = next;
    }
    Ok(v)
}

/// ‖AV + VAᵀ + D‖_F / max(‖D‖_F, ε).
pub fn lyapunov_residual(model: &LinearModel, v: &DMatrix<f64>) -> f64 {
    let a = &model.drift;
    let r = a * v + v * a.transpose() + &model.diffusion;
    r.norm() / model.diffusion.norm().max(f64::EPSILON)
}

/// Stationary state of a stable model (zero mean).
pub fn steady_covariance(model: &LinearModel) -> Result<GaussianState> {
    let s = stability(model)?;
    if !s.stable {
        return Err(Error::UnstableSystem { abscissa: s.abscissa });
    }
    let v = solve_lyapunov(&model.drift, &model.diffusion)?;
    GaussianState::new(model.labels.clone(), DVector::zeros(model.dim()), v)
}

/// One-step map μ → Φμ, V → ΦVΦᵀ + Q for a fixed step.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub step: f64,
    pub transition: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

/// Largest ‖A‖₁·h used in the augmented exponential before doubling.
const VAN_LOAN_NORM: f64 = 0.5;

impl Propagator {
    /// Builds e^{A·dt} and Q(dt) = ∫₀^dt e^{As} D e^{Aᵀs} ds. The integral comes
    /// from the exponential of [[A, D], [0, −Aᵀ]] on a sub-step small enough for
    /// the −Aᵀ block not to overflow, then doubled back up to dt.
    pub fn new(model: &LinearModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param(format!("time step must be > 0, got {dt}")));
        }
        let a = &model.drift;
        let n = a.nrows();
        let norm1 = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
        let doublings = if norm1 * dt > VAN_LOAN_NORM {
            (norm1 * dt / VAN_LOAN_NORM).log2().ceil() as u32
        } else {
            0
        };
        let h = dt / 2f64.powi(doublings as i32);

        let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
        aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
        aug.view_mut((0, n), (n, n)).copy_from(&(&model.diffusion * h));
        aug.view_mut((n, n), (n, n)).copy_from(&(-a.transpose() * h));
        let e = aug.exp();
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("matrix exponential overflowed".into()));
        }
        let mut phi = e.view((0, 0), (n, n)).into_owned();
        let mut q = e.view((0, n), (n, n)) * phi.transpose();
        q = (&q + q.transpose()) * 0.5;

        for _ in 0..doublings {
            q = &q + &phi * &q * phi.transpose();
            q = (&q + q.transpose()) * 0.5;
            phi = &phi * &phi;
        }
        if phi.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("propagator is not finite".into()));
        }
        Ok(Propagator { step: dt, transition: phi, noise: q })
    }

    pub fn apply(&self, state: &GaussianState) -> GaussianState {
        let phi = &self.transition;
        let mean = phi * &state.mean;
        let v = phi * &state.cov * phi.transpose() + &self.noise;
        GaussianState {
            labels: state.labels.clone(),
            mean,
            cov: (&v + v.transpose()) * 0.5,
        }
    }
}

/// Default step min(1/(50·max|Re λ|), t_final/1000).
pub fn default_step(model: &LinearModel, t_final: f64) -> Result<f64> {
    let fastest = crate::linsys::fastest_decay(&model.drift)?;
    let by_rate = if fastest > 0.0 { 1.0 / (50.0 * fastest) } else { f64::INFINITY };
    Ok(by_rate.min(t_final / 1000.0))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &GaussianState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Sample closest to `t`.
    pub fn nearest(&self, t: f64) -> (f64, &GaussianState) {
        let i = (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .expect("trajectory holds the initial state");
        (self.times[i], &self.states[i])
    }

    /// Indices of at most `max_samples` evenly spread samples, always keeping
    /// the first and last.
    pub fn decimated_indices(&self, max_samples: usize) -> Vec<usize> {
        let n = self.times.len();
        if n <= max_samples || max_samples < 2 {
            return (0..n).collect();
        }
        let mut idx: Vec<usize> = (0..max_samples)
            .map(|k| ((k as f64) * (n - 1) as f64 / (max_samples - 1) as f64).round() as usize)
            .collect();
        idx.dedup();
        idx
    }
}

/// Propagates `initial` to `t_final`. The step (default [`default_step`]) is
/// shrunk so an integer number of steps ends exactly at `t_final`.
pub fn propagate(
    model: &LinearModel,
    initial: &GaussianState,
    t_final: f64,
    dt: Option<f64>,
) -> Result<Trajectory> {
    if initial.labels != model.labels {
        return Err(Error::InvalidState("initial state modes differ from the model".into()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::param(format!("t_final must be >= 0, got {t_final}")));
    }
    initial.check_physical()?;
    if t_final == 0.0 {
        return Ok(Trajectory { times: vec![0.0], states: vec![initial.clone()] });
    }
    let dt = match dt {
        Some(dt) => dt,
        None => default_step(model, t_final)?,
    };
    if !(dt > 0.0) {
        return Err(Error::param(format!("time step must be > 0, got {dt}")));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let prop = Propagator::new(model, t_final / steps as f64)?;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.clone());
    for k in 1..=steps {
        let next = prop.apply(states.last().unwrap());
        times.push(if k == steps { t_final } else { k as f64 * prop.step });
        states.push(next);
    }
    Ok(Trajectory { times, states })
}

/// Convenience for checks: abscissa of the model drift.
pub fn abscissa(model: &LinearModel) -> Result<f64> {
    spectral_abscissa(&model.drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::{build_full, build_rwa_anti_stokes};
    use crate::model::SystemParams;
    use approx::assert_relative_eq;

    fn toy(a: DMatrix<f64>, d: DMatrix<f64>) -> LinearModel {
        let labels = vec![Mode::Coherence, Mode::Mirror][..a.nrows() / 2].to_vec();
        LinearModel::new(labels, a, d).unwrap()
    }

    #[test]
    fn scalar_balance() {
        let m = toy(-DMatrix::identity(4, 4), DMatrix::identity(4, 4) * 2.0);
        let s = steady_covariance(&m).unwrap();
        assert_relative_eq!(s.cov, DMatrix::identity(4, 4), epsilon = 1e-14);
    }

    #[test]
    fn decoupled_vacuum_is_half_identity() {
        let p = SystemParams {
            om_coupling: 0.0,
            atom_coupling: 0.0,
            control_rabi: 0.0,
            bath_occupancy: 0.0,
            ..SystemParams::cooling_preset()
        };
        let s = steady_covariance(&build_full(&p).unwrap()).unwrap();
        let optical = s.cov.view((0, 0), (6, 6)).into_owned();
        assert_relative_eq!(optical, DMatrix::identity(6, 6) * 0.5, epsilon = 1e-10);
        // Non-rotating-wave Brownian damping: V_xx = (1 + 2γ²/ω²)/2, V_xp = −γ/(2ω).
        let ratio = p.mech_damping / p.mech_freq;
        let mirror: nalgebra::Matrix2<f64> = s.cov.fixed_view::<2, 2>(6, 6).into_owned();
        let expected = nalgebra::Matrix2::new(0.5 * (1.0 + 2.0 * ratio * ratio), -0.5 * ratio, -0.5 * ratio, 0.5);
        assert_relative_eq!(mirror, expected, epsilon = 1e-10);
    }

    #[test]
    fn unstable_model_is_refused() {
        let m = toy(DMatrix::identity(2, 2) * 0.1, DMatrix::identity(2, 2));
        assert!(matches!(steady_covariance(&m), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn residual_of_zero_guess_is_one() {
        let m = build_rwa_anti_stokes(&SystemParams::mapping_preset()).unwrap();
        let r = lyapunov_residual(&m, &DMatrix::zeros(4, 4));
        assert_relative_eq!(r, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn residual_grows_linearly_with_perturbation() {
        let m = build_rwa_anti_stokes(&SystemParams::mapping_preset()).unwrap();
        let v = steady_covariance(&m).unwrap().cov;
        assert!(lyapunov_residual(&m, &v) < 1e-10);
        let eps = 1e-3;
        let r1 = lyapunov_residual(&m, &(&v + DMatrix::identity(4, 4) * eps));
        let r2 = lyapunov_residual(&m, &(&v + DMatrix::identity(4, 4) * (2.0 * eps)));
        // The perturbation contributes (A + Aᵀ)ε exactly.
        let expected = (&m.drift + m.drift.transpose()).norm() * eps / m.diffusion.norm();
        assert_relative_eq!(r1, expected, max_relative = 1e-6);
        assert_relative_eq!(r2 / r1, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn skew_drift_preserves_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        let m = toy(a, DMatrix::zeros(2, 2));
        let v0 = DMatrix::from_row_slice(2, 2, &[0.2, 0.05, 0.05, 2.0]);
        let s0 = GaussianState::new(m.labels.clone(), DVector::zeros(2), v0.clone()).unwrap();
        let traj = propagate(&m, &s0, 1.7, Some(0.01)).unwrap();
        let mut e0: Vec<f64> = v0.symmetric_eigenvalues().iter().cloned().collect();
        let mut e1: Vec<f64> = traj.last().cov.symmetric_eigenvalues().iter().cloned().collect();
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        for (x, y) in e0.iter().zip(&e1) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn stiff_full_model_step_is_finite() {
        let m = build_full(&SystemParams::cooling_preset()).unwrap();
        let p = Propagator::new(&m, 1e-6).unwrap();
        assert!(p.noise.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let times: Vec<f64> = (0..12_001).map(|k| k as f64).collect();
        let states = vec![GaussianState::vacuum(vec![Mode::Mirror]); times.len()];
        let t = Trajectory { times, states };
        let idx = t.decimated_indices(5000);
        assert!(idx.len() <= 5000);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 12_000);
    }

    #[test]
    fn uncertainty_check_rejects_subvacuum_product() {
        let s = GaussianState::new(
            vec![Mode::Mirror],
            DVector::zeros(2),
            DMatrix::identity(2, 2) * 0.3,
        )
        .unwrap();
        assert!(s.check_physical().is_err());
        assert!(GaussianState::vacuum(vec![Mode::Mirror]).check_physical().is_ok());
    }
}
