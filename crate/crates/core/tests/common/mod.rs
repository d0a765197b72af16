//! Test-side oracles, written from the equations of motion independently of
//! the library's matrix builders.
#![allow(dead_code)]

use eit_optomech::model::{hz, SystemParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

pub type C = Complex64;

pub const I: C = C { re: 0.0, im: 1.0 };

/// Quadratures (x, p) of a complex amplitude under x = (o+o†)/√2, p = −i(o−o†)/√2.
pub fn to_quad(z: &[C]) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2;
    z.iter().flat_map(|o| [s * o.re, s * o.im]).collect()
}

pub fn from_quad(x: &[f64]) -> Vec<C> {
    let s = std::f64::consts::SQRT_2;
    x.chunks(2).map(|q| C::new(q[0] / s, q[1] / s)).collect()
}

/// Noiseless mean-field equations of the four fluctuation modes (c₂, c₃, a, b).
pub fn full_rhs(p: &SystemParams, z: &[C]) -> Vec<C> {
    let (c2, c3, a, b) = (z[0], z[1], z[2], z[3]);
    let g_n = p.atom_coupling * (p.atom_number as f64).sqrt();
    let big_g = p.om_coupling;
    vec![
        -(p.coherence_decay + I * p.two_photon_detuning) * c2 + I * p.control_rabi * c3,
        -(p.dipole_decay + I * p.one_photon_detuning) * c3 + I * g_n * a + I * p.control_rabi * c2,
        -(p.cavity_decay + I * p.cavity_detuning) * a + I * g_n * c3 + I * big_g * (b + b.conj()),
        -(p.mech_damping + I * p.mech_freq) * b + p.mech_damping * b.conj() + I * big_g * (a + a.conj()),
    ]
}

/// Reduced two-mode equations (c₂, b) in the sideband frame.
pub fn rwa_rhs(p: &SystemParams, z: &[C], stokes: bool) -> Vec<C> {
    let g_n2 = p.atom_coupling.powi(2) * p.atom_number as f64;
    let coop = g_n2 / (p.cavity_decay * p.dipole_decay);
    let gamma_o = p.om_coupling.powi(2) / p.cavity_decay / (1.0 + coop);
    let gamma_e = p.control_rabi.powi(2) / p.dipole_decay / (1.0 + coop);
    let g = (coop * gamma_e * gamma_o).sqrt();
    let (c2, b) = (z[0], z[1]);
    let (pc, pb) = if stokes { (b.conj(), c2.conj()) } else { (b, c2) };
    vec![
        -(p.coherence_decay + gamma_e) * c2 - I * g * pc,
        -(p.mech_damping + gamma_o) * b - I * g * pb,
    ]
}

/// Quadrature drift obtained by central finite differences of `rhs` around a
/// random-looking base point.
pub fn finite_difference_drift(n_modes: usize, rhs: impl Fn(&[C]) -> Vec<C>) -> DMatrix<f64> {
    let dim = 2 * n_modes;
    let base: Vec<f64> = (0..dim).map(|k| 0.3 + 0.7 * ((k * 7919) % 13) as f64 / 13.0).collect();
    let h = 1e-3;
    let mut a = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut up = base.clone();
        let mut dn = base.clone();
        up[k] += h;
        dn[k] -= h;
        let fu = to_quad(&rhs(&from_quad(&up)));
        let fd = to_quad(&rhs(&from_quad(&dn)));
        for r in 0..dim {
            a[(r, k)] = (fu[r] - fd[r]) / (2.0 * h);
        }
    }
    a
}

/// Smallest symplectic eigenvalue of the partially transposed two-mode
/// covariance, from the spectrum of −(ΩṼ)², and the resulting E_N.
pub fn oracle_log_negativity(v: &DMatrix<f64>) -> f64 {
    let mut pt = v.clone();
    // Partial transpose flips p of the second mode.
    for k in 0..4 {
        pt[(3, k)] = -pt[(3, k)];
        pt[(k, 3)] = -pt[(k, 3)];
    }
    pt[(3, 3)] = v[(3, 3)];
    let omega = DMatrix::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
    ]);
    let m = &omega * &pt;
    let sq = -(&m * &m);
    let eig = sq.complex_eigenvalues();
    let nu = eig.iter().map(|z| z.re.max(0.0).sqrt()).fold(f64::INFINITY, f64::min);
    (-(2.0 * nu).ln()).max(0.0)
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// Parameters spread over decades around the paper's operating points.
pub fn any_params() -> impl Strategy<Value = SystemParams> {
    (
        (log_uniform(1e4, 1e6), log_uniform(1e4, 1e8), log_uniform(1.0, 1e6), log_uniform(1e5, 1e7)),
        (-3.0..3.0f64, log_uniform(1e3, 1e6), log_uniform(1e4, 1e6), 1u64..1_000_000_000),
        (log_uniform(1e5, 1e7), log_uniform(1e1, 1e5), log_uniform(1e5, 1e9)),
        (-3.0..3.0f64, -3.0..3.0f64),
    )
        .prop_map(|((wm, q, n_i, kappa), (dc, big_g, g, n), (gamma, gamma_c, omega), (d2, d1))| {
            let omega_m = hz(wm);
            SystemParams {
                mech_freq: omega_m,
                mech_damping: omega_m / q,
                bath_occupancy: n_i,
                cavity_decay: hz(kappa),
                cavity_detuning: dc * omega_m,
                om_coupling: hz(big_g),
                om_coupling_single: hz(big_g) * 1e-3,
                atom_coupling: hz(g),
                atom_number: n,
                dipole_decay: hz(gamma),
                coherence_decay: hz(gamma_c),
                control_rabi: hz(omega),
                two_photon_detuning: d2 * omega_m,
                one_photon_detuning: d1 * omega_m,
            }
        })
}

/// Max-entry relative difference.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(f64::MIN_POSITIVE)
}

/// Log-uniform perturbations (up to a factor 3 either way) of every rate in
/// one of the three presets, with detunings moved by up to ±0.3·ω_m.
pub fn near_presets() -> impl Strategy<Value = SystemParams> {
    let factor = || (-(3f64.ln())..3f64.ln()).prop_map(f64::exp);
    (
        0usize..3,
        proptest::collection::vec(factor(), 10),
        proptest::collection::vec(-0.3..0.3f64, 3),
    )
        .prop_map(|(which, f, d)| {
            let base = match which {
                0 => SystemParams::cooling_preset(),
                1 => SystemParams::mapping_preset(),
                _ => SystemParams::entanglement_preset(),
            };
            let wm = base.mech_freq * f[0];
            SystemParams {
                mech_freq: wm,
                mech_damping: base.mech_damping * f[1],
                bath_occupancy: base.bath_occupancy * f[2],
                cavity_decay: base.cavity_decay * f[3],
                cavity_detuning: base.cavity_detuning + d[0] * wm,
                om_coupling: base.om_coupling * f[4],
                om_coupling_single: base.om_coupling_single,
                atom_coupling: base.atom_coupling * f[5],
                atom_number: ((base.atom_number as f64) * f[6]).round().max(1.0) as u64,
                dipole_decay: base.dipole_decay * f[7],
                coherence_decay: base.coherence_decay * f[8],
                control_rabi: base.control_rabi * f[9],
                two_photon_detuning: base.two_photon_detuning + d[1] * wm,
                one_photon_detuning: base.one_photon_detuning + d[2] * wm,
            }
        })
}
