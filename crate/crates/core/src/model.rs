//! Physical parameters of the hybrid atom–cavity–membrane system, the
//! effective rates that follow from them, and regime checks.
//!
//! Every rate and detuning is stored in angular units (rad/s). Use [`hz`] to
//! convert a cyclic frequency quoted as `(2π)·X` into the stored value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HBAR: f64 = 1.054_571_817e-34;
const K_B: f64 = 1.380_649e-23;

/// Converts a cyclic frequency in Hz to angular frequency.
#[inline]
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Converts an angular frequency back to Hz.
#[inline]
pub fn to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Rates and detunings of the four-mode model, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical resonance frequency ω_m.
    pub mech_freq: f64,
    /// Mechanical amplitude damping γ_m (energy damping is 2γ_m).
    pub mech_damping: f64,
    /// Thermal occupancy n_i of the mechanical bath.
    pub bath_occupancy: f64,
    /// Cavity field decay κ (halfwidth).
    pub cavity_decay: f64,
    /// Effective cavity detuning Δ_c, signed.
    pub cavity_detuning: f64,
    /// Linearized optomechanical coupling G = G₀⟨a⟩, with ⟨a⟩ real.
    pub om_coupling: f64,
    /// Single-photon optomechanical coupling G₀. Only used for consistency checks.
    pub om_coupling_single: f64,
    /// Single-atom cavity coupling g.
    pub atom_coupling: f64,
    /// Number of atoms N.
    pub atom_number: u64,
    /// Optical dipole decay γ of the 3–1 transition.
    pub dipole_decay: f64,
    /// Ground-state coherence decay γ_c.
    pub coherence_decay: f64,
    /// Control field Rabi frequency Ω.
    pub control_rabi: f64,
    /// Two-photon detuning δ = Δ − Δ′.
    pub two_photon_detuning: f64,
    /// One-photon detuning Δ.
    pub one_photon_detuning: f64,
}

impl SystemParams {
    /// Collective atom–cavity coupling g·√N.
    pub fn collective_coupling(&self) -> f64 {
        self.atom_coupling * (self.atom_number as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("mech_freq", self.mech_freq),
            ("mech_damping", self.mech_damping),
            ("bath_occupancy", self.bath_occupancy),
            ("cavity_decay", self.cavity_decay),
            ("om_coupling", self.om_coupling),
            ("om_coupling_single", self.om_coupling_single),
            ("atom_coupling", self.atom_coupling),
            ("dipole_decay", self.dipole_decay),
            ("coherence_decay", self.coherence_decay),
            ("control_rabi", self.control_rabi),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("cavity_detuning", self.cavity_detuning),
            ("two_photon_detuning", self.two_photon_detuning),
            ("one_photon_detuning", self.one_photon_detuning),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        if self.atom_number < 1 {
            return Err(Error::param("atom_number must be >= 1"));
        }
        Ok(())
    }

    /// Sets δ and, following the resonant-control convention, Δ = δ.
    pub fn with_two_photon_detuning(mut self, delta: f64) -> Self {
        self.two_photon_detuning = delta;
        self.one_photon_detuning = delta;
        self
    }

    /// Cooling configuration: N = 10⁸ Rb atoms, κ = (2π)1 MHz, g = (2π)100 kHz,
    /// γ = (2π)3 MHz, γ_c = (2π)1 kHz, ω_m = (2π)200 kHz, Q_m = 10⁷, n_i = 10⁵,
    /// Ω = (2π)300 MHz, G = (2π)200 kHz, tuned to the anti-Stokes sideband.
    pub fn cooling_preset() -> Self {
        let omega_m = hz(200e3);
        SystemParams {
            mech_freq: omega_m,
            mech_damping: omega_m / 1e7,
            bath_occupancy: 1e5,
            cavity_decay: hz(1e6),
            cavity_detuning: omega_m,
            om_coupling: hz(200e3),
            om_coupling_single: hz(200.0),
            atom_coupling: hz(100e3),
            atom_number: 100_000_000,
            dipole_decay: hz(3e6),
            coherence_decay: hz(1e3),
            control_rabi: hz(300e6),
            two_photon_detuning: omega_m,
            one_photon_detuning: omega_m,
        }
    }

    /// State-mapping configuration: the cooling preset with Ω = (2π)100 MHz and
    /// G = (2π)500 kHz.
    pub fn mapping_preset() -> Self {
        SystemParams {
            control_rabi: hz(100e6),
            om_coupling: hz(500e3),
            om_coupling_single: hz(2e3),
            ..Self::cooling_preset()
        }
    }

    /// Entanglement configuration: the cooling preset with N = 10⁴,
    /// Ω = (2π)1.2 MHz, Δ_c = −12κ, G = (2π)1 MHz, tuned to the Stokes sideband.
    pub fn entanglement_preset() -> Self {
        let base = Self::cooling_preset();
        SystemParams {
            atom_number: 10_000,
            control_rabi: hz(1.2e6),
            cavity_detuning: -12.0 * base.cavity_decay,
            om_coupling: hz(1e6),
            ..base
        }
        .with_two_photon_detuning(-base.mech_freq)
    }
}

/// Effective rates of the adiabatically reduced atom–mirror system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Cooperativity C = g_N²/(κγ).
    pub cooperativity: f64,
    /// Optical cooling rate Γ_O = G²/κ.
    pub optical_rate: f64,
    /// Excited–ground decay rate Γ_E = Ω²/γ.
    pub pumping_rate: f64,
    /// γ_O = Γ_O/(1+C).
    pub optical_rate_norm: f64,
    /// γ_E = Γ_E/(1+C).
    pub pumping_rate_norm: f64,
    /// EIT-narrowed cavity halfwidth γ_c + κΩ²/g_N².
    pub kappa_eit: f64,
    /// Atom–mirror coupling √(C·γ_E·γ_O) of the reduced models.
    pub effective_coupling: f64,
    /// Far-detuned atom–mirror coupling Ω·g_N·G/√(g_N⁴ + γ²Δ_c²).
    pub far_detuned_coupling: f64,
}

pub fn derived_rates(p: &SystemParams) -> Result<DerivedRates> {
    p.validate()?;
    if p.cavity_decay == 0.0 {
        return Err(Error::param("cavity_decay = 0 makes the cooperativity undefined"));
    }
    if p.dipole_decay == 0.0 {
        return Err(Error::param("dipole_decay = 0 makes the cooperativity undefined"));
    }
    let kappa = p.cavity_decay;
    let gamma = p.dipole_decay;
    let g_n = p.collective_coupling();
    let g_n2 = g_n * g_n;
    let omega2 = p.control_rabi * p.control_rabi;

    let cooperativity = g_n2 / (kappa * gamma);
    let optical_rate = p.om_coupling * p.om_coupling / kappa;
    let pumping_rate = omega2 / gamma;
    let optical_rate_norm = optical_rate / (1.0 + cooperativity);
    let pumping_rate_norm = pumping_rate / (1.0 + cooperativity);

    // Without a control field there is no κΩ²/g_N² term, even for g_N = 0.
    let kappa_eit = if omega2 == 0.0 {
        p.coherence_decay
    } else {
        p.coherence_decay + kappa * omega2 / g_n2
    };

    let effective_coupling = (cooperativity * pumping_rate_norm * optical_rate_norm).sqrt();

    let far_den = (g_n2 * g_n2 + (gamma * p.cavity_detuning).powi(2)).sqrt();
    let far_num = p.control_rabi * g_n * p.om_coupling;
    let far_detuned_coupling = if far_num == 0.0 { 0.0 } else { far_num / far_den };

    Ok(DerivedRates {
        cooperativity,
        optical_rate,
        pumping_rate,
        optical_rate_norm,
        pumping_rate_norm,
        kappa_eit,
        effective_coupling,
        far_detuned_coupling,
    })
}

/// Bose–Einstein occupancy of a mode at angular frequency `omega` and
/// temperature `temperature` (K).
pub fn thermal_occupancy(temperature: f64, omega: f64) -> Result<f64> {
    if !(temperature > 0.0) || !(omega > 0.0) {
        return Err(Error::param(format!(
            "thermal occupancy needs T > 0 and ω > 0 (got T = {temperature}, ω = {omega})"
        )));
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// γ_m = ω_m / Q_m.
pub fn damping_from_quality(omega_m: f64, quality: f64) -> Result<f64> {
    if !(quality > 0.0) {
        return Err(Error::param(format!("quality factor must be > 0, got {quality}")));
    }
    Ok(omega_m / quality)
}

/// Margin used for the "much less than" conditions in [`validate_regime`].
pub const REGIME_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeWarning {
    /// g·|⟨a⟩| is not small against Ω, so the bosonized atomic modes are suspect.
    WeakProbe,
    /// κ/g_N ≪ G/Ω ≪ g_N/γ does not hold.
    StrongCouplingWindow,
    /// γ_c < κ and g_N > Ω (with Ω > 0) does not hold.
    EitSharpness,
    /// κ_EIT ≥ ω_m: sidebands are not resolved by the EIT window.
    SidebandResolution,
}

impl RegimeWarning {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeWarning::WeakProbe => "weak-probe",
            RegimeWarning::StrongCouplingWindow => "strong-coupling-window",
            RegimeWarning::EitSharpness => "eit-sharpness",
            RegimeWarning::SidebandResolution => "sideband-resolution",
        }
    }
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Lists the regime assumptions violated by `p`. `intracavity_amplitude` is
/// |⟨a⟩|; pass `None` to skip the weak-probe check.
pub fn validate_regime(p: &SystemParams, intracavity_amplitude: Option<f64>) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let g_n = p.collective_coupling();
    let omega = p.control_rabi;

    if let Some(amp) = intracavity_amplitude {
        if p.atom_coupling * amp.abs() * REGIME_MARGIN >= omega {
            out.push(RegimeWarning::WeakProbe);
        }
    }

    let lower = if g_n > 0.0 { p.cavity_decay / g_n } else { f64::INFINITY };
    let upper = if p.dipole_decay > 0.0 { g_n / p.dipole_decay } else { f64::INFINITY };
    let middle = if omega > 0.0 { p.om_coupling / omega } else { f64::INFINITY };
    let window_ok = lower * REGIME_MARGIN <= middle && middle * REGIME_MARGIN <= upper;
    if !window_ok {
        out.push(RegimeWarning::StrongCouplingWindow);
    }

    let sharp = omega > 0.0 && p.coherence_decay < p.cavity_decay && g_n > omega;
    if !sharp {
        out.push(RegimeWarning::EitSharpness);
    }

    match derived_rates(p) {
        Ok(r) if r.kappa_eit < p.mech_freq => {}
        _ => out.push(RegimeWarning::SidebandResolution),
    }
    out
}
