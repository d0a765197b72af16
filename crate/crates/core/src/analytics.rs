//! Closed-form predictions of the reduced model, used to cross-check the
//! numerical pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derived_rates, validate_regime, RegimeWarning, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingPrediction {
    /// Final mirror occupancy γ_m/(γ_m+Γ_O)·n_i + γ_c/(2κ_EIT).
    pub n_f: f64,
    /// Γ_O·γ_E/κ_EIT (rad/s).
    pub cooling_rate: f64,
    /// 2γ_m·n_i + γ_O (rad/s).
    pub heating_rate: f64,
}

impl CoolingPrediction {
    /// The two contributions to `n_f`: (thermal, atomic backaction).
    pub fn terms(p: &SystemParams) -> Result<(f64, f64)> {
        let r = derived_rates(p)?;
        let thermal = if p.mech_damping == 0.0 {
            0.0
        } else {
            p.mech_damping / (p.mech_damping + r.optical_rate) * p.bath_occupancy
        };
        let backaction = if p.coherence_decay == 0.0 { 0.0 } else { p.coherence_decay / (2.0 * r.kappa_eit) };
        Ok((thermal, backaction))
    }
}

/// Leading-order cooling prediction. Warnings list the regime conditions
/// under which the formula is not expected to hold.
pub fn predict_cooling(p: &SystemParams) -> Result<(CoolingPrediction, Vec<RegimeWarning>)> {
    let r = derived_rates(p)?;
    let (thermal, backaction) = CoolingPrediction::terms(p)?;
    let cooling_rate = if r.kappa_eit > 0.0 {
        r.optical_rate * r.pumping_rate_norm / r.kappa_eit
    } else {
        0.0
    };
    let prediction = CoolingPrediction {
        n_f: thermal + backaction,
        cooling_rate,
        heating_rate: 2.0 * p.mech_damping * p.bath_occupancy + r.optical_rate_norm,
    };
    Ok((prediction, validate_regime(p, None)))
}

/// Bath occupancy at which the far-detuned coupling equals the thermal
/// decoherence rate γ_m·n_i.
pub fn predict_entanglement_crossover(p: &SystemParams) -> Result<f64> {
    if p.mech_damping == 0.0 {
        return Err(Error::param("mech_damping = 0: thermal decoherence rate vanishes"));
    }
    Ok(derived_rates(p)?.far_detuned_coupling / p.mech_damping)
}
