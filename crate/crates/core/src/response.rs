//! Frequency-domain response of the EIT-dressed cavity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SystemParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// EIT susceptibility seen by a probe offset by `omega` from the carrier:
/// i·g_N² / (γ + i(Δ−ω) + Ω²/(γ_c + i(δ−ω))).
pub fn chi_eit(omega: f64, p: &SystemParams) -> Result<Complex64> {
    let g_n2 = p.collective_coupling().powi(2);
    let omega2 = p.control_rabi * p.control_rabi;
    let coherence = Complex64::new(p.coherence_decay, p.two_photon_detuning - omega);

    let dressing = if omega2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if coherence == Complex64::new(0.0, 0.0) {
        // Undamped two-photon resonance: the dressing term diverges and the
        // medium becomes perfectly transparent.
        return Ok(Complex64::new(0.0, 0.0));
    } else {
        omega2 / coherence
    };

    let den = Complex64::new(p.dipole_decay, p.one_photon_detuning - omega) + dressing;
    if den == Complex64::new(0.0, 0.0) {
        if g_n2 == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::SingularPoint(format!("χ_EIT pole at ω = {omega:e} rad/s")));
    }
    Ok(I * g_n2 / den)
}

/// Intracavity response κ / (κ + i(Δ_c − ω) − i·χ_EIT(ω)), equal to 1 for an
/// empty resonant cavity at ω = 0.
pub fn cavity_response(omega: f64, p: &SystemParams) -> Complex64 {
    let kappa = p.cavity_decay;
    if kappa == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    match chi_eit(omega, p) {
        Ok(chi) => {
            let den = Complex64::new(kappa, p.cavity_detuning - omega) - I * chi;
            kappa / den
        }
        // An infinite susceptibility blocks the cavity field entirely.
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

/// Sampled complex response on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::param(format!(
                "spectrum has {} frequencies but {} values",
                frequencies.len(),
                values.len()
            )));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("spectrum frequencies must be strictly increasing"));
        }
        Ok(Spectrum { frequencies, values })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// |response|² at each grid point.
    pub fn transmission(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Default probe grid: δ ± 5κ with 2001 points.
pub fn default_grid(p: &SystemParams) -> Vec<f64> {
    let centre = p.two_photon_detuning;
    let span = 5.0 * p.cavity_decay;
    linspace(centre - span, centre + span, 2001)
}

pub fn transmission_spectrum(p: &SystemParams, grid: &[f64]) -> Result<Spectrum> {
    let values = grid.iter().map(|&w| cavity_response(w, p)).collect();
    Spectrum::new(grid.to_vec(), values)
}

/// Half-width at half-maximum of |values|² around the global maximum, with
/// linear interpolation between grid points.
pub fn extract_halfwidth(spectrum: &Spectrum) -> Result<f64> {
    let power = spectrum.transmission();
    let n = power.len();
    if n < 3 {
        return Err(Error::ExtractionFailure("need at least three samples".into()));
    }
    let (peak, &max) = power
        .iter()
        .enumerate()
        .fold((0, &power[0]), |best, (i, v)| if *v > *best.1 { (i, v) } else { best });
    if peak == 0 || peak == n - 1 {
        return Err(Error::ExtractionFailure("maximum at the edge of the grid".into()));
    }
    let half = max / 2.0;
    let f = spectrum.frequencies();

    let crossing = |i_in: usize, i_out: usize| {
        let (p_in, p_out) = (power[i_in], power[i_out]);
        let t = (p_in - half) / (p_in - p_out);
        f[i_in] + t * (f[i_out] - f[i_in])
    };

    let left = (1..=peak)
        .rev()
        .find(|&i| power[i - 1] < half)
        .map(|i| crossing(i, i - 1))
        .ok_or_else(|| Error::ExtractionFailure("half maximum not crossed below the peak".into()))?;
    let right = (peak..n - 1)
        .find(|&i| power[i + 1] < half)
        .map(|i| crossing(i, i + 1))
        .ok_or_else(|| Error::ExtractionFailure("half maximum not crossed above the peak".into()))?;
    Ok((right - left) / 2.0)
}
