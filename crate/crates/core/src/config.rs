//! Run configuration: TOML with section headers, frequencies in cyclic Hz.
//!
//! ```toml
//! [run]
//! experiment = "cool"
//! model = "full"
//! preset = "cooling"
//!
//! [params]
//! G = 150e3
//!
//! [sweep]
//! parameter = "delta"
//! min = 0.2
//! max = 3.0
//! count = 200
//! scale = "log"
//! units = "omega_m"
//! ```
//!
//! Keys absent from `[params]` come from the preset. `configs/SCHEMA.md`
//! documents every key.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linsys::ModelTier;
use crate::model::{damping_from_quality, hz, thermal_occupancy, SystemParams};
use crate::response::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Cool,
    Map,
    Entangle,
    Rates,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Cool => "cool",
            Experiment::Map => "map",
            Experiment::Entangle => "entangle",
            Experiment::Rates => "rates",
        }
    }

    /// Built-in configuration used when no file is given.
    pub fn default_config(&self) -> &'static str {
        match self {
            Experiment::Spectrum => include_str!("../../../configs/fig1c.toml"),
            Experiment::Cool | Experiment::Rates => include_str!("../../../configs/fig2a.toml"),
            Experiment::Map => include_str!("../../../configs/fig2d.toml"),
            Experiment::Entangle => include_str!("../../../configs/fig3a.toml"),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spectrum" => Experiment::Spectrum,
            "cool" => Experiment::Cool,
            "map" => Experiment::Map,
            "entangle" => Experiment::Entangle,
            "rates" => Experiment::Rates,
            _ => return Err(Error::Config(format!("run.experiment: unknown experiment `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Cooling,
    Mapping,
    Entanglement,
}

impl Preset {
    pub fn params(&self) -> SystemParams {
        match self {
            Preset::Cooling => SystemParams::cooling_preset(),
            Preset::Mapping => SystemParams::mapping_preset(),
            Preset::Entanglement => SystemParams::entanglement_preset(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cooling" => Preset::Cooling,
            "mapping" => Preset::Mapping,
            "entanglement" => Preset::Entanglement,
            _ => return Err(Error::Config(format!("run.preset: unknown preset `{s}`"))),
        })
    }
}

/// Sweepable quantities, named as in the `[params]` section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    OmegaM,
    GammaM,
    NI,
    Kappa,
    DeltaC,
    G,
    G0,
    SmallG,
    N,
    Gamma,
    GammaC,
    Omega,
    Delta2ph,
    Delta1ph,
    /// Probe offset of a transmission spectrum.
    Probe,
}

const SWEEP_PARAMS: [(&str, SweepParam); 15] = [
    ("omega_m", SweepParam::OmegaM),
    ("gamma_m", SweepParam::GammaM),
    ("n_i", SweepParam::NI),
    ("kappa", SweepParam::Kappa),
    ("delta_c", SweepParam::DeltaC),
    ("G", SweepParam::G),
    ("G0", SweepParam::G0),
    ("g", SweepParam::SmallG),
    ("N", SweepParam::N),
    ("gamma", SweepParam::Gamma),
    ("gamma_c", SweepParam::GammaC),
    ("Omega", SweepParam::Omega),
    ("delta", SweepParam::Delta2ph),
    ("Delta", SweepParam::Delta1ph),
    ("omega", SweepParam::Probe),
];

impl SweepParam {
    pub fn name(&self) -> &'static str {
        SWEEP_PARAMS.iter().find(|(_, p)| p == self).map(|(n, _)| *n).unwrap_or("?")
    }

    pub fn is_dimensionless(&self) -> bool {
        matches!(self, SweepParam::NI | SweepParam::N)
    }

    /// Writes an internal (angular or dimensionless) value into `p`. With
    /// `delta_follows`, sweeping δ moves Δ along with it.
    pub fn apply(&self, p: &SystemParams, value: f64, delta_follows: bool) -> Result<SystemParams> {
        let mut q = *p;
        match self {
            SweepParam::OmegaM => q.mech_freq = value,
            SweepParam::GammaM => q.mech_damping = value,
            SweepParam::NI => q.bath_occupancy = value,
            SweepParam::Kappa => q.cavity_decay = value,
            SweepParam::DeltaC => q.cavity_detuning = value,
            SweepParam::G => q.om_coupling = value,
            SweepParam::G0 => q.om_coupling_single = value,
            SweepParam::SmallG => q.atom_coupling = value,
            SweepParam::N => {
                if !(value >= 1.0) || !value.is_finite() {
                    return Err(Error::param(format!("N must be >= 1, got {value}")));
                }
                q.atom_number = value.round() as u64;
            }
            SweepParam::Gamma => q.dipole_decay = value,
            SweepParam::GammaC => q.coherence_decay = value,
            SweepParam::Omega => q.control_rabi = value,
            SweepParam::Delta2ph => {
                q.two_photon_detuning = value;
                if delta_follows {
                    q.one_photon_detuning = value;
                }
            }
            SweepParam::Delta1ph => q.one_photon_detuning = value,
            SweepParam::Probe => {}
        }
        q.validate()?;
        Ok(q)
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SWEEP_PARAMS.iter().find(|(n, _)| *n == s).map(|(_, p)| *p).ok_or_else(|| {
            let known: Vec<_> = SWEEP_PARAMS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("sweep.parameter: unknown parameter `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// Unit in which sweep bounds are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepUnits {
    /// Cyclic Hz, multiplied by 2π.
    Hz,
    /// Multiples of ω_m.
    OmegaM,
    /// Multiples of κ.
    Kappa,
    /// Used as is: rad/s for rates, plain numbers for n_i and N.
    Raw,
}

impl SweepUnits {
    pub fn name(&self) -> &'static str {
        match self {
            SweepUnits::Hz => "hz",
            SweepUnits::OmegaM => "omega_m",
            SweepUnits::Kappa => "kappa",
            SweepUnits::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
    pub units: SweepUnits,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Config(format!("sweep.count: need at least 2 points, got {}", self.count)));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("sweep: need finite min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return Err(Error::Config("sweep.scale: log spacing needs min > 0".into()));
        }
        if self.parameter.is_dimensionless() && self.units != SweepUnits::Raw {
            return Err(Error::Config(format!(
                "sweep.units: `{}` is dimensionless and only accepts units = \"raw\"",
                self.parameter.name()
            )));
        }
        Ok(())
    }

    /// Grid in the units the bounds were written in.
    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => linspace(self.min, self.max, self.count),
            Scale::Log => {
                let mut v: Vec<f64> =
                    linspace(self.min.ln(), self.max.ln(), self.count).into_iter().map(f64::exp).collect();
                // Keep the endpoints exact.
                v[0] = self.min;
                v[self.count - 1] = self.max;
                v
            }
        }
    }

    /// Internal value of a grid point given the base parameters.
    pub fn resolve(&self, value: f64, base: &SystemParams) -> f64 {
        match self.units {
            SweepUnits::Hz => hz(value),
            SweepUnits::OmegaM => value * base.mech_freq,
            SweepUnits::Kappa => value * base.cavity_decay,
            SweepUnits::Raw => value,
        }
    }
}

/// Upper bound on trajectory rows written by the mapping experiment.
pub const MAX_TRAJECTORY_SAMPLES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingSpec {
    pub squeeze_r: f64,
    pub squeeze_angle: f64,
    pub thermal_n: f64,
    /// Number of time-series samples in the trajectory output.
    pub samples: usize,
    pub wigner_points: usize,
    /// Half-width of Wigner grids in standard deviations of the widest axis.
    pub wigner_sigma: f64,
    /// Also propagate the full four-mode model and report mirror occupancies.
    pub full_cross_check: bool,
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec {
            squeeze_r: 1.0,
            squeeze_angle: 0.0,
            thermal_n: 2.0,
            samples: 401,
            wigner_points: 81,
            wigner_sigma: 5.0,
            full_cross_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub tier: ModelTier,
    pub params: SystemParams,
    /// Δ tracks δ (control field on one-photon resonance in the rotating frame).
    pub delta_follows: bool,
    pub intracavity_amplitude: Option<f64>,
    pub sweep: Option<SweepSpec>,
    pub mapping: MappingSpec,
    pub out_dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

// Raw TOML layout.

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    fn get(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    params: RawParams,
    sweep: Option<RawSweep>,
    mapping: Option<RawMapping>,
    output: Option<RawOutput>,
    /// Written into output headers; ignored on input.
    #[allow(dead_code)]
    provenance: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    experiment: Option<String>,
    model: Option<String>,
    preset: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    units: Option<String>,
    omega_m: Option<Num>,
    gamma_m: Option<Num>,
    q_m: Option<Num>,
    n_i: Option<Num>,
    temperature: Option<Num>,
    kappa: Option<Num>,
    delta_c: Option<Num>,
    #[serde(rename = "G")]
    big_g: Option<Num>,
    #[serde(rename = "G0")]
    big_g0: Option<Num>,
    g: Option<Num>,
    #[serde(rename = "N")]
    n: Option<Num>,
    gamma: Option<Num>,
    gamma_c: Option<Num>,
    #[serde(rename = "Omega")]
    omega: Option<Num>,
    delta: Option<Num>,
    #[serde(rename = "Delta")]
    big_delta: Option<Num>,
    intracavity_amplitude: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    min: Num,
    max: Num,
    count: i64,
    scale: Option<String>,
    units: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMapping {
    squeeze_r: Option<Num>,
    squeeze_angle: Option<Num>,
    thermal_n: Option<Num>,
    samples: Option<i64>,
    wigner_points: Option<i64>,
    wigner_sigma: Option<Num>,
    full_cross_check: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    prefix: Option<String>,
}

fn positive_count(key: &str, v: i64, min: i64) -> Result<usize> {
    if v < min {
        return Err(Error::Config(format!("{key}: must be >= {min}, got {v}")));
    }
    Ok(v as usize)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Reads a TOML config, or the header of a `.csv` output file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_header(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses the commented header block of an output file back into the
    /// configuration that produced it.
    pub fn from_header(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#')))
            .collect::<Vec<_>>()
            .join("\n");
        Self::from_toml(&body)
    }

    fn from_raw(raw: RawFile) -> Result<Self> {
        let experiment = raw.run.experiment.as_deref().map(str::parse).transpose()?;
        let tier = match raw.run.model.as_deref() {
            Some(s) => s.parse().map_err(|_| Error::Config(format!("run.model: unknown model tier `{s}`")))?,
            None => ModelTier::Full,
        };
        let preset: Preset = raw.run.preset.as_deref().unwrap_or("cooling").parse()?;

        let rp = raw.params;
        let angular = match rp.units.as_deref() {
            None | Some("hz") => false,
            Some("angular") => true,
            Some(u) => return Err(Error::Config(format!("params.units: expected \"hz\" or \"angular\", got `{u}`"))),
        };
        let freq = |v: Num| if angular { v.get() } else { hz(v.get()) };

        let mut p = preset.params();
        let set = |slot: &mut f64, v: Option<Num>| {
            if let Some(v) = v {
                *slot = freq(v);
            }
        };
        set(&mut p.mech_freq, rp.omega_m);
        set(&mut p.cavity_decay, rp.kappa);
        set(&mut p.cavity_detuning, rp.delta_c);
        set(&mut p.om_coupling, rp.big_g);
        set(&mut p.om_coupling_single, rp.big_g0);
        set(&mut p.atom_coupling, rp.g);
        set(&mut p.dipole_decay, rp.gamma);
        set(&mut p.coherence_decay, rp.gamma_c);
        set(&mut p.control_rabi, rp.omega);
        if let Some(n) = rp.n {
            let n = n.get();
            if !(n >= 1.0) || n.fract() != 0.0 || n > u64::MAX as f64 {
                return Err(Error::Config(format!("params.N: must be a whole number >= 1, got {n}")));
            }
            p.atom_number = n as u64;
        }

        match (rp.gamma_m, rp.q_m) {
            (Some(_), Some(_)) => return Err(Error::Config("params: give gamma_m or q_m, not both".into())),
            (Some(g), None) => p.mech_damping = freq(g),
            (None, Some(q)) => p.mech_damping = damping_from_quality(p.mech_freq, q.get()).map_err(config_err("params.q_m"))?,
            (None, None) if rp.omega_m.is_some() => {
                // Presets fix Q_m, so a new ω_m keeps the quality factor.
                let q = preset.params().mech_freq / preset.params().mech_damping;
                p.mech_damping = p.mech_freq / q;
            }
            (None, None) => {}
        }
        match (rp.n_i, rp.temperature) {
            (Some(_), Some(_)) => return Err(Error::Config("params: give n_i or temperature, not both".into())),
            (Some(n), None) => p.bath_occupancy = n.get(),
            (None, Some(t)) => {
                p.bath_occupancy = thermal_occupancy(t.get(), p.mech_freq).map_err(config_err("params.temperature"))?
            }
            (None, None) => {}
        }

        let delta_follows = rp.big_delta.is_none();
        if let Some(d) = rp.delta {
            p.two_photon_detuning = freq(d);
        }
        p.one_photon_detuning = match rp.big_delta {
            Some(d) => freq(d),
            None => p.two_photon_detuning,
        };
        p.validate().map_err(config_err("params"))?;

        let intracavity_amplitude = rp.intracavity_amplitude.map(Num::get);

        let sweep = raw
            .sweep
            .map(|s| -> Result<SweepSpec> {
                let parameter: SweepParam = s.parameter.parse()?;
                let scale = match s.scale.as_deref() {
                    None | Some("linear") => Scale::Linear,
                    Some("log") => Scale::Log,
                    Some(x) => return Err(Error::Config(format!("sweep.scale: expected \"linear\" or \"log\", got `{x}`"))),
                };
                let units = match s.units.as_deref() {
                    None if parameter.is_dimensionless() => SweepUnits::Raw,
                    None | Some("hz") => SweepUnits::Hz,
                    Some("omega_m") => SweepUnits::OmegaM,
                    Some("kappa") => SweepUnits::Kappa,
                    Some("raw") => SweepUnits::Raw,
                    Some(x) => return Err(Error::Config(format!("sweep.units: unknown units `{x}`"))),
                };
                let spec = SweepSpec {
                    parameter,
                    min: s.min.get(),
                    max: s.max.get(),
                    count: positive_count("sweep.count", s.count, 2)?,
                    scale,
                    units,
                };
                spec.validate()?;
                Ok(spec)
            })
            .transpose()?;

        let mut mapping = MappingSpec::default();
        if let Some(m) = raw.mapping {
            if let Some(v) = m.squeeze_r {
                mapping.squeeze_r = v.get();
            }
            if let Some(v) = m.squeeze_angle {
                mapping.squeeze_angle = v.get();
            }
            if let Some(v) = m.thermal_n {
                mapping.thermal_n = v.get();
                if !(mapping.thermal_n >= 0.0) {
                    return Err(Error::Config(format!("mapping.thermal_n: must be >= 0, got {}", mapping.thermal_n)));
                }
            }
            if let Some(v) = m.samples {
                mapping.samples = positive_count("mapping.samples", v, 2)?;
                if mapping.samples > MAX_TRAJECTORY_SAMPLES {
                    return Err(Error::Config(format!(
                        "mapping.samples: at most {MAX_TRAJECTORY_SAMPLES}, got {}",
                        mapping.samples
                    )));
                }
            }
            if let Some(v) = m.wigner_points {
                mapping.wigner_points = positive_count("mapping.wigner_points", v, 2)?;
            }
            if let Some(v) = m.wigner_sigma {
                mapping.wigner_sigma = v.get();
                if !(mapping.wigner_sigma > 0.0) {
                    return Err(Error::Config("mapping.wigner_sigma: must be > 0".into()));
                }
            }
            if let Some(v) = m.full_cross_check {
                mapping.full_cross_check = v;
            }
        }

        let (out_dir, prefix) = match raw.output {
            Some(o) => (o.dir, o.prefix),
            None => (None, None),
        };

        Ok(ExperimentConfig {
            experiment,
            tier,
            params: p,
            delta_follows,
            intracavity_amplitude,
            sweep,
            mapping,
            out_dir,
            prefix,
        })
    }

    /// TOML that reproduces this configuration exactly: all parameters in
    /// rad/s with round-trip float formatting, plus a provenance table.
    pub fn to_reproducible_toml(&self, experiment: Experiment) -> String {
        let p = &self.params;
        let mut s = String::new();
        let f = |v: f64| format!("{v:e}");
        s.push_str("[run]\n");
        s.push_str(&format!("experiment = \"{experiment}\"\nmodel = \"{}\"\n\n", self.tier.name()));
        s.push_str("[params]\nunits = \"angular\"\n");
        for (k, v) in [
            ("omega_m", p.mech_freq),
            ("gamma_m", p.mech_damping),
            ("n_i", p.bath_occupancy),
            ("kappa", p.cavity_decay),
            ("delta_c", p.cavity_detuning),
            ("G", p.om_coupling),
            ("G0", p.om_coupling_single),
            ("g", p.atom_coupling),
            ("gamma", p.dipole_decay),
            ("gamma_c", p.coherence_decay),
            ("Omega", p.control_rabi),
            ("delta", p.two_photon_detuning),
        ] {
            s.push_str(&format!("{k} = {}\n", f(v)));
        }
        s.push_str(&format!("N = {}\n", p.atom_number));
        if !self.delta_follows {
            s.push_str(&format!("Delta = {}\n", f(p.one_photon_detuning)));
        }
        if let Some(a) = self.intracavity_amplitude {
            s.push_str(&format!("intracavity_amplitude = {}\n", f(a)));
        }
        if let Some(sw) = &self.sweep {
            s.push_str("\n[sweep]\n");
            s.push_str(&format!("parameter = \"{}\"\n", sw.parameter.name()));
            s.push_str(&format!("min = {}\nmax = {}\ncount = {}\n", f(sw.min), f(sw.max), sw.count));
            let scale = if sw.scale == Scale::Log { "log" } else { "linear" };
            s.push_str(&format!("scale = \"{scale}\"\nunits = \"{}\"\n", sw.units.name()));
        }
        if experiment == Experiment::Map {
            let m = &self.mapping;
            s.push_str("\n[mapping]\n");
            s.push_str(&format!(
                "squeeze_r = {}\nsqueeze_angle = {}\nthermal_n = {}\nsamples = {}\nwigner_points = {}\nwigner_sigma = {}\nfull_cross_check = {}\n",
                f(m.squeeze_r),
                f(m.squeeze_angle),
                f(m.thermal_n),
                m.samples,
                m.wigner_points,
                f(m.wigner_sigma),
                m.full_cross_check
            ));
        }
        s.push_str("\n[provenance]\n");
        s.push_str(&format!("version = \"{}\"\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("tier = \"{}\"\n", self.tier.name()));
        s.push_str(&format!("one_photon_detuning_follows_two_photon = {}\n", self.delta_follows));
        s.push_str("vacuum_variance = 0.5\n");
        s.push_str("noise_normalization = \"<o_in(t) o_in†(t')> = 2γ(n+1)δ(t-t'), <o_in† o_in> = 2γn δ(t-t')\"\n");
        s.push_str("mirror_drive = \"i G (a + a†)\"\n");
        s.push_str("units = \"rad/s\"\n");
        s
    }
}

fn config_err(key: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Config(format!("{key}: {e}"))
}
