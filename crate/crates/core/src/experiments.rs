//! Experiment drivers behind the `eitsim` subcommands. Each run returns its
//! output files and JSON summary in memory; writing them is left to the
//! caller.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::analytics::{predict_cooling, predict_entanglement_crossover};
use crate::config::{Experiment, ExperimentConfig, SweepParam, SweepSpec};
use crate::error::{Error, Result};
use crate::linsys::{instability_threshold, stability, LinearModel, Mode, ModelTier};
use crate::metrics::{
    fidelity_moments, log_negativity, min_quadrature_variance, occupancy, prepare_product_state, rotate_mode,
    wigner, GridSpec, ModeSpec, WignerGrid,
};
use crate::model::{derived_rates, to_hz, validate_regime, SystemParams};
use crate::response::{default_grid, extract_halfwidth, transmission_spectrum};
use crate::solver::{default_step, propagate, steady_covariance, GaussianState, Trajectory};

pub type Observables = BTreeMap<&'static str, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Grid value in the units the sweep was written in (0 for single runs).
    pub value: f64,
    /// Internal value (rad/s, or plain number for n_i and N).
    pub resolved: f64,
    pub observables: Observables,
    pub warnings: usize,
    /// Error tag of a failed point.
    pub error: Option<&'static str>,
}

impl SweepRow {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.observables.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `None` for a single run at the configured parameters.
    pub spec: Option<SweepSpec>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failed_count(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.failed_count() == self.rows.len()
    }

    /// CSV body. Failed rows keep their place with empty observable cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&match &self.spec {
            Some(sp) => format!("{}_{},{}_internal", sp.parameter.name(), sp.units.name(), sp.parameter.name()),
            None => "point,point_internal".to_string(),
        });
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push_str(",warnings,status\n");
        for r in &self.rows {
            s.push_str(&format!("{},{}", r.value, r.resolved));
            for c in &self.columns {
                s.push(',');
                if let Some(v) = r.observables.get(c) {
                    s.push_str(&v.to_string());
                }
            }
            s.push_str(&format!(",{},{}\n", r.warnings, r.error.unwrap_or("ok")));
        }
        s
    }

    /// Row with the smallest value of `key` among successful rows.
    pub fn argmin(&self, key: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.error.is_none())
            .filter_map(|r| r.get(key).map(|v| (v, r)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| r)
    }

    pub fn argmax(&self, key: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.error.is_none())
            .filter_map(|r| r.get(key).map(|v| (v, r)))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| r)
    }
}

fn make_row(value: f64, resolved: f64, outcome: Result<Observables>, warnings: usize) -> SweepRow {
    match outcome {
        Ok(observables) => SweepRow { value, resolved, observables, warnings, error: None },
        Err(e) => {
            let mut observables = Observables::new();
            if let Error::UnstableSystem { abscissa } = e {
                observables.insert("spectral_abscissa", abscissa);
            }
            SweepRow { value, resolved, observables, warnings, error: Some(e.tag()) }
        }
    }
}

/// Evaluates `point` on every grid value in parallel. Rows come back in grid
/// order whatever the scheduling.
pub fn run_sweep<F>(
    spec: &SweepSpec,
    base: &SystemParams,
    delta_follows: bool,
    amplitude: Option<f64>,
    columns: Vec<&'static str>,
    point: F,
) -> SweepResult
where
    F: Fn(&SystemParams) -> Result<Observables> + Sync,
{
    let rows = spec
        .values()
        .into_par_iter()
        .map(|value| {
            let resolved = spec.resolve(value, base);
            let (outcome, warnings) = match spec.parameter.apply(base, resolved, delta_follows) {
                Ok(p) => (point(&p), validate_regime(&p, amplitude).len()),
                Err(e) => (Err(e), 0),
            };
            make_row(value, resolved, outcome, warnings)
        })
        .collect();
    SweepResult { spec: Some(*spec), columns, rows }
}

/// Steady-state observables of one parameter point.
fn steady_point(tier: ModelTier, p: &SystemParams) -> Result<(LinearModel, GaussianState, f64)> {
    let model = tier.build(p)?;
    let st = stability(&model)?;
    if !st.stable {
        return Err(Error::UnstableSystem { abscissa: st.abscissa });
    }
    let state = steady_covariance(&model)?;
    state.check_physical()?;
    Ok((model, state, st.abscissa))
}

/// Steady-state mirror occupancy of the given model tier.
pub fn mirror_occupancy(tier: ModelTier, p: &SystemParams) -> Result<f64> {
    let (_, state, _) = steady_point(tier, p)?;
    occupancy(&state, Mode::Mirror)
}

/// Steady-state E_N between c₂ and b.
pub fn atom_mirror_negativity(tier: ModelTier, p: &SystemParams) -> Result<f64> {
    let (_, state, _) = steady_point(tier, p)?;
    log_negativity(&state, Mode::Coherence, Mode::Mirror)
}

/// Detuning used for the bare-cavity comparison.
pub fn bare_reference(p: &SystemParams) -> SystemParams {
    SystemParams { cavity_detuning: p.cavity_decay / 2.0, ..*p }
}

#[derive(Debug, Clone)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub files: Vec<OutputFile>,
    pub summary: Value,
    /// Human-readable report for the terminal.
    pub report: String,
    /// Every sweep point failed as unstable.
    pub all_unstable: bool,
}

/// Commented reproducibility header placed at the top of every CSV.
pub fn header(cfg: &ExperimentConfig, experiment: Experiment) -> String {
    cfg.to_reproducible_toml(experiment).lines().map(|l| format!("# {l}\n").replace("# \n", "#\n")).collect()
}

fn prefix(cfg: &ExperimentConfig, experiment: Experiment) -> String {
    cfg.prefix.clone().unwrap_or_else(|| experiment.name().to_string())
}

fn check_experiment(cfg: &ExperimentConfig, experiment: Experiment) -> Result<()> {
    match cfg.experiment {
        Some(e) if e != experiment && experiment != Experiment::Rates => Err(Error::Config(format!(
            "run.experiment: config is for `{e}` but `{experiment}` was requested"
        ))),
        _ => Ok(()),
    }
}

fn all_unstable(s: &SweepResult) -> bool {
    s.rows.iter().all(|r| r.error == Some("unstable"))
}

pub fn run(cfg: &ExperimentConfig, experiment: Experiment) -> Result<RunOutput> {
    check_experiment(cfg, experiment)?;
    if experiment != Experiment::Spectrum && cfg.sweep.is_some_and(|s| s.parameter == SweepParam::Probe) {
        return Err(Error::Config("sweep.parameter: `omega` is the probe offset and only applies to spectrum".into()));
    }
    match experiment {
        Experiment::Spectrum => run_spectrum(cfg),
        Experiment::Cool => run_cooling_sweep(cfg),
        Experiment::Map => run_mapping(cfg),
        Experiment::Entangle => run_entanglement_sweep(cfg),
        Experiment::Rates => print_rates(cfg),
    }
}

fn sweep_or_point<F>(cfg: &ExperimentConfig, columns: Vec<&'static str>, point: F) -> SweepResult
where
    F: Fn(&SystemParams) -> Result<Observables> + Sync,
{
    match &cfg.sweep {
        Some(spec) => run_sweep(spec, &cfg.params, cfg.delta_follows, cfg.intracavity_amplitude, columns, point),
        None => {
            let p = cfg.params;
            let warnings = validate_regime(&p, cfg.intracavity_amplitude).len();
            SweepResult { spec: None, columns, rows: vec![make_row(0.0, 0.0, point(&p), warnings)] }
        }
    }
}

fn row_json(r: &SweepRow) -> Value {
    json!({ "value": r.value, "internal": r.resolved, "observables": r.observables })
}

pub fn run_cooling_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let tier = cfg.tier;
    if !matches!(tier, ModelTier::Full | ModelTier::Bare) {
        return Err(Error::Config(format!("run.model: cooling sweeps need `full` or `bare`, got `{tier}`")));
    }
    let paired = tier == ModelTier::Full && cfg.sweep.map(|s| s.parameter == SweepParam::G).unwrap_or(false);
    let mut columns = vec!["n_f", "n_f_analytic", "spectral_abscissa"];
    if paired {
        columns.extend(["n_f_bare", "bare_over_eit"]);
    }
    let result = sweep_or_point(cfg, columns, |p| {
        let (_, state, abscissa) = steady_point(tier, p)?;
        let n_f = occupancy(&state, Mode::Mirror)?;
        let mut obs = Observables::from([("n_f", n_f), ("spectral_abscissa", abscissa)]);
        if let Ok((pred, _)) = predict_cooling(p) {
            obs.insert("n_f_analytic", pred.n_f);
        }
        if paired {
            if let Ok(bare) = mirror_occupancy(ModelTier::Bare, &bare_reference(p)) {
                obs.insert("n_f_bare", bare);
                obs.insert("bare_over_eit", bare / n_f);
            }
        }
        Ok(obs)
    });

    let best = result.argmin("n_f");
    let summary = json!({
        "experiment": "cool",
        "model": tier.name(),
        "parameter": result.spec.map(|sp| sp.parameter.name()),
        "units": result.spec.map(|sp| sp.units.name()),
        "points": result.rows.len(),
        "failed": result.failed_count(),
        "min_n_f": best.and_then(|r| r.get("n_f")),
        "argmin": best.map(|r| r.value),
        "best": best.map(row_json),
    });
    let report = match best {
        Some(r) => format!(
            "cool [{tier}]: {} points, {} failed; min n_f = {:.4} at {} = {} {}\n",
            result.rows.len(),
            result.failed_count(),
            r.get("n_f").unwrap_or(0.0),
            result.spec.map(|sp| sp.parameter.name()).unwrap_or("point"),
            r.value,
            result.spec.map(|sp| sp.units.name()).unwrap_or("")
        ),
        None => format!("cool [{tier}]: all {} points failed\n", result.rows.len()),
    };
    let name = prefix(cfg, Experiment::Cool);
    Ok(RunOutput {
        experiment: Experiment::Cool,
        files: vec![
            OutputFile { name: format!("{name}.csv"), contents: header(cfg, Experiment::Cool) + &result.to_csv() },
            OutputFile { name: format!("{name}_summary.json"), contents: pretty(&summary) },
        ],
        all_unstable: all_unstable(&result),
        summary,
        report,
    })
}

pub fn run_entanglement_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let tier = cfg.tier;
    if !matches!(tier, ModelTier::Full | ModelTier::RwaStokes) {
        return Err(Error::Config(format!("run.model: entanglement sweeps need `full` or `rwa-stokes`, got `{tier}`")));
    }
    let result = sweep_or_point(cfg, vec!["E_N", "n_f", "spectral_abscissa"], |p| {
        let (_, state, abscissa) = steady_point(tier, p)?;
        Ok(Observables::from([
            ("E_N", log_negativity(&state, Mode::Coherence, Mode::Mirror)?),
            ("n_f", occupancy(&state, Mode::Mirror)?),
            ("spectral_abscissa", abscissa),
        ]))
    });

    let best = result.argmax("E_N");
    let first_unstable = result.rows.iter().find(|r| r.error == Some("unstable")).map(|r| r.value);
    let mut summary = json!({
        "experiment": "entangle",
        "model": tier.name(),
        "parameter": result.spec.map(|sp| sp.parameter.name()),
        "units": result.spec.map(|sp| sp.units.name()),
        "points": result.rows.len(),
        "failed": result.failed_count(),
        "max_E_N": best.and_then(|r| r.get("E_N")),
        "argmax": best.map(|r| r.value),
        "first_unstable": first_unstable,
        "predicted_crossover_n_i": predict_entanglement_crossover(&cfg.params).ok(),
        "far_detuned_coupling_hz": derived_rates(&cfg.params).ok().map(|r| to_hz(r.far_detuned_coupling)),
    });
    if let Some(spec) = &cfg.sweep {
        match spec.parameter {
            SweepParam::NI => {
                summary["crossover_n_i"] = json!(entanglement_crossover(&result));
            }
            SweepParam::G => {
                let lo = spec.resolve(spec.min, &cfg.params);
                let hi = spec.resolve(spec.max, &cfg.params);
                summary["instability_threshold_hz"] =
                    json!(instability_threshold(&cfg.params, tier, (lo, hi)).ok().map(to_hz));
                summary["monotonic_until_instability"] = json!(monotonic_until_failure(&result, "E_N"));
            }
            _ => {}
        }
    }
    let report = match best {
        Some(r) => format!(
            "entangle [{tier}]: {} points, {} failed; max E_N = {:.4} at {} = {} {}\n",
            result.rows.len(),
            result.failed_count(),
            r.get("E_N").unwrap_or(0.0),
            result.spec.map(|sp| sp.parameter.name()).unwrap_or("point"),
            r.value,
            result.spec.map(|sp| sp.units.name()).unwrap_or("")
        ),
        None => format!("entangle [{tier}]: all {} points failed\n", result.rows.len()),
    };
    let name = prefix(cfg, Experiment::Entangle);
    Ok(RunOutput {
        experiment: Experiment::Entangle,
        files: vec![
            OutputFile { name: format!("{name}.csv"), contents: header(cfg, Experiment::Entangle) + &result.to_csv() },
            OutputFile { name: format!("{name}_summary.json"), contents: pretty(&summary) },
        ],
        all_unstable: all_unstable(&result),
        summary,
        report,
    })
}

/// First grid value at which E_N has dropped to zero after being positive.
pub fn entanglement_crossover(result: &SweepResult) -> Option<f64> {
    let mut seen_positive = false;
    for r in &result.rows {
        match r.get("E_N") {
            Some(e) if e > 0.0 => seen_positive = true,
            Some(_) if seen_positive => return Some(r.value),
            _ => {}
        }
    }
    None
}

/// Whether `key` is non-decreasing across rows up to the first failed row.
pub fn monotonic_until_failure(result: &SweepResult, key: &str) -> bool {
    let vals: Vec<f64> = result.rows.iter().take_while(|r| r.error.is_none()).filter_map(|r| r.get(key)).collect();
    vals.windows(2).all(|w| w[1] >= w[0])
}

pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params;
    let grid = match &cfg.sweep {
        None => default_grid(&p),
        Some(s) if s.parameter == SweepParam::Probe => s.values().iter().map(|&v| s.resolve(v, &p)).collect(),
        Some(s) => {
            return Err(Error::Config(format!(
                "sweep.parameter: spectra sweep the probe offset `omega`, got `{}`",
                s.parameter.name()
            )))
        }
    };
    let empty = SystemParams { atom_coupling: 0.0, ..p };
    let eit = transmission_spectrum(&p, &grid)?;
    let bare = transmission_spectrum(&empty, &grid)?;
    let (t_eit, t_bare) = (eit.transmission(), bare.transmission());

    let mut csv = header(cfg, Experiment::Spectrum);
    csv.push_str(&format!("# sidebands_hz = [{}, {}]\n", -to_hz(p.mech_freq), to_hz(p.mech_freq)));
    csv.push_str("omega_hz,omega_over_omega_m,transmission_eit,transmission_bare\n");
    for (i, &w) in grid.iter().enumerate() {
        csv.push_str(&format!("{},{},{},{}\n", to_hz(w), w / p.mech_freq, t_eit[i], t_bare[i]));
    }

    let peak = (0..t_eit.len()).max_by(|&a, &b| t_eit[a].total_cmp(&t_eit[b])).map(|i| to_hz(grid[i]));
    let hw_eit = extract_halfwidth(&eit);
    let hw_bare = extract_halfwidth(&bare);
    let kappa_eit = derived_rates(&p).ok().map(|r| to_hz(r.kappa_eit));
    let summary = json!({
        "experiment": "spectrum",
        "points": grid.len(),
        "halfwidth_eit_hz": hw_eit.as_ref().ok().map(|&h| to_hz(h)),
        "halfwidth_eit_error": hw_eit.as_ref().err().map(|e| e.to_string()),
        "halfwidth_bare_hz": hw_bare.as_ref().ok().map(|&h| to_hz(h)),
        "halfwidth_bare_error": hw_bare.as_ref().err().map(|e| e.to_string()),
        "kappa_eit_hz": kappa_eit,
        "kappa_hz": to_hz(p.cavity_decay),
        "peak_hz": peak,
        "two_photon_detuning_hz": to_hz(p.two_photon_detuning),
        "sidebands_hz": [-to_hz(p.mech_freq), to_hz(p.mech_freq)],
    });
    let report = format!(
        "spectrum: {} points; EIT halfwidth {} Hz (κ_EIT {} Hz), bare halfwidth {} Hz\n",
        grid.len(),
        fmt_opt(hw_eit.ok().map(to_hz)),
        fmt_opt(kappa_eit),
        fmt_opt(hw_bare.ok().map(to_hz)),
    );
    let name = prefix(cfg, Experiment::Spectrum);
    Ok(RunOutput {
        experiment: Experiment::Spectrum,
        files: vec![
            OutputFile { name: format!("{name}.csv"), contents: csv },
            OutputFile { name: format!("{name}_summary.json"), contents: pretty(&summary) },
        ],
        summary,
        report,
        all_unstable: false,
    })
}

/// Result of the state-transfer simulation.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub effective_coupling: f64,
    pub trajectory: Trajectory,
    pub initial: GaussianState,
    /// Times 0, π/(2g_eff), π/g_eff.
    pub snapshots: [f64; 3],
}

impl Mapping {
    /// Initial atomic moments as they would appear in the mirror after a
    /// perfect beamsplitter swap, which applies b → −i·c₂.
    pub fn swap_target(&self) -> Result<GaussianState> {
        rotate_mode(&self.initial, Mode::Coherence, PI / 2.0)
    }

    /// Fidelity of the mirror at `state` against the initial atomic state,
    /// raw and after the swap phase.
    pub fn fidelities(&self, state: &GaussianState) -> Result<(f64, f64)> {
        let (mu_b, v_b) = state.mode_moments(Mode::Mirror)?;
        let (mu_a, v_a) = self.initial.mode_moments(Mode::Coherence)?;
        let (mu_s, v_s) = self.swap_target()?.mode_moments(Mode::Coherence)?;
        Ok((fidelity_moments(&mu_b, &v_b, &mu_a, &v_a)?, fidelity_moments(&mu_b, &v_b, &mu_s, &v_s)?))
    }
}

/// Propagates squeezed(c₂) ⊗ thermal(b) under the RWA beamsplitter model to
/// t = π/g_eff, with π/(2g_eff) landing exactly on a step.
pub fn simulate_mapping(p: &SystemParams, spec: &crate::config::MappingSpec) -> Result<Mapping> {
    let g = derived_rates(p)?.effective_coupling;
    if !(g > 0.0) {
        return Err(Error::Config("mapping needs a nonzero effective coupling g_eff".into()));
    }
    let model = ModelTier::RwaAntiStokes.build(p)?;
    let initial = prepare_product_state(&[
        (Mode::Coherence, ModeSpec::Squeezed { r: spec.squeeze_r, angle: spec.squeeze_angle }),
        (Mode::Mirror, ModeSpec::Thermal { n: spec.thermal_n }),
    ])?;
    let t_final = PI / g;
    let dt = default_step(&model, t_final)?;
    let half_steps = (t_final / (2.0 * dt)).ceil().max(1.0);
    let trajectory = propagate(&model, &initial, t_final, Some(t_final / (2.0 * half_steps)))?;
    Ok(Mapping { effective_coupling: g, trajectory, initial, snapshots: [0.0, t_final / 2.0, t_final] })
}

fn wigner_csv(head: &str, w: &WignerGrid) -> String {
    let mut s = String::from(head);
    s.push_str("x,p,W\n");
    for (i, x) in w.x_axis.iter().enumerate() {
        for (j, p) in w.p_axis.iter().enumerate() {
            s.push_str(&format!("{x},{p},{}\n", w.values[(i, j)]));
        }
    }
    s
}

pub fn run_mapping(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.tier != ModelTier::RwaAntiStokes {
        return Err(Error::Config(format!("run.model: mapping runs the `rwa-anti-stokes` model, got `{}`", cfg.tier)));
    }
    let p = cfg.params;
    let spec = cfg.mapping;
    let r = derived_rates(&p)?;
    let m = simulate_mapping(&p, &spec)?;
    let g = m.effective_coupling;
    let head = header(cfg, Experiment::Map);
    let name = prefix(cfg, Experiment::Map);

    let ratios = [
        if p.mech_damping * p.bath_occupancy > 0.0 { Some(g / (p.mech_damping * p.bath_occupancy)) } else { None },
        if r.optical_rate_norm > 0.0 { Some(g / r.optical_rate_norm) } else { None },
        if r.pumping_rate_norm > 0.0 { Some(g / r.pumping_rate_norm) } else { None },
    ];

    let mut series = head.clone();
    series.push_str("t_s,t_over_swap,n_atom,n_mirror,fidelity_raw,fidelity_swap,min_var_mirror\n");
    for i in m.trajectory.decimated_indices(spec.samples) {
        let (t, s) = (m.trajectory.times[i], &m.trajectory.states[i]);
        let (f_raw, f_swap) = m.fidelities(s)?;
        series.push_str(&format!(
            "{t},{},{},{},{f_raw},{f_swap},{}\n",
            t * g / PI,
            occupancy(s, Mode::Coherence)?,
            occupancy(s, Mode::Mirror)?,
            min_quadrature_variance(s, Mode::Mirror)?
        ));
    }

    let mut files = vec![OutputFile { name: format!("{name}_trajectory.csv"), contents: series }];
    let mut snaps = Vec::new();
    for (label, &t) in ["t0", "half", "full"].iter().zip(m.snapshots.iter()) {
        let (t_actual, s) = m.trajectory.nearest(t);
        for mode in [Mode::Coherence, Mode::Mirror] {
            let grid = GridSpec::around(s, mode, spec.wigner_sigma, spec.wigner_points)?;
            let w = wigner(s, mode, &grid)?;
            files.push(OutputFile {
                name: format!("{name}_wigner_{}_{label}.csv", mode.label()),
                contents: wigner_csv(&format!("{head}# t_s = {t_actual}\n# mode = {}\n", mode.label()), &w),
            });
        }
        let (f_raw, f_swap) = m.fidelities(s)?;
        snaps.push(json!({
            "label": label,
            "t_s": t_actual,
            "n_atom": occupancy(s, Mode::Coherence)?,
            "n_mirror": occupancy(s, Mode::Mirror)?,
            "min_var_mirror": min_quadrature_variance(s, Mode::Mirror)?,
            "mirror_cov": [[s.mode_moments(Mode::Mirror)?.1[(0, 0)], s.mode_moments(Mode::Mirror)?.1[(0, 1)]],
                           [s.mode_moments(Mode::Mirror)?.1[(1, 0)], s.mode_moments(Mode::Mirror)?.1[(1, 1)]]],
            "fidelity_raw": f_raw,
            "fidelity_swap": f_swap,
        }));
    }

    let best_swap = m
        .trajectory
        .states
        .iter()
        .zip(&m.trajectory.times)
        .filter_map(|(s, &t)| m.fidelities(s).ok().map(|f| (t, f.1)))
        .max_by(|a, b| a.1.total_cmp(&b.1));

    let cross_check = if spec.full_cross_check { Some(full_model_cross_check(&p, &spec, &m)?) } else { None };

    let summary = json!({
        "experiment": "map",
        "effective_coupling_hz": to_hz(g),
        "swap_time_s": PI / (2.0 * g),
        "t_final_s": PI / g,
        "ratios": {
            "g_eff_over_thermal": ratios[0],
            "g_eff_over_gamma_O": ratios[1],
            "g_eff_over_gamma_E": ratios[2],
        },
        "snapshots": snaps,
        "best_fidelity_swap": best_swap.map(|(t, f)| json!({ "t_s": t, "fidelity": f })),
        "full_model": cross_check,
    });
    let report = format!(
        "map: g_eff = {:.1} Hz; ratios (g/γ_m n_i, g/γ_O, g/γ_E) = ({}, {}, {}); fidelity at π/(2g_eff) {:.3}, at π/g_eff {:.3}\n",
        to_hz(g),
        fmt_opt(ratios[0]),
        fmt_opt(ratios[1]),
        fmt_opt(ratios[2]),
        summary["snapshots"][1]["fidelity_swap"].as_f64().unwrap_or(0.0),
        summary["snapshots"][2]["fidelity_raw"].as_f64().unwrap_or(0.0),
    );
    files.push(OutputFile { name: format!("{name}_summary.json"), contents: pretty(&summary) });
    Ok(RunOutput { experiment: Experiment::Map, files, summary, report, all_unstable: false })
}

/// Same initial state in the four-mode model (c₃ and a in vacuum). Only
/// frame-independent quantities are compared: occupancy and the smallest
/// quadrature variance of the mirror.
fn full_model_cross_check(p: &SystemParams, spec: &crate::config::MappingSpec, m: &Mapping) -> Result<Value> {
    let model = ModelTier::Full.build(p)?;
    let initial = prepare_product_state(&[
        (Mode::Coherence, ModeSpec::Squeezed { r: spec.squeeze_r, angle: spec.squeeze_angle }),
        (Mode::Dipole, ModeSpec::Vacuum),
        (Mode::Cavity, ModeSpec::Vacuum),
        (Mode::Mirror, ModeSpec::Thermal { n: spec.thermal_n }),
    ])?;
    let t_final = m.snapshots[2];
    let traj = propagate(&model, &initial, t_final, Some(t_final / 1000.0))?;
    let mut out = Vec::new();
    for &t in &m.snapshots {
        let (t_actual, s) = traj.nearest(t);
        out.push(json!({
            "t_s": t_actual,
            "n_mirror": occupancy(s, Mode::Mirror)?,
            "min_var_mirror": min_quadrature_variance(s, Mode::Mirror)?,
        }));
    }
    Ok(json!({ "stable": stability(&model)?.stable, "snapshots": out }))
}

pub fn print_rates(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = cfg.params;
    let r = derived_rates(&p)?;
    let cooling = predict_cooling(&p).ok().map(|c| c.0);
    let crossover = predict_entanglement_crossover(&p).ok();
    let warnings = validate_regime(&p, cfg.intracavity_amplitude);
    let model = cfg.tier.build(&p)?;
    let st = stability(&model)?;

    let rate_rows: [(&str, f64, bool); 8] = [
        ("cooperativity", r.cooperativity, false),
        ("optical_rate", r.optical_rate, true),
        ("pumping_rate", r.pumping_rate, true),
        ("optical_rate_norm", r.optical_rate_norm, true),
        ("pumping_rate_norm", r.pumping_rate_norm, true),
        ("kappa_eit", r.kappa_eit, true),
        ("effective_coupling", r.effective_coupling, true),
        ("far_detuned_coupling", r.far_detuned_coupling, true),
    ];
    let mut report = String::from("derived rates\n");
    for (k, v, angular) in rate_rows {
        if angular {
            report.push_str(&format!("  {k:<22} {v:>14.6e} rad/s   (2π)·{:.6e} Hz\n", to_hz(v)));
        } else {
            report.push_str(&format!("  {k:<22} {v:>14.6e}\n"));
        }
    }
    report.push_str("predictions\n");
    if let Some(c) = &cooling {
        report.push_str(&format!("  n_f (leading order)    {:.6e}\n", c.n_f));
        report.push_str(&format!("  cooling_rate           (2π)·{:.6e} Hz\n", to_hz(c.cooling_rate)));
        report.push_str(&format!("  heating_rate           (2π)·{:.6e} Hz\n", to_hz(c.heating_rate)));
    }
    if let Some(n) = crossover {
        report.push_str(&format!("  entanglement n_i*      {n:.6e}\n"));
    }
    report.push_str(&format!(
        "regime warnings: {}\n",
        if warnings.is_empty() { "none".to_string() } else { warnings.iter().map(|w| w.name()).collect::<Vec<_>>().join(", ") }
    ));
    report.push_str(&format!(
        "model {}: spectral abscissa {:.6e} rad/s, {}\n",
        cfg.tier,
        st.abscissa,
        if st.stable { "stable" } else { "unstable" }
    ));

    let summary = json!({
        "experiment": "rates",
        "rates": r,
        "rates_hz": rate_rows.iter().filter(|x| x.2).map(|(k, v, _)| (k.to_string(), json!(to_hz(*v)))).collect::<serde_json::Map<_, _>>(),
        "cooling_prediction": cooling,
        "entanglement_crossover_n_i": crossover,
        "regime_warnings": warnings.iter().map(|w| w.name()).collect::<Vec<_>>(),
        "model": cfg.tier.name(),
        "stability": st,
        "params": p,
    });
    let name = prefix(cfg, Experiment::Rates);
    Ok(RunOutput {
        experiment: Experiment::Rates,
        files: vec![OutputFile { name: format!("{name}.json"), contents: pretty(&summary) }],
        summary,
        report,
        all_unstable: false,
    })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "n/a".into())
}
