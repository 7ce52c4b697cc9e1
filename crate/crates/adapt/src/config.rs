//! The JSON configuration document and its conversion to simulation inputs.
//!
//! Rates in the document are expressed either in units of κ or of ω_R
//! (`"unit"`). Internally every run uses ω_R = 1; times scale by the inverse
//! factor. Exported times are converted back to the document's unit.

use std::collections::BTreeSet;

use cavity_core::dynamics::{default_dt_full, default_dt_overdamped, IntegratorOptions, NoiseOptions, Scheme};
use cavity_core::equilibria::EquilibriumOptions;
use cavity_core::illumination::{
    make_comb_patterns, NamedPattern, Schedule, ScheduleMode, StationarityCriteria, Trigger,
};
use cavity_core::{IlluminationPattern, SystemParams, SystemState, WAVELENGTH};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Kappa,
    Recoil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub unit: Unit,
    pub system: SystemSection,
    pub patterns: Vec<PatternSpec>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub equilibria: EquilibriaSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_particles: usize,
    /// Required when `unit` is `kappa`; must be absent or 1 for `recoil`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recoil_frequency: Option<f64>,
    /// Required when `unit` is `recoil`; must be absent or 1 for `kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub u0: f64,
    pub delta_c: f64,
    #[serde(default)]
    pub friction: f64,
}

/// One entry of `patterns`: explicit modes, a mask over modes 1, 2, …, or a
/// comb generator that expands into several patterns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSpec>>,
    /// Per-mode multipliers of `eta`; mode `i + 1` for entry `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb: Option<CombSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode_order: u32,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSpec {
    pub n1: u32,
    pub dn: u32,
    pub master_count: usize,
    pub pattern_count: usize,
    #[serde(default = "default_modes_per_pattern")]
    pub modes_per_pattern: usize,
    pub eta: f64,
}

fn default_modes_per_pattern() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleModeSpec {
    #[default]
    Static,
    PeriodicCycle,
    RandomSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TriggerSpec {
    #[default]
    Never,
    FixedInterval {
        interval: f64,
    },
    Stationarity {
        #[serde(default = "d_tol")]
        tol_v: f64,
        #[serde(default = "d_tol")]
        tol_f: f64,
        #[serde(default = "d_window")]
        window: usize,
        #[serde(default = "d_stride")]
        check_stride: usize,
        #[serde(default = "d_timeout")]
        timeout: f64,
    },
}

fn d_tol() -> f64 {
    StationarityCriteria::default().tol_v
}
fn d_window() -> usize {
    StationarityCriteria::default().window
}
fn d_stride() -> usize {
    StationarityCriteria::default().check_stride
}
fn d_timeout() -> f64 {
    StationarityCriteria::default().timeout
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub mode: ScheduleModeSpec,
    #[serde(default)]
    pub trigger: TriggerSpec,
    #[serde(default)]
    pub max_switches: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSpec {
    Full,
    #[default]
    Overdamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default)]
    pub scheme: SchemeSpec,
    /// `None` picks the scheme's default step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_max_time")]
    pub max_time: f64,
    #[serde(default = "d_sample_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub cluster_epsilon: Option<f64>,
}

fn d_max_time() -> f64 {
    100.0
}
fn d_sample_stride() -> usize {
    100
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            scheme: SchemeSpec::default(),
            dt: None,
            max_time: d_max_time(),
            sample_stride: d_sample_stride(),
            cluster_epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "d_kick_interval")]
    pub kick_interval: f64,
    #[serde(default)]
    pub kick_sigma: f64,
}

fn d_kick_interval() -> f64 {
    1.0
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: false,
            kick_interval: d_kick_interval(),
            kick_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momenta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaSection {
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    /// Grid for the exported landscape; defaults to `resolution`.
    #[serde(default)]
    pub landscape_resolution: Option<usize>,
    #[serde(default = "d_tol_force")]
    pub tol_force: f64,
    #[serde(default = "d_tol_dedup")]
    pub tol_dedup: f64,
    #[serde(default = "d_eig_margin")]
    pub eig_margin: f64,
    #[serde(default = "d_true")]
    pub keep_null_field: bool,
}

fn d_resolution() -> usize {
    EquilibriumOptions::default().resolution
}
fn d_tol_force() -> f64 {
    EquilibriumOptions::default().tol_force
}
fn d_tol_dedup() -> f64 {
    EquilibriumOptions::default().tol_dedup
}
fn d_eig_margin() -> f64 {
    EquilibriumOptions::default().eig_margin
}
fn d_true() -> bool {
    true
}

impl Default for EquilibriaSection {
    fn default() -> Self {
        EquilibriaSection {
            resolution: d_resolution(),
            landscape_resolution: None,
            tol_force: d_tol_force(),
            tol_dedup: d_tol_dedup(),
            eig_margin: d_eig_margin(),
            keep_null_field: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// After the run, relax the first pattern once from the initial state and
    /// once from the final state and report both intensities.
    #[serde(default)]
    pub memory_probe: bool,
}

/// Everything a command needs, in internal units (ω_R = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub params: SystemParams,
    pub initial: SystemState,
    pub schedule: Schedule,
    pub integrator: IntegratorOptions,
    pub noise: NoiseOptions,
    pub equilibria: EquilibriumOptions,
    pub landscape_resolution: usize,
    pub memory_probe: bool,
    /// Internal time per unit of document time.
    pub time_scale: f64,
    pub seed: u64,
}

impl Experiment {
    /// Converts an internal time to the document's unit.
    pub fn export_time(&self, t: f64) -> f64 {
        t / self.time_scale
    }
}

const STREAM_POSITIONS: u64 = 0;
const STREAM_SCHEDULE: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PATTERNS: u64 = 3;

/// A 64-bit seed drawn from stream `stream` of a ChaCha8 generator keyed by
/// `seed`. Used both for per-purpose seeds and for ensemble members.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{name} must be finite")))
    }
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        serde_json::from_value(value).map_err(|e| bad(e.to_string()))
    }

    /// Internal time per document time unit, i.e. ω_R in the document unit.
    pub fn time_scale(&self) -> Result<f64, CliError> {
        let s = &self.system;
        match self.unit {
            Unit::Kappa => {
                if let Some(k) = s.kappa {
                    if k != 1.0 {
                        return Err(bad("with unit \"kappa\", system.kappa must be 1 or absent"));
                    }
                }
                let w = s
                    .recoil_frequency
                    .ok_or_else(|| bad("with unit \"kappa\", system.recoil_frequency is required"))?;
                if !(w > 0.0) || !w.is_finite() {
                    return Err(bad("recoil_frequency must be finite and > 0"));
                }
                Ok(w)
            }
            Unit::Recoil => {
                if let Some(w) = s.recoil_frequency {
                    if w != 1.0 {
                        return Err(bad(
                            "with unit \"recoil\", system.recoil_frequency must be 1 or absent",
                        ));
                    }
                }
                Ok(1.0)
            }
        }
    }
}

fn build_patterns(doc: &ConfigDocument, rate: f64, seed: u64) -> Result<Vec<NamedPattern>, CliError> {
    if doc.patterns.is_empty() {
        return Err(bad("patterns must not be empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PATTERNS));
    let mut out = Vec::new();
    for (i, spec) in doc.patterns.iter().enumerate() {
        let kinds = spec.modes.is_some() as u8 + spec.mask.is_some() as u8 + spec.comb.is_some() as u8;
        if kinds != 1 {
            return Err(bad(format!(
                "pattern {i}: exactly one of modes, mask or comb is required"
            )));
        }
        if let Some(modes) = &spec.modes {
            if spec.eta.is_some() {
                return Err(bad(format!("pattern {i}: eta belongs inside modes")));
            }
            let pattern = IlluminationPattern::new(
                modes.iter().map(|m| (m.mode_order, m.eta / rate)),
            )?;
            out.push(NamedPattern {
                name: spec.name.clone().unwrap_or_else(|| format!("p{i}")),
                pattern,
            });
        } else if let Some(mask) = &spec.mask {
            let eta = spec.eta.ok_or_else(|| bad(format!("pattern {i}: mask needs eta")))?;
            let pattern = IlluminationPattern::new(
                mask.iter()
                    .enumerate()
                    .map(|(k, w)| (k as u32 + 1, w * eta / rate)),
            )?;
            out.push(NamedPattern {
                name: spec.name.clone().unwrap_or_else(|| format!("p{i}")),
                pattern,
            });
        } else if let Some(c) = &spec.comb {
            if spec.eta.is_some() {
                return Err(bad(format!("pattern {i}: eta belongs inside comb")));
            }
            if !(c.eta >= 0.0) || !c.eta.is_finite() {
                return Err(bad(format!("pattern {i}: comb eta must be finite and >= 0")));
            }
            let base = spec.name.clone().unwrap_or_else(|| "comb".into());
            let family = make_comb_patterns(
                c.n1,
                c.dn,
                c.master_count,
                c.pattern_count,
                c.modes_per_pattern,
                c.eta / rate,
                &mut rng,
            )?;
            for (k, pattern) in family.into_iter().enumerate() {
                out.push(NamedPattern {
                    name: format!("{base}{}", k + 1),
                    pattern,
                });
            }
        }
    }
    let mut names = BTreeSet::new();
    for p in &out {
        if !names.insert(p.name.as_str()) {
            return Err(bad(format!("duplicate pattern name {:?}", p.name)));
        }
    }
    Ok(out)
}

/// Validates `doc` and builds the run inputs. `seed` keys every random
/// choice: initial positions, comb patterns, pattern draws and kicks.
pub fn build_system(doc: &ConfigDocument, seed: u64) -> Result<Experiment, CliError> {
    let s = &doc.system;
    if s.n_particles == 0 {
        return Err(CliError::Core(cavity_core::Error::InvalidParams(
            "n_particles must be >= 1".into(),
        )));
    }
    let scale = doc.time_scale()?;
    let kappa = match doc.unit {
        Unit::Kappa => 1.0,
        Unit::Recoil => s.kappa.ok_or_else(|| bad("with unit \"recoil\", system.kappa is required"))?,
    };
    let rate = |name: &str, v: f64| finite(name, v).map(|v| v / scale);
    let params = SystemParams::new(
        s.n_particles,
        1.0,
        rate("kappa", kappa)?,
        rate("u0", s.u0)?,
        rate("delta_c", s.delta_c)?,
        rate("friction", s.friction)?,
    )?;

    let patterns = build_patterns(doc, scale, seed)?;
    let mode = match doc.schedule.mode {
        ScheduleModeSpec::Static => ScheduleMode::Static,
        ScheduleModeSpec::PeriodicCycle => ScheduleMode::PeriodicCycle,
        ScheduleModeSpec::RandomSwitch => ScheduleMode::RandomSwitch,
    };
    let trigger = match doc.schedule.trigger {
        TriggerSpec::Never => Trigger::Never,
        TriggerSpec::FixedInterval { interval } => {
            Trigger::FixedInterval(finite("interval", interval)? * scale)
        }
        TriggerSpec::Stationarity {
            tol_v,
            tol_f,
            window,
            check_stride,
            timeout,
        } => Trigger::Stationarity(StationarityCriteria {
            tol_v: rate("tol_v", tol_v)?,
            tol_f: rate("tol_f", tol_f)?,
            window,
            check_stride,
            timeout: finite("timeout", timeout)? * scale,
        }),
    };
    let schedule = Schedule::new(
        mode,
        patterns,
        trigger,
        doc.schedule.max_switches,
        derive_seed(seed, STREAM_SCHEDULE),
    )?;

    let scheme = match doc.integrator.scheme {
        SchemeSpec::Full => Scheme::Full,
        SchemeSpec::Overdamped => Scheme::Overdamped,
    };
    let dt = match doc.integrator.dt {
        Some(dt) => finite("dt", dt)? * scale,
        None => match scheme {
            Scheme::Full => default_dt_full(&params),
            Scheme::Overdamped => default_dt_overdamped(&schedule, &params),
        },
    };
    let integrator = IntegratorOptions {
        scheme,
        dt,
        max_time: finite("max_time", doc.integrator.max_time)? * scale,
        sample_stride: doc.integrator.sample_stride,
        cluster_epsilon: doc.integrator.cluster_epsilon,
    };
    let noise = NoiseOptions {
        enabled: doc.noise.enabled,
        kick_interval: finite("kick_interval", doc.noise.kick_interval)? * scale,
        kick_sigma: finite("kick_sigma", doc.noise.kick_sigma)?,
        seed: derive_seed(seed, STREAM_NOISE),
    };

    let first = &schedule.patterns[0].pattern;
    let n = s.n_particles;
    let mut initial = match &doc.initial.positions {
        Some(xs) => {
            if xs.len() != n || xs.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("initial.positions needs {n} finite values")));
            }
            SystemState::at_rest(xs.clone(), first)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_POSITIONS));
            SystemState::random(n, first, &mut rng)
        }
    };
    if let Some(ps) = &doc.initial.momenta {
        if ps.len() != n || ps.iter().any(|p| !p.is_finite()) {
            return Err(bad(format!("initial.momenta needs {n} finite values")));
        }
        initial.momenta = ps.clone();
    }

    let e = &doc.equilibria;
    let equilibria = EquilibriumOptions {
        resolution: e.resolution,
        tol_force: rate("tol_force", e.tol_force)?,
        tol_dedup: finite("tol_dedup", e.tol_dedup)?,
        eig_margin: rate("eig_margin", e.eig_margin)?,
        keep_null_field: e.keep_null_field,
        ..EquilibriumOptions::default()
    };
    if !(equilibria.tol_dedup > 0.0 && equilibria.tol_dedup < WAVELENGTH) {
        return Err(bad("tol_dedup must lie in (0, 2π)"));
    }

    Ok(Experiment {
        params,
        initial,
        schedule,
        integrator,
        noise,
        equilibria,
        landscape_resolution: e.landscape_resolution.unwrap_or(e.resolution),
        memory_probe: doc.diagnostics.memory_probe,
        time_scale: scale,
        seed,
    })
}
