//! Domain types shared by every module.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result, WAVELENGTH};

/// Global physical constants in dimensionless units (`ħ = 1`, `k = 1`).
///
/// All rates share one unit; the mass is not stored and follows from the
/// recoil frequency as `m = 1 / (2 ω_R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub n_particles: usize,
    pub recoil_frequency: f64,
    /// Cavity field decay rate κ.
    pub kappa: f64,
    /// Light shift per photon U₀ (negative for high-field seekers).
    pub u0: f64,
    /// Pump-cavity detuning δ_c.
    pub delta_c: f64,
    /// Linear momentum damping rate μ.
    pub friction: f64,
}

impl SystemParams {
    pub fn new(
        n_particles: usize,
        recoil_frequency: f64,
        kappa: f64,
        u0: f64,
        delta_c: f64,
        friction: f64,
    ) -> Result<Self> {
        let params = SystemParams {
            n_particles,
            recoil_frequency,
            kappa,
            u0,
            delta_c,
            friction,
        };
        params.validate()?;
        Ok(params)
    }

    /// A closed cavity (κ = 0). Only the full integrator and [`crate::optics::energy`]
    /// are meaningful here: the adiabatic field has no damping to settle on.
    pub fn lossless(
        n_particles: usize,
        recoil_frequency: f64,
        u0: f64,
        delta_c: f64,
        friction: f64,
    ) -> Result<Self> {
        let params = SystemParams {
            n_particles,
            recoil_frequency,
            kappa: 0.0,
            u0,
            delta_c,
            friction,
        };
        params.check_common()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_common()?;
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParams(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    fn check_common(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidParams("n_particles must be >= 1".into()));
        }
        if !(self.recoil_frequency > 0.0) || !self.recoil_frequency.is_finite() {
            return Err(Error::InvalidParams(format!(
                "recoil_frequency must be finite and > 0, got {}",
                self.recoil_frequency
            )));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("u0", self.u0),
            ("delta_c", self.delta_c),
            ("friction", self.friction),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        if self.friction < 0.0 {
            return Err(Error::InvalidParams("friction must be >= 0".into()));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        0.5 / self.recoil_frequency
    }
}

/// One pumped cavity mode: order `n` (wavenumber `n k`) and pump strength η_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDrive {
    pub order: u32,
    pub eta: f64,
}

/// The set of pumped modes with their pump strengths.
///
/// Entries are kept sorted by mode order, distinct, and strictly positive in
/// strength; zero-strength entries are dropped on construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IlluminationPattern {
    entries: Vec<ModeDrive>,
}

impl IlluminationPattern {
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut out: Vec<ModeDrive> = Vec::new();
        for (order, eta) in entries {
            if order == 0 {
                return Err(Error::InvalidParams("mode order must be >= 1".into()));
            }
            if !eta.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "pump strength of mode {order} must be finite"
                )));
            }
            if eta < 0.0 {
                return Err(Error::NegativePump {
                    mode_order: order,
                    eta,
                });
            }
            if out.iter().any(|m| m.order == order) {
                return Err(Error::DuplicateMode(order));
            }
            out.push(ModeDrive { order, eta });
        }
        out.retain(|m| m.eta > 0.0);
        out.sort_by_key(|m| m.order);
        Ok(IlluminationPattern { entries: out })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn modes(&self) -> &[ModeDrive] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.entries.last().map(|m| m.order)
    }

    pub fn contains(&self, order: u32) -> bool {
        self.entries.binary_search_by_key(&order, |m| m.order).is_ok()
    }
}

/// Particle positions and momenta, cavity amplitudes, and simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Unwrapped positions along the cavity axis.
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    /// Complex amplitude α_n per pumped mode order.
    pub fields: BTreeMap<u32, Complex64>,
    pub time: f64,
}

impl SystemState {
    /// Particles at the given positions, at rest, with empty cavity modes for
    /// every mode of `pattern`.
    pub fn at_rest(positions: Vec<f64>, pattern: &IlluminationPattern) -> Self {
        let n = positions.len();
        SystemState {
            positions,
            momenta: alloc::vec![0.0; n],
            fields: empty_fields(pattern),
            time: 0.0,
        }
    }

    /// Uniformly random positions on `[0, 2π)`, zero momenta and fields.
    pub fn random<R: Rng + ?Sized>(n: usize, pattern: &IlluminationPattern, rng: &mut R) -> Self {
        let positions = (0..n).map(|_| rng.random::<f64>() * WAVELENGTH).collect();
        Self::at_rest(positions, pattern)
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    /// Makes `fields` carry exactly the modes of `pattern`: retained modes
    /// keep their amplitude, new modes start empty, unpumped ones are dropped.
    pub fn retarget_fields(&mut self, pattern: &IlluminationPattern) {
        let mut next = BTreeMap::new();
        for m in pattern.modes() {
            let a = self.fields.get(&m.order).copied().unwrap_or_default();
            next.insert(m.order, a);
        }
        self.fields = next;
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|x| x.is_finite())
            && self.momenta.iter().all(|p| p.is_finite())
            && self.fields.values().all(|a| a.re.is_finite() && a.im.is_finite())
            && self.time.is_finite()
    }
}

pub(crate) fn empty_fields(pattern: &IlluminationPattern) -> BTreeMap<u32, Complex64> {
    pattern
        .modes()
        .iter()
        .map(|m| (m.order, Complex64::new(0.0, 0.0)))
        .collect()
}

/// Linear stability of an equilibrium of the overdamped flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// A zero-force configuration of the adiabatic system.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// Canonical representative: reduced to `[0, 2π)` and sorted.
    pub positions: Vec<f64>,
    pub classification: Stability,
    /// Total scattered intensity `P_tot` at this configuration.
    pub intensity: f64,
    /// Real parts of the force Jacobian eigenvalues, ascending.
    pub eigen_real_parts: Vec<f64>,
}

/// One diagnostic sample along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    /// `(mode order, |α_n|²)` for the active pattern.
    pub mode_intensities: Vec<(u32, f64)>,
    pub intensity: f64,
    pub total_order: f64,
    pub cluster_count: usize,
    pub cluster_pairs: usize,
    /// Index into the schedule's pattern list.
    pub pattern: usize,
}

/// A schedule switch: pattern `pattern` became active at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEvent {
    pub time: f64,
    pub switch_index: usize,
    pub pattern: usize,
}

/// Observables at the end of one illumination interval, just before the
/// next switch (or at the end of the run).
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub switch_index: usize,
    pub pattern: usize,
    pub start: f64,
    pub end: f64,
    /// Unwrapped positions at `end`.
    pub positions: Vec<f64>,
    pub intensity: f64,
    pub total_order: f64,
    pub cluster_count: usize,
}

/// Time series of samples plus schedule events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<ScheduleEvent>,
    pub segments: Vec<SegmentSummary>,
    pub pattern_names: Vec<String>,
    pub seed: u64,
}

impl Trajectory {
    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }
}
