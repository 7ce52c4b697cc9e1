//! Illumination patterns and their sequencing in time.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::IlluminationPattern;
use crate::{Error, Result};

/// How the active pattern is chosen at each switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Static,
    /// Patterns in listed order, wrapping around.
    PeriodicCycle,
    /// Uniform draw with replacement at every switch.
    RandomSwitch,
}

/// When the current illumination interval ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Once [`crate::dynamics::detect_stationary`] holds over the recent window.
    Stationarity(StationarityCriteria),
    /// After a fixed simulated time.
    FixedInterval(f64),
    /// Never; the run ends at `max_time`.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityCriteria {
    /// Velocity threshold (finite-difference speed between window entries).
    pub tol_v: f64,
    /// Threshold on the largest adiabatic force component.
    pub tol_f: f64,
    /// Number of states in the window (≥ 2).
    pub window: usize,
    /// Integration steps between window entries.
    pub check_stride: usize,
    /// Longest simulated time one interval may take before the run fails
    /// with [`Error::ScheduleStall`].
    pub timeout: f64,
}

impl Default for StationarityCriteria {
    fn default() -> Self {
        StationarityCriteria {
            tol_v: 1e-6,
            tol_f: 1e-6,
            window: 3,
            check_stride: 10,
            timeout: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedPattern {
    pub name: String,
    pub pattern: IlluminationPattern,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub patterns: Vec<NamedPattern>,
    pub trigger: Trigger,
    /// Number of pattern applications, the first one included. `None` means
    /// unbounded.
    pub max_switches: Option<usize>,
    /// Seed of the pattern-draw RNG (random switching only).
    pub seed: u64,
}

impl Schedule {
    pub fn new(
        mode: ScheduleMode,
        patterns: Vec<NamedPattern>,
        trigger: Trigger,
        max_switches: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::InvalidParams("schedule needs at least one pattern".into()));
        }
        if max_switches == Some(0) {
            return Err(Error::InvalidParams("max_switches must be >= 1".into()));
        }
        match trigger {
            Trigger::FixedInterval(t) if !(t > 0.0) => {
                return Err(Error::InvalidParams("switch interval must be > 0".into()))
            }
            Trigger::Stationarity(c) => {
                if c.window < 2 || c.check_stride == 0 {
                    return Err(Error::InvalidParams(
                        "stationarity window needs >= 2 entries and a positive stride".into(),
                    ));
                }
                if !(c.tol_v > 0.0 && c.tol_f > 0.0 && c.timeout > 0.0) {
                    return Err(Error::InvalidParams(
                        "stationarity tolerances and timeout must be > 0".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Schedule {
            mode,
            patterns,
            trigger,
            max_switches,
            seed,
        })
    }

    /// A single pattern held for the whole run.
    pub fn constant(name: &str, pattern: IlluminationPattern) -> Self {
        Schedule {
            mode: ScheduleMode::Static,
            patterns: alloc::vec![NamedPattern {
                name: name.into(),
                pattern
            }],
            trigger: Trigger::Never,
            max_switches: None,
            seed: 0,
        }
    }

    /// Highest mode order across all patterns.
    pub fn max_order(&self) -> Option<u32> {
        self.patterns.iter().filter_map(|p| p.pattern.max_order()).max()
    }
}

/// Index of the pattern applied at `switch_index` (0 is the initial one).
pub fn next_pattern<R: Rng + ?Sized>(
    schedule: &Schedule,
    switch_index: usize,
    rng: &mut R,
) -> Result<usize> {
    if let Some(max) = schedule.max_switches {
        if switch_index >= max {
            return Err(Error::ScheduleExhausted { switch_index });
        }
    }
    let len = schedule.patterns.len();
    Ok(match schedule.mode {
        ScheduleMode::Static => 0,
        ScheduleMode::PeriodicCycle => switch_index % len,
        ScheduleMode::RandomSwitch => rng.random_range(0..len),
    })
}

/// Mode `i + 1` pumped with strength `eta` wherever `mask[i]` is set.
pub fn make_binary_pattern(mask: &[bool], eta: f64) -> IlluminationPattern {
    IlluminationPattern::new(
        mask.iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| (i as u32 + 1, eta)),
    )
    .expect("mask indices are distinct")
}

/// `pattern_count` random subsets of size `modes_per_pattern` drawn from
/// the comb `{n1, n1 + dn, …, n1 + (master_count − 1) dn}`, all pumped at
/// equal strength.
pub fn make_comb_patterns<R: Rng + ?Sized>(
    n1: u32,
    dn: u32,
    master_count: usize,
    pattern_count: usize,
    modes_per_pattern: usize,
    eta: f64,
    rng: &mut R,
) -> Result<Vec<IlluminationPattern>> {
    if n1 == 0 || dn == 0 {
        return Err(Error::InvalidParams("comb needs n1 >= 1 and dn >= 1".into()));
    }
    if modes_per_pattern > master_count {
        return Err(Error::InvalidParams(
            "modes_per_pattern exceeds the master comb size".into(),
        ));
    }
    let master = comb_master_set(n1, dn, master_count);
    (0..pattern_count)
        .map(|_| {
            let mut picks = rand::seq::index::sample(rng, master_count, modes_per_pattern).into_vec();
            picks.sort_unstable();
            IlluminationPattern::new(picks.into_iter().map(|i| (master[i], eta)))
        })
        .collect()
}

pub fn comb_master_set(n1: u32, dn: u32, master_count: usize) -> Vec<u32> {
    (0..master_count as u32).map(|i| n1 + i * dn).collect()
}
