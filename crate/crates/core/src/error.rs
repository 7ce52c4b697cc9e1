use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its domain (message names the field).
    InvalidParams(String),
    DuplicateMode(u32),
    NegativePump { mode_order: u32, eta: f64 },
    /// The force field vanishes identically, so no isolated equilibria exist.
    DegenerateLandscape,
    NotAnEquilibrium { force_norm: f64, tolerance: f64 },
    NonFinite { time: f64 },
    ScheduleStall { switch_index: usize, time: f64 },
    ScheduleExhausted { switch_index: usize },
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::DuplicateMode(_) => "DuplicateMode",
            Error::NegativePump { .. } => "NegativePump",
            Error::DegenerateLandscape => "DegenerateLandscape",
            Error::NotAnEquilibrium { .. } => "NotAnEquilibrium",
            Error::NonFinite { .. } => "NonFinite",
            Error::ScheduleStall { .. } => "ScheduleStall",
            Error::ScheduleExhausted { .. } => "ScheduleExhausted",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::DuplicateMode(n) => write!(f, "mode order {n} appears more than once"),
            Error::NegativePump { mode_order, eta } => {
                write!(f, "mode {mode_order} has negative pump strength {eta}")
            }
            Error::DegenerateLandscape => {
                write!(f, "force field vanishes identically; no isolated equilibria")
            }
            Error::NotAnEquilibrium {
                force_norm,
                tolerance,
            } => write!(
                f,
                "configuration is not an equilibrium (|F| = {force_norm:e} > {tolerance:e})"
            ),
            Error::NonFinite { time } => write!(f, "state became non-finite at t = {time}"),
            Error::ScheduleStall { switch_index, time } => write!(
                f,
                "stationarity never reached for switch {switch_index} (t = {time})"
            ),
            Error::ScheduleExhausted { switch_index } => {
                write!(f, "schedule exhausted at switch {switch_index}")
            }
        }
    }
}

impl core::error::Error for Error {}
