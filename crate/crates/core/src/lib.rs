//! Semiclassical dynamics of mobile scatterers in a lossy multimode optical
//! cavity under transverse multifrequency illumination.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs or a deterministic, seeded time integration; configuration
//! files, CSV export and the command-line harness live in `cavity-adapt`.
//!
//! Units: `ħ = 1` and the fundamental wavenumber `k = 1`, so mode `n` has
//! wavenumber `n`, the fundamental wavelength is `2π`, and the particle mass
//! is `m = 1 / (2 ω_R)`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
pub mod dynamics;
pub mod equilibria;
mod error;
pub mod illumination;
pub mod model;
pub mod optics;
mod phase;

pub use crate::error::Error;
pub use crate::model::{
    Equilibrium, IlluminationPattern, ModeDrive, Sample, ScheduleEvent, SegmentSummary, Stability,
    SystemParams, SystemState, Trajectory,
};
pub use crate::phase::wrap_position;

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub use num_complex::Complex64;

/// The fundamental wavelength `2π / k` with `k = 1`.
pub const WAVELENGTH: f64 = core::f64::consts::TAU;
