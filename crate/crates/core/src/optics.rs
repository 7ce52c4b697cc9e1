//! Cavity field amplitudes, optical forces and scattered intensity.
//!
//! Every function here is a pure function of the configuration. Friction and
//! momentum noise are not part of the light force; they live in
//! [`crate::dynamics`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::model::{IlluminationPattern, ModeDrive, SystemParams, SystemState};
use crate::phase::sin_cos;

/// Cavity amplitudes for every pumped mode plus the total intensity
/// `P_tot = Σ_n |α_n|²`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSolution {
    pub amplitudes: BTreeMap<u32, Complex64>,
    pub intensity: f64,
}

impl FieldSolution {
    pub fn mode_intensities(&self) -> Vec<(u32, f64)> {
        self.amplitudes
            .iter()
            .map(|(&n, a)| (n, a.norm_sqr()))
            .collect()
    }
}

/// Per-mode collective sums over particles.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeSums {
    /// `Σ_j sin(n x_j)`: the collective scattering amplitude.
    pub bunching: f64,
    /// `Σ_j sin²(n x_j)`: the collective dispersive shift factor.
    pub shift: f64,
}

pub(crate) fn mode_sums(positions: &[f64], order: u32) -> ModeSums {
    let mut bunching = 0.0;
    let mut shift = 0.0;
    for &x in positions {
        let (s, _) = sin_cos(x, order);
        bunching += s;
        shift += s * s;
    }
    ModeSums { bunching, shift }
}

/// Effective detuning `δ_c − U₀ Σ_j sin²(n x_j)`.
#[inline]
pub(crate) fn effective_detuning(sums: ModeSums, params: &SystemParams) -> f64 {
    params.delta_c - params.u0 * sums.shift
}

fn steady_amplitude(mode: &ModeDrive, sums: ModeSums, params: &SystemParams) -> Complex64 {
    let denom = Complex64::new(effective_detuning(sums, params), params.kappa);
    Complex64::new(mode.eta * sums.bunching, 0.0) / denom
}

/// The field each mode settles to when it follows the particles
/// adiabatically: `α_n = η_n Σ sin(n x_j) / (δ_c − U₀ Σ sin²(n x_j) + iκ)`.
pub fn adiabatic_field(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> FieldSolution {
    let mut amplitudes = BTreeMap::new();
    let mut intensity = 0.0;
    for mode in pattern.modes() {
        let a = steady_amplitude(mode, mode_sums(positions, mode.order), params);
        intensity += a.norm_sqr();
        amplitudes.insert(mode.order, a);
    }
    FieldSolution {
        amplitudes,
        intensity,
    }
}

/// `P_tot` of the adiabatic field, without building the amplitude map.
pub fn adiabatic_intensity(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> f64 {
    pattern
        .modes()
        .iter()
        .map(|m| steady_amplitude(m, mode_sums(positions, m.order), params).norm_sqr())
        .sum()
}

/// Right-hand side of the mode equation (field noise omitted):
/// `dα_n/dt = i(δ_c − U₀ Σ sin²)α_n − κ α_n − i η_n Σ sin(n x_j)`.
///
/// Modes absent from `state.fields` are treated as empty.
pub fn field_derivative(
    state: &SystemState,
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> BTreeMap<u32, Complex64> {
    pattern
        .modes()
        .iter()
        .map(|m| {
            let sums = mode_sums(&state.positions, m.order);
            let alpha = state.fields.get(&m.order).copied().unwrap_or_default();
            let rate = Complex64::new(-params.kappa, effective_detuning(sums, params));
            let drive = Complex64::new(0.0, -m.eta * sums.bunching);
            (m.order, rate * alpha + drive)
        })
        .collect()
}

/// Light force on every particle for given mode amplitudes:
/// `F_j = −Σ_n n (U₀ |α_n|² sin(2n x_j) + η_n (α_n + α_n*) cos(n x_j))`.
pub fn force(
    positions: &[f64],
    fields: &BTreeMap<u32, Complex64>,
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> Vec<f64> {
    let mut out = vec![0.0; positions.len()];
    for m in pattern.modes() {
        let alpha = fields.get(&m.order).copied().unwrap_or_default();
        accumulate_mode_force(positions, m, alpha, params, &mut out);
    }
    out
}

fn accumulate_mode_force(
    positions: &[f64],
    mode: &ModeDrive,
    alpha: Complex64,
    params: &SystemParams,
    out: &mut [f64],
) {
    let n = mode.order as f64;
    let dispersive = params.u0 * alpha.norm_sqr();
    let scattering = 2.0 * mode.eta * alpha.re;
    for (f, &x) in out.iter_mut().zip(positions) {
        let (s, c) = sin_cos(x, mode.order);
        *f -= n * (dispersive * 2.0 * s * c + scattering * c);
    }
}

/// Light force with the fields eliminated adiabatically; a pure function of
/// positions.
pub fn adiabatic_force(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> Vec<f64> {
    let mut out = vec![0.0; positions.len()];
    adiabatic_force_into(positions, pattern, params, &mut out);
    out
}

/// In-place variant of [`adiabatic_force`]; `out` is overwritten.
pub fn adiabatic_force_into(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    out: &mut [f64],
) {
    assert_eq!(out.len(), positions.len());
    out.iter_mut().for_each(|f| *f = 0.0);
    let mut trig: Vec<(f64, f64)> = Vec::with_capacity(positions.len());
    for m in pattern.modes() {
        trig.clear();
        let mut sums = ModeSums {
            bunching: 0.0,
            shift: 0.0,
        };
        for &x in positions {
            let sc = sin_cos(x, m.order);
            sums.bunching += sc.0;
            sums.shift += sc.0 * sc.0;
            trig.push(sc);
        }
        let alpha = steady_amplitude(m, sums, params);
        let n = m.order as f64;
        let dispersive = params.u0 * alpha.norm_sqr();
        let scattering = 2.0 * m.eta * alpha.re;
        for (f, &(s, c)) in out.iter_mut().zip(&trig) {
            *f -= n * (dispersive * 2.0 * s * c + scattering * c);
        }
    }
}

/// Classical value of the effective Hamiltonian,
/// `H = Σ_j p_j²/2m − Σ_n [(δ_c − U₀ Σ_j sin²(n x_j)) |α_n|² − η_n Σ_j sin(n x_j) (α_n + α_n*)]`.
///
/// The sign of the pump term is the one for which the mode and momentum
/// equations used throughout this crate are Hamilton's equations, so `H` is
/// conserved when κ = 0, μ = 0 and noise is off.
pub fn energy(state: &SystemState, pattern: &IlluminationPattern, params: &SystemParams) -> f64 {
    let kinetic: f64 = state.momenta.iter().map(|p| p * p).sum::<f64>() / (2.0 * params.mass());
    let light: f64 = pattern
        .modes()
        .iter()
        .map(|m| {
            let alpha = state.fields.get(&m.order).copied().unwrap_or_default();
            let sums = mode_sums(&state.positions, m.order);
            effective_detuning(sums, params) * alpha.norm_sqr()
                - m.eta * sums.bunching * 2.0 * alpha.re
        })
        .sum();
    kinetic - light
}

/// [`energy`] at rest with the adiabatic field inserted:
/// `Σ_n η_n² S_n² Δ_n / (Δ_n² + κ²)`.
pub fn adiabatic_potential(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
) -> f64 {
    pattern
        .modes()
        .iter()
        .map(|m| {
            let sums = mode_sums(positions, m.order);
            let alpha = steady_amplitude(m, sums, params);
            -(effective_detuning(sums, params) * alpha.norm_sqr()
                - m.eta * sums.bunching * 2.0 * alpha.re)
        })
        .sum()
}
