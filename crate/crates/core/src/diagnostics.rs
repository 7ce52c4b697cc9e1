//! Collective observables: order parameters, scattered intensity and
//! clustering.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::model::IlluminationPattern;
use crate::phase::sin_cos;
use crate::WAVELENGTH;

/// Observables of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSample {
    pub time: f64,
    pub intensity: f64,
    pub total_order: f64,
    /// `(mode order, Θ_n)` for each pumped mode.
    pub mode_order_parameters: Vec<(u32, f64)>,
    pub cluster_count: usize,
}

/// `Θ_n = (1/N) Σ_j sin(n x_j)`; `|Θ_n| = 1` is perfect Bragg order for mode n.
pub fn order_parameter(positions: &[f64], order: u32) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    positions.iter().map(|&x| sin_cos(x, order).0).sum::<f64>() / positions.len() as f64
}

/// `Θ_tot = Σ_n |Θ_n|` over the pumped modes of `pattern`.
pub fn total_order(positions: &[f64], pattern: &IlluminationPattern) -> f64 {
    pattern
        .modes()
        .iter()
        .map(|m| order_parameter(positions, m.order).abs())
        .sum()
}

/// Number of particles that belong to a cluster of at least two, where
/// clusters are connected components of the graph joining particles closer
/// than `epsilon` (physical, unwrapped distance).
pub fn cluster_count(positions: &[f64], epsilon: f64) -> usize {
    let sorted = sorted(positions);
    let mut count = 0;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[1] - w[0] < epsilon {
            run += 1;
        } else {
            if run >= 2 {
                count += run;
            }
            run = 1;
        }
    }
    if run >= 2 {
        count += run;
    }
    count
}

/// Number of particle pairs closer than `epsilon`.
pub fn cluster_pairs(positions: &[f64], epsilon: f64) -> usize {
    let sorted = sorted(positions);
    let mut pairs = 0;
    for i in 0..sorted.len() {
        pairs += sorted[i + 1..]
            .iter()
            .take_while(|&&y| y - sorted[i] < epsilon)
            .count();
    }
    pairs
}

fn sorted(positions: &[f64]) -> Vec<f64> {
    let mut v = positions.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Default clustering radius: 1 % of the shortest pumped wavelength.
pub fn default_cluster_epsilon(max_order: u32) -> f64 {
    1e-2 * WAVELENGTH / max_order.max(1) as f64
}

/// `P_tot = Σ_n |α_n|²`.
pub fn total_intensity(fields: &BTreeMap<u32, Complex64>) -> f64 {
    fields.values().map(|a| a.norm_sqr()).sum()
}

pub fn sample(
    time: f64,
    positions: &[f64],
    fields: &BTreeMap<u32, Complex64>,
    pattern: &IlluminationPattern,
    epsilon: f64,
) -> DiagnosticsSample {
    let mode_order_parameters: Vec<(u32, f64)> = pattern
        .modes()
        .iter()
        .map(|m| (m.order, order_parameter(positions, m.order)))
        .collect();
    DiagnosticsSample {
        time,
        intensity: total_intensity(fields),
        total_order: mode_order_parameters.iter().map(|(_, t)| t.abs()).sum(),
        mode_order_parameters,
        cluster_count: cluster_count(positions, epsilon),
    }
}
