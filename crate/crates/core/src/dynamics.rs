//! Time evolution of the coupled particle–field system.
//!
//! Two schemes are provided:
//!
//! * [`step_full`] integrates particle motion together with the cavity mode
//!   equations. The step is a symmetric splitting: for frozen positions the
//!   mode equation is linear with constant coefficients and is solved exactly
//!   (exponential factor `exp((iΔ − κ)τ)`), the momentum change over that
//!   sub-flow is integrated along the exact field, free flight is exact, and
//!   linear friction `−μ p` enters as an exact damping factor.
//! * [`step_overdamped`] moves positions along the adiabatic force with
//!   mobility `1/μ`; the fields are slaved to the positions.
//!
//! [`run_trajectory`] strings steps together with momentum kicks, schedule
//! switching and diagnostic sampling.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::diagnostics::{cluster_count, cluster_pairs, default_cluster_epsilon, total_order};
use crate::illumination::{next_pattern, Schedule, Trigger};
use crate::model::{
    IlluminationPattern, Sample, ScheduleEvent, SegmentSummary, SystemParams, SystemState,
    Trajectory,
};
use crate::optics::{
    adiabatic_field, adiabatic_force, adiabatic_force_into, effective_detuning, mode_sums,
};
use crate::phase::sin_cos;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Full,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    pub dt: f64,
    /// Simulated duration measured from the initial state's time.
    pub max_time: f64,
    /// Integration steps between diagnostic samples.
    pub sample_stride: usize,
    /// Clustering radius for `N₀`; `None` uses
    /// [`default_cluster_epsilon`] of the schedule's highest mode.
    pub cluster_epsilon: Option<f64>,
}

impl IntegratorOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParams("dt must be finite and > 0".into()));
        }
        if !(self.max_time > 0.0) || !self.max_time.is_finite() {
            return Err(Error::InvalidParams("max_time must be finite and > 0".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidParams("sample_stride must be >= 1".into()));
        }
        if let Some(e) = self.cluster_epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidParams("cluster_epsilon must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// `min(0.02/κ, 0.02/ω_R)`, ignoring κ = 0.
pub fn default_dt_full(params: &SystemParams) -> f64 {
    let by_recoil = 0.02 / params.recoil_frequency;
    if params.kappa > 0.0 {
        by_recoil.min(0.02 / params.kappa)
    } else {
        by_recoil
    }
}

/// A Gershgorin bound on the adiabatic force Jacobian for any configuration
/// under `pattern`, using `|α_n| ≤ η_n N / κ`.
pub fn stiffness_bound(pattern: &IlluminationPattern, params: &SystemParams) -> f64 {
    let n_part = params.n_particles as f64;
    let u0 = params.u0.abs();
    let kappa = params.kappa;
    pattern
        .modes()
        .iter()
        .map(|m| {
            let a = m.eta * n_part / kappa;
            let g = m.eta / kappa * (1.0 + n_part * u0 / kappa);
            let n2 = (m.order as f64) * (m.order as f64);
            n2 * (n_part * g * (2.0 * u0 * a + 2.0 * m.eta) + 2.0 * u0 * a * a + 2.0 * m.eta * a)
        })
        .sum()
}

/// Explicit Euler step that keeps `dt·λ/μ ≤ 0.5` for every Jacobian
/// eigenvalue λ under every pattern of the schedule.
pub fn default_dt_overdamped(schedule: &Schedule, params: &SystemParams) -> f64 {
    let k = schedule
        .patterns
        .iter()
        .map(|p| stiffness_bound(&p.pattern, params))
        .fold(0.0, f64::max);
    if k > 0.0 {
        0.5 * params.friction / k
    } else {
        1.0 / params.friction.max(f64::MIN_POSITIVE)
    }
}

/// Momentum kicks at fixed simulated-time intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseOptions {
    pub enabled: bool,
    /// Simulated time between kicks.
    pub kick_interval: f64,
    /// Standard deviation of each kick, in units of `ħk`.
    pub kick_sigma: f64,
    pub seed: u64,
}

impl NoiseOptions {
    pub fn off() -> Self {
        NoiseOptions {
            enabled: false,
            kick_interval: 1.0,
            kick_sigma: 0.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.enabled {
            if !(self.kick_interval > 0.0) || !self.kick_interval.is_finite() {
                return Err(Error::InvalidParams("kick_interval must be > 0".into()));
            }
            if !(self.kick_sigma >= 0.0) || !self.kick_sigma.is_finite() {
                return Err(Error::InvalidParams("kick_sigma must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// `(e^z − 1) / z`, accurate near zero.
fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        (z.exp() - 1.0) / z
    }
}

// Four-point Gauss–Legendre rule on [0, 1].
const GL_NODES: [f64; 4] = [
    0.5 - 0.5 * 0.861_136_311_594_052_6,
    0.5 - 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.5 * 0.347_854_845_137_453_9,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.347_854_845_137_453_9,
];

/// Exact field flow over `tau` at frozen positions, plus the time integrals
/// `∫ Re α` and `∫ |α|²` over the sub-step that drive the momentum update.
struct FieldFlow {
    alpha: Complex64,
    int_re: f64,
    int_abs2: f64,
}

fn field_flow(alpha0: Complex64, lambda: Complex64, drive: Complex64, tau: f64) -> FieldFlow {
    let at = |s: f64| alpha0 * (lambda * s).exp() + drive * s * exprel(lambda * s);
    let z = lambda * tau;
    let alpha = at(tau);
    if z.norm() <= 0.05 {
        let (mut int_re, mut int_abs2) = (0.0, 0.0);
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let a = at(x * tau);
            int_re += w * a.re;
            int_abs2 += w * a.norm_sqr();
        }
        return FieldFlow {
            alpha,
            int_re: int_re * tau,
            int_abs2: int_abs2 * tau,
        };
    }
    // α(s) = A e^{λs} − B with B = drive/λ
    let phi1 = (z.exp() - 1.0) / lambda;
    let phi2 = (phi1 - tau) / lambda;
    let int_re = (alpha0 * phi1 + drive * phi2).re;
    let b = drive / lambda;
    let a = alpha0 + b;
    let decay = -2.0 * lambda.re;
    let damp_int = if decay.abs() * tau < 1e-12 {
        tau
    } else {
        libm::expm1(-decay * tau) / -decay
    };
    let int_abs2 = a.norm_sqr() * damp_int - 2.0 * (a * b.conj() * phi1).re + b.norm_sqr() * tau;
    FieldFlow {
        alpha,
        int_re,
        int_abs2,
    }
}

/// Field sub-flow over `tau`: modes evolve exactly at frozen positions and
/// momenta absorb the light force integrated along the way.
fn light_substep(state: &mut SystemState, pattern: &IlluminationPattern, params: &SystemParams, tau: f64) {
    for m in pattern.modes() {
        let sums = mode_sums(&state.positions, m.order);
        let lambda = Complex64::new(-params.kappa, effective_detuning(sums, params));
        let drive = Complex64::new(0.0, -m.eta * sums.bunching);
        let alpha0 = state.fields.get(&m.order).copied().unwrap_or_default();
        let flow = field_flow(alpha0, lambda, drive, tau);
        let n = m.order as f64;
        for (p, &x) in state.momenta.iter_mut().zip(&state.positions) {
            let (s, c) = sin_cos(x, m.order);
            *p -= n * (params.u0 * 2.0 * s * c * flow.int_abs2 + 2.0 * m.eta * c * flow.int_re);
        }
        state.fields.insert(m.order, flow.alpha);
    }
}

/// Symmetric splitting over `h`: half light flow, half friction, drift,
/// half friction, half light flow. Second order and self-adjoint.
fn strang(state: &mut SystemState, pattern: &IlluminationPattern, params: &SystemParams, h: f64) {
    let half = 0.5 * h;
    let damping = libm::exp(-params.friction * half);
    let inv_mass = 2.0 * params.recoil_frequency;

    light_substep(state, pattern, params, half);
    state.momenta.iter_mut().for_each(|p| *p *= damping);
    for (x, p) in state.positions.iter_mut().zip(&state.momenta) {
        *x += p * inv_mass * h;
    }
    state.momenta.iter_mut().for_each(|p| *p *= damping);
    light_substep(state, pattern, params, half);
}

/// Advances positions, momenta and fields by one step of the full
/// semiclassical dynamics: three [`strang`] sub-steps in the triple-jump
/// composition, fourth order in `dt`.
pub fn step_full(
    state: &SystemState,
    pattern: &IlluminationPattern,
    params: &SystemParams,
    dt: f64,
) -> Result<SystemState> {
    let cbrt2 = libm::cbrt(2.0);
    let outer = 1.0 / (2.0 - cbrt2);
    let inner = -cbrt2 * outer;
    let mut next = state.clone();
    strang(&mut next, pattern, params, outer * dt);
    strang(&mut next, pattern, params, inner * dt);
    strang(&mut next, pattern, params, outer * dt);
    next.time += dt;

    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { time: next.time })
    }
}

/// One explicit Euler step of `ẋ = F(x)/μ` with the adiabatic force.
pub fn step_overdamped(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    dt: f64,
) -> Result<Vec<f64>> {
    let mut out = positions.to_vec();
    let mut force = alloc::vec![0.0; positions.len()];
    overdamped_in_place(&mut out, &mut force, pattern, params, dt)?;
    Ok(out)
}

fn overdamped_in_place(
    positions: &mut [f64],
    force: &mut [f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    dt: f64,
) -> Result<()> {
    if !(params.friction > 0.0) {
        return Err(Error::InvalidParams("overdamped motion needs friction > 0".into()));
    }
    adiabatic_force_into(positions, pattern, params, force);
    let mobility = dt / params.friction;
    for (x, f) in positions.iter_mut().zip(force.iter()) {
        *x += f * mobility;
    }
    if positions.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { time: f64::NAN })
    }
}

/// Adds an independent Gaussian increment of standard deviation `σ` to each
/// particle's momentum.
pub fn apply_kicks<R: Rng + ?Sized>(state: &SystemState, noise: &NoiseOptions, rng: &mut R) -> SystemState {
    let mut next = state.clone();
    kick_in_place(&mut next, noise.kick_sigma, rng);
    next
}

fn kick_in_place<R: Rng + ?Sized>(state: &mut SystemState, sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated finite and positive");
    for p in state.momenta.iter_mut() {
        *p += normal.sample(rng);
    }
}

/// Whether particles have come to rest: every finite-difference speed between
/// consecutive window entries is below `tol_v` and every adiabatic force
/// component in the window is below `tol_f`.
pub fn detect_stationary(
    window: &[SystemState],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    tol_v: f64,
    tol_f: f64,
) -> bool {
    if window.len() < 2 {
        return false;
    }
    for w in window.windows(2) {
        let dt = w[1].time - w[0].time;
        if !(dt > 0.0) {
            return false;
        }
        let moved = w[1]
            .positions
            .iter()
            .zip(&w[0].positions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !(moved / dt < tol_v) {
            return false;
        }
    }
    window.iter().all(|s| {
        adiabatic_force(&s.positions, pattern, params)
            .iter()
            .all(|f| f.abs() < tol_f)
    })
}

struct Sampler {
    epsilon: f64,
    scheme: Scheme,
}

impl Sampler {
    fn sample(
        &self,
        state: &SystemState,
        pattern: &IlluminationPattern,
        pattern_index: usize,
        params: &SystemParams,
    ) -> Sample {
        let (fields, momenta) = match self.scheme {
            Scheme::Full => (state.fields.clone(), state.momenta.clone()),
            Scheme::Overdamped => {
                // report m·ẋ for the overdamped flow
                let scale = params.mass() / params.friction;
                let momenta = adiabatic_force(&state.positions, pattern, params)
                    .into_iter()
                    .map(|f| f * scale)
                    .collect();
                (adiabatic_field(&state.positions, pattern, params).amplitudes, momenta)
            }
        };
        let mode_intensities: Vec<(u32, f64)> =
            fields.iter().map(|(&n, a)| (n, a.norm_sqr())).collect();
        Sample {
            time: state.time,
            positions: state.positions.clone(),
            momenta,
            intensity: mode_intensities.iter().map(|(_, v)| v).sum(),
            mode_intensities,
            total_order: total_order(&state.positions, pattern),
            cluster_count: cluster_count(&state.positions, self.epsilon),
            cluster_pairs: cluster_pairs(&state.positions, self.epsilon),
            pattern: pattern_index,
        }
    }
}

/// Integrates from `initial` under `schedule`, interleaving steps, momentum
/// kicks, pattern switches and diagnostic samples.
///
/// The run ends after `integrator.max_time` or when the interval of the last
/// allowed switch ends, whichever comes first.
pub fn run_trajectory(
    initial: &SystemState,
    schedule: &Schedule,
    params: &SystemParams,
    integrator: &IntegratorOptions,
    noise: &NoiseOptions,
) -> Result<Trajectory> {
    integrator.validate()?;
    noise.validate()?;
    match integrator.scheme {
        Scheme::Overdamped => {
            params.validate()?;
            if !(params.friction > 0.0) {
                return Err(Error::InvalidParams("overdamped scheme needs friction > 0".into()));
            }
            if noise.enabled {
                return Err(Error::InvalidParams(
                    "momentum kicks need the full scheme".into(),
                ));
            }
        }
        Scheme::Full => {
            let mut p = *params;
            p.kappa = if p.kappa == 0.0 { 1.0 } else { p.kappa };
            p.validate()?;
        }
    }
    if initial.positions.len() != params.n_particles || initial.momenta.len() != params.n_particles {
        return Err(Error::InvalidParams(alloc::format!(
            "initial state has {} positions / {} momenta for {} particles",
            initial.positions.len(),
            initial.momenta.len(),
            params.n_particles
        )));
    }
    if schedule.patterns.is_empty() {
        return Err(Error::InvalidParams("schedule needs at least one pattern".into()));
    }

    let mut sched_rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let sampler = Sampler {
        epsilon: integrator
            .cluster_epsilon
            .unwrap_or_else(|| default_cluster_epsilon(schedule.max_order().unwrap_or(1))),
        scheme: integrator.scheme,
    };
    let dt = integrator.dt;
    let t0 = initial.time;

    let mut traj = Trajectory {
        pattern_names: schedule.patterns.iter().map(|p| p.name.clone()).collect(),
        seed: noise.seed,
        ..Trajectory::default()
    };

    let mut switch_index = 0;
    let mut active = next_pattern(schedule, 0, &mut sched_rng)?;
    let mut state = initial.clone();
    if integrator.scheme == Scheme::Full {
        state.retarget_fields(&schedule.patterns[active].pattern);
    }
    traj.events.push(ScheduleEvent {
        time: t0,
        switch_index,
        pattern: active,
    });
    traj.samples
        .push(sampler.sample(&state, &schedule.patterns[active].pattern, active, params));

    let mut interval_start = t0;
    let mut window: Vec<SystemState> = Vec::new();
    let mut force_buf = alloc::vec![0.0; params.n_particles];
    let mut next_kick = t0 + noise.kick_interval;
    let mut steps: u64 = 0;
    let mut finished_by_schedule = false;

    let close_segment = |traj: &mut Trajectory, state: &SystemState, pattern: &IlluminationPattern, active, switch_index, start| {
        let last = traj.samples.last().expect("initial sample exists");
        if last.time < state.time {
            traj.samples.push(sampler.sample(state, pattern, active, params));
        }
        let s = traj.samples.last().expect("non-empty");
        traj.segments.push(SegmentSummary {
            switch_index,
            pattern: active,
            start,
            end: state.time,
            positions: state.positions.clone(),
            intensity: s.intensity,
            total_order: s.total_order,
            cluster_count: s.cluster_count,
        });
    };

    while state.time < t0 + integrator.max_time - 1e-9 * dt {
        let pattern = &schedule.patterns[active].pattern;
        match integrator.scheme {
            Scheme::Full => state = step_full(&state, pattern, params, dt)?,
            Scheme::Overdamped => {
                overdamped_in_place(&mut state.positions, &mut force_buf, pattern, params, dt)
                    .map_err(|e| match e {
                        Error::NonFinite { .. } => Error::NonFinite { time: state.time },
                        other => other,
                    })?;
            }
        }
        steps += 1;
        state.time = t0 + steps as f64 * dt;

        if noise.enabled {
            while state.time >= next_kick - 1e-9 * dt {
                kick_in_place(&mut state, noise.kick_sigma, &mut noise_rng);
                next_kick += noise.kick_interval;
            }
        }

        if steps.is_multiple_of(integrator.sample_stride as u64) {
            traj.samples.push(sampler.sample(&state, pattern, active, params));
        }

        let fire = match schedule.trigger {
            Trigger::Never => false,
            Trigger::FixedInterval(period) => state.time - interval_start >= period - 1e-9 * dt,
            Trigger::Stationarity(c) => {
                let mut fire = false;
                if steps.is_multiple_of(c.check_stride as u64) {
                    if window.len() == c.window {
                        window.remove(0);
                    }
                    window.push(state.clone());
                    fire = window.len() == c.window
                        && detect_stationary(&window, pattern, params, c.tol_v, c.tol_f);
                }
                if !fire && state.time - interval_start > c.timeout {
                    return Err(Error::ScheduleStall {
                        switch_index,
                        time: state.time,
                    });
                }
                fire
            }
        };

        if fire {
            close_segment(&mut traj, &state, pattern, active, switch_index, interval_start);
            switch_index += 1;
            if schedule.max_switches.is_some_and(|m| switch_index >= m) {
                finished_by_schedule = true;
                break;
            }
            active = next_pattern(schedule, switch_index, &mut sched_rng)?;
            if integrator.scheme == Scheme::Full {
                state.retarget_fields(&schedule.patterns[active].pattern);
            }
            traj.events.push(ScheduleEvent {
                time: state.time,
                switch_index,
                pattern: active,
            });
            interval_start = state.time;
            window.clear();
        }
    }

    if !finished_by_schedule {
        let pattern = &schedule.patterns[active].pattern;
        close_segment(&mut traj, &state, pattern, active, switch_index, interval_start);
    }
    Ok(traj)
}
