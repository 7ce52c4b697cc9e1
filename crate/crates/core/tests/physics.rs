mod support {
    pub mod oracles;
}

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use cavity_core::diagnostics::total_intensity;
use cavity_core::dynamics::{
    apply_kicks, detect_stationary, run_trajectory, step_full, step_overdamped, IntegratorOptions,
    NoiseOptions, Scheme,
};
use cavity_core::equilibria::{find_equilibria, stability, EquilibriumOptions};
use cavity_core::illumination::{make_binary_pattern, Schedule};
use cavity_core::optics::{adiabatic_field, adiabatic_force, adiabatic_potential, energy, field_derivative, force};
use cavity_core::{Complex64, IlluminationPattern, Stability, SystemParams, SystemState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles;

fn fig2_params(n: usize) -> SystemParams {
    let u0 = -0.1 / n as f64;
    SystemParams::new(n, 1.0, 1.0, u0, n as f64 * u0 - 1.0, 1.0).unwrap()
}

fn mask(bits: &[u8], eta: f64) -> IlluminationPattern {
    make_binary_pattern(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>(), eta)
}

#[test]
fn adiabatic_field_matches_hand_formula() {
    let params = fig2_params(3);
    let pat = mask(&[1, 0, 1, 1, 1], 0.625);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let xs: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
        let sol = adiabatic_field(&xs, &pat, &params);
        let want = oracles::field(&xs, &oracles::modes(&pat), &params);
        for (a, b) in sol.amplitudes.values().zip(&want) {
            assert!((a - b).norm() < 1e-13 * (1.0 + b.norm()));
        }
        let f = adiabatic_force(&xs, &pat, &params);
        let g = oracles::force(&xs, &oracles::modes(&pat), &params);
        for (a, b) in f.iter().zip(&g) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} {b}");
        }
    }
}

#[test]
fn mode_equation_relaxes_to_adiabatic_value() {
    let params = fig2_params(2);
    let pat = mask(&[1, 0, 1, 1, 1], 0.625);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let xs = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
        let sol = adiabatic_field(&xs, &pat, &params);
        for m in pat.modes() {
            let a = oracles::rk4_field(Complex64::new(0.0, 0.0), &xs, m.order as f64, m.eta, &params, 20.0, 4000);
            let want = sol.amplitudes[&m.order];
            assert!((a - want).norm() <= 1e-6 * want.norm().max(1e-12), "{a} {want}");
        }
    }
}

#[test]
fn field_derivative_matches_mode_equation() {
    let params = fig2_params(2);
    let pat = mask(&[0, 1, 0, 1], 0.5);
    let mut s = SystemState::at_rest(vec![0.4, 2.2], &pat);
    s.fields.insert(2, Complex64::new(0.3, -0.1));
    s.fields.insert(4, Complex64::new(-0.2, 0.7));
    let d = field_derivative(&s, &pat, &params);
    for m in pat.modes() {
        let n = m.order as f64;
        let a = s.fields[&m.order];
        let sn: f64 = s.positions.iter().map(|x| (n * x).sin()).sum();
        let cn: f64 = s.positions.iter().map(|x| (n * x).sin().powi(2)).sum();
        let i = Complex64::new(0.0, 1.0);
        let want = i * (params.delta_c - params.u0 * cn) * a - params.kappa * a - i * m.eta * sn;
        assert!((d[&m.order] - want).norm() < 1e-14);
    }
}

#[test]
fn force_at_fixed_fields_is_minus_energy_gradient() {
    let params = fig2_params(2);
    let pat = mask(&[1, 0, 1, 1, 1], 0.625);
    let mut s = SystemState::at_rest(vec![0.3, 1.7], &pat);
    for (k, a) in s.fields.values_mut().enumerate() {
        *a = Complex64::new(0.2 * k as f64 - 0.3, 0.1 + 0.05 * k as f64);
    }
    let f = force(&s.positions, &s.fields, &pat, &params);
    let h = 1e-6;
    for (j, &fj) in f.iter().enumerate() {
        let (mut a, mut b) = (s.clone(), s.clone());
        a.positions[j] += h;
        b.positions[j] -= h;
        let grad = (energy(&a, &pat, &params) - energy(&b, &pat, &params)) / (2.0 * h);
        assert!((fj + grad).abs() < 1e-6 * fj.abs().max(1.0), "{fj} {}", -grad);
    }
}

#[test]
fn null_field_for_commensurate_spacing() {
    for n in [1u32, 5, 1003] {
        let params = SystemParams::new(20, 1.0, 1.0, -0.005, -1.1, 1.0).unwrap();
        let pat = IlluminationPattern::new([(n, 0.7)]).unwrap();
        let lambda = TAU / n as f64;
        let xs: Vec<f64> = (0..20).map(|j| 0.123 + j as f64 * lambda / 20.0).collect();
        let a = adiabatic_field(&xs, &pat, &params).amplitudes[&n];
        assert!(a.norm() < 1e-10 * 0.7, "n = {n}: {a}");
    }
}

#[test]
fn superradiant_scaling() {
    let pat = IlluminationPattern::new([(3, 0.4)]).unwrap();
    let u0 = -0.05;
    let target = -1.3;
    let p_of = |n: usize| {
        let params = SystemParams::new(n, 1.0, 1.0, u0, target + n as f64 * u0, 1.0).unwrap();
        let xs = vec![FRAC_PI_2 / 3.0; n];
        adiabatic_field(&xs, &pat, &params).intensity
    };
    let p1 = p_of(1);
    for n in [2usize, 4, 8, 16] {
        let ratio = p_of(n) / p1;
        let want = (n * n) as f64;
        assert!((ratio - want).abs() <= 1e-12 * want, "{n}: {ratio}");
    }
}

#[test]
fn fig2a_equilibria_match_brute_force_grid() {
    let params = fig2_params(2);
    let pat = mask(&[0, 0, 0, 0, 1], 0.625);
    let eqs = find_equilibria(&pat, &params, &EquilibriumOptions::with_resolution(100)).unwrap();
    let stable: Vec<[f64; 2]> = eqs
        .iter()
        .filter(|e| e.classification == Stability::Stable)
        .map(|e| [e.positions[0], e.positions[1]])
        .collect();
    let oracle = oracles::brute_force_stable_pairs(&oracles::modes(&pat), &params, 200);
    assert_eq!(stable.len(), oracle.len());
    for q in &oracle {
        let best = stable
            .iter()
            .map(|s| oracles::pair_distance(s, q))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-4 * TAU, "{q:?} off by {best}");
    }
}

#[test]
fn classification_agrees_with_flow_oracle_fig2b() {
    let params = fig2_params(2);
    let pat = mask(&[1, 0, 1, 1, 1], 0.625);
    let opts = EquilibriumOptions::with_resolution(60);
    let eqs = find_equilibria(&pat, &params, &opts).unwrap();
    assert!(eqs.iter().any(|e| e.classification == Stability::Stable));
    assert!(eqs.iter().any(|e| e.classification == Stability::Unstable && e.intensity > 1e-6));
    let modes = oracles::modes(&pat);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for e in &eqs {
        let angle: f64 = rng.random_range(0.0..TAU);
        let dx = [1e-3 * angle.cos(), 1e-3 * angle.sin()];
        let back = oracles::flow_returns(&e.positions, &dx, &modes, &params, 2e-3, 400.0, opts.tol_dedup);
        assert_eq!(back, e.classification == Stability::Stable, "{e:?}");
    }
}

#[test]
fn single_particle_equilibria() {
    let params = fig2_params(1);
    let pat = IlluminationPattern::new([(1, 0.625)]).unwrap();
    let eqs = find_equilibria(&pat, &params, &EquilibriumOptions::default()).unwrap();
    let at = |x: f64| {
        eqs.iter()
            .find(|e| oracles::periodic_distance(&e.positions, &[x]) < 1e-8)
            .unwrap_or_else(|| panic!("no equilibrium at {x}: {eqs:?}"))
            .classification
    };
    assert_eq!(eqs.len(), 4);
    assert_eq!(at(FRAC_PI_2), Stability::Stable);
    assert_eq!(at(3.0 * FRAC_PI_2), Stability::Stable);
    assert_eq!(at(0.0), Stability::Unstable);
    assert_eq!(at(PI), Stability::Unstable);
}

#[test]
fn lossless_energy_drift_is_fourth_order() {
    let params = SystemParams::lossless(2, 1.0, -0.05, -1.1, 0.0).unwrap();
    let pat = mask(&[0, 0, 0, 0, 1], 0.625);
    let mut s0 = SystemState::at_rest(vec![0.2, 1.4], &pat);
    s0.momenta = vec![0.3, -0.2];
    s0.fields.insert(5, Complex64::new(0.2, 0.1));
    let drift = |dt: f64| {
        let e0 = energy(&s0, &pat, &params);
        let mut s = s0.clone();
        let mut worst: f64 = 0.0;
        for _ in 0..(10.0 / dt).round() as usize {
            s = step_full(&s, &pat, &params, dt).unwrap();
            worst = worst.max((energy(&s, &pat, &params) - e0).abs());
        }
        worst / e0.abs()
    };
    let (a, b) = (drift(2e-2), drift(1e-2));
    assert!(a / b >= 12.0, "{a} {b}");
}

#[test]
fn overdamped_step_matches_oracle_force() {
    let params = fig2_params(2);
    let pat = mask(&[0, 0, 0, 0, 1], 0.625);
    let xs = [0.81, 2.03];
    let f = oracles::force(&xs, &oracles::modes(&pat), &params);
    let next = step_overdamped(&xs, &pat, &params, 1e-3).unwrap();
    for j in 0..2 {
        assert!((next[j] - (xs[j] + f[j] / params.friction * 1e-3)).abs() < 1e-15);
    }
}

#[test]
fn kick_statistics() {
    let pat = IlluminationPattern::empty();
    let noise = NoiseOptions {
        enabled: true,
        kick_interval: 1.0,
        kick_sigma: 0.3,
        seed: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = SystemState::at_rest(vec![0.0; 10], &pat);
    let mut values = Vec::with_capacity(100_000);
    for _ in 0..10_000 {
        let next = apply_kicks(&s, &noise, &mut rng);
        values.extend(next.momenta.iter().zip(&s.momenta).map(|(a, b)| a - b));
        assert_eq!(next.positions, s.positions);
        s = next;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 * 0.3 / n.sqrt(), "{mean}");
    assert!((var / 0.09 - 1.0).abs() < 0.05, "{var}");

    let quiet = NoiseOptions { kick_sigma: 0.0, ..noise };
    assert_eq!(apply_kicks(&s, &quiet, &mut rng), s);
    let a = apply_kicks(&s, &noise, &mut ChaCha8Rng::seed_from_u64(9));
    let b = apply_kicks(&s, &noise, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a, b);
}

#[test]
fn stationarity_detector_fires_after_relaxation_slows() {
    let params = fig2_params(2);
    let pat = mask(&[0, 0, 0, 0, 1], 0.625);
    let dt = 0.01;
    let tol_v = 1e-6;
    let mut xs = vec![0.25, 0.38];
    let mut window: Vec<SystemState> = Vec::new();
    let mut fired_at = None;
    for k in 0..20_000 {
        let next = step_overdamped(&xs, &pat, &params, dt).unwrap();
        let moved = next.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        xs = next;
        let mut st = SystemState::at_rest(xs.clone(), &pat);
        st.time = (k + 1) as f64 * dt;
        window.push(st);
        if window.len() > 3 {
            window.remove(0);
        }
        if detect_stationary(&window, &pat, &params, tol_v, 1e-6) {
            fired_at = Some(moved);
            break;
        }
    }
    let moved = fired_at.expect("detector fired");
    assert!(moved < tol_v * dt);

    let mut ballistic = Vec::new();
    for k in 0..3 {
        let mut s = SystemState::at_rest(vec![0.1 * k as f64, 0.5], &pat);
        s.time = k as f64;
        ballistic.push(s);
    }
    assert!(!detect_stationary(&ballistic, &pat, &params, tol_v, 1e-6));
}

#[test]
fn overdamped_potential_decreases_without_light_shift() {
    let params = SystemParams::new(3, 1.0, 1.0, 0.0, -1.1, 1.0).unwrap();
    let pat = mask(&[1, 0, 1, 1, 1], 0.625);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let mut xs: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut e = adiabatic_potential(&xs, &pat, &params);
        for _ in 0..2000 {
            xs = step_overdamped(&xs, &pat, &params, 1e-3).unwrap();
            let next = adiabatic_potential(&xs, &pat, &params);
            assert!(next <= e + 1e-12, "{next} > {e}");
            e = next;
        }
    }
}

#[test]
fn damped_full_dynamics_settle_on_an_equilibrium() {
    let params = fig2_params(2);
    let pat = mask(&[0, 0, 0, 0, 1], 0.625);
    let initial = SystemState::at_rest(vec![0.35, 0.25], &pat);
    let opts = IntegratorOptions {
        scheme: Scheme::Full,
        dt: 0.01,
        max_time: 200.0,
        sample_stride: 1000,
        cluster_epsilon: None,
    };
    let traj = run_trajectory(&initial, &Schedule::constant("a", pat.clone()), &params, &opts, &NoiseOptions::off()).unwrap();
    let last = traj.final_sample().unwrap();
    let (class, _) = stability(&last.positions, &pat, &params, &EquilibriumOptions {
        equilibrium_check: 1e-6,
        ..EquilibriumOptions::default()
    })
    .unwrap();
    assert_eq!(class, Stability::Stable);
    let sol = adiabatic_field(&last.positions, &pat, &params);
    assert!((total_intensity(&sol.amplitudes) - 0.78125).abs() < 1e-6);
}

proptest! {
    #[test]
    fn translation_and_exchange_symmetry(
        x1 in -20.0f64..20.0, x2 in -20.0f64..20.0, x3 in -20.0f64..20.0,
        shift in -3i32..3, which in 0usize..3,
    ) {
        let params = fig2_params(3);
        let pat = mask(&[1, 1, 0, 1, 1], 0.5);
        let xs = [x1, x2, x3];
        let base = adiabatic_field(&xs, &pat, &params);
        let f = adiabatic_force(&xs, &pat, &params);
        let mut moved = xs;
        moved[which] += shift as f64 * TAU;
        let g = adiabatic_force(&moved, &pat, &params);
        prop_assert!((adiabatic_field(&moved, &pat, &params).intensity - base.intensity).abs() < 1e-9 * (1.0 + base.intensity));
        for j in 0..3 {
            prop_assert!((f[j] - g[j]).abs() < 1e-8 * (1.0 + f[j].abs()));
        }
        let swapped = [x2, x1, x3];
        let h = adiabatic_force(&swapped, &pat, &params);
        prop_assert!((h[0] - f[1]).abs() < 1e-12 * (1.0 + f[1].abs()));
        prop_assert!((h[1] - f[0]).abs() < 1e-12 * (1.0 + f[0].abs()));
        prop_assert!((adiabatic_field(&swapped, &pat, &params).intensity - base.intensity).abs() < 1e-12 * (1.0 + base.intensity));
    }

    #[test]
    fn intensity_is_sum_of_mode_intensities(x1 in 0.0f64..TAU, x2 in 0.0f64..TAU) {
        let params = fig2_params(2);
        let pat = mask(&[0, 1, 1, 1], 0.625);
        let sol = adiabatic_field(&[x1, x2], &pat, &params);
        let sum: f64 = sol.amplitudes.values().map(|a| a.norm_sqr()).sum();
        prop_assert!((sol.intensity - sum).abs() <= 1e-15 * (1.0 + sum));
    }
}
