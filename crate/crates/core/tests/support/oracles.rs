//! Reference implementations used only by tests. Nothing here calls into the
//! library's optics, equilibria or dynamics code.

#![allow(dead_code)]

use cavity_core::{Complex64, IlluminationPattern, SystemParams};
use std::f64::consts::TAU;

pub fn modes(pattern: &IlluminationPattern) -> Vec<(f64, f64)> {
    pattern
        .modes()
        .iter()
        .map(|m| (m.order as f64, m.eta))
        .collect()
}

/// `α_n = η_n Σ sin(n x) / (δ_c − U₀ Σ sin²(n x) + iκ)`, one per mode.
pub fn field(xs: &[f64], modes: &[(f64, f64)], p: &SystemParams) -> Vec<Complex64> {
    modes
        .iter()
        .map(|&(n, eta)| {
            let s: f64 = xs.iter().map(|x| (n * x).sin()).sum();
            let c: f64 = xs.iter().map(|x| (n * x).sin().powi(2)).sum();
            let re = p.delta_c - p.u0 * c;
            let den = re * re + p.kappa * p.kappa;
            // η s / (re + iκ) = η s (re − iκ) / den
            Complex64::new(eta * s * re / den, -eta * s * p.kappa / den)
        })
        .collect()
}

pub fn intensity(xs: &[f64], modes: &[(f64, f64)], p: &SystemParams) -> f64 {
    field(xs, modes, p).iter().map(|a| a.re * a.re + a.im * a.im).sum()
}

/// `F_j = −Σ_n n (U₀ |α_n|² sin 2n x_j + 2 η_n Re α_n cos n x_j)`.
pub fn force_with(xs: &[f64], alphas: &[Complex64], modes: &[(f64, f64)], p: &SystemParams) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            modes
                .iter()
                .zip(alphas)
                .map(|(&(n, eta), a)| {
                    let abs2 = a.re * a.re + a.im * a.im;
                    -n * (p.u0 * abs2 * (2.0 * n * x).sin() + 2.0 * eta * a.re * (n * x).cos())
                })
                .sum()
        })
        .collect()
}

pub fn force(xs: &[f64], modes: &[(f64, f64)], p: &SystemParams) -> Vec<f64> {
    force_with(xs, &field(xs, modes, p), modes, p)
}

/// Right-hand side of the mode equation at frozen positions.
fn field_rhs(a: Complex64, s: f64, c: f64, eta: f64, p: &SystemParams) -> Complex64 {
    let delta = p.delta_c - p.u0 * c;
    // i Δ α − κ α − i η s
    Complex64::new(-delta * a.im - p.kappa * a.re, delta * a.re - p.kappa * a.im - eta * s)
}

/// Classical RK4 on one mode equation with positions frozen.
pub fn rk4_field(a0: Complex64, xs: &[f64], n: f64, eta: f64, p: &SystemParams, t: f64, steps: usize) -> Complex64 {
    let s: f64 = xs.iter().map(|x| (n * x).sin()).sum();
    let c: f64 = xs.iter().map(|x| (n * x).sin().powi(2)).sum();
    let h = t / steps as f64;
    let mut a = a0;
    for _ in 0..steps {
        let k1 = field_rhs(a, s, c, eta, p);
        let k2 = field_rhs(a + k1 * (h / 2.0), s, c, eta, p);
        let k3 = field_rhs(a + k2 * (h / 2.0), s, c, eta, p);
        let k4 = field_rhs(a + k3 * h, s, c, eta, p);
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    a
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Largest per-particle periodic distance between two configurations,
/// without permutation.
pub fn periodic_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = wrap(x - y);
            d.min(TAU - d)
        })
        .fold(0.0, f64::max)
}

/// Like [`periodic_distance`] but minimised over the order of `b` (two
/// particles).
pub fn pair_distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    periodic_distance(a, b).min(periodic_distance(a, &[b[1], b[0]]))
}

/// Stable equilibria of a two-particle system from a `res × res`
/// sign-change scan. The grid is offset by an irrational fraction of a cell
/// so that symmetric equilibria never sit on grid lines, where the force
/// component along the line is pure rounding noise.
///
/// Cells whose corner forces change sign in both components and whose centre
/// carries light are bisected into quarters, keeping quarters that still
/// bracket both components, until they are narrower than `1e-9`. Stability
/// of the refined point comes from trace and determinant of a
/// finite-difference Jacobian of [`force`].
pub fn brute_force_stable_pairs(modes: &[(f64, f64)], p: &SystemParams, res: usize) -> Vec<[f64; 2]> {
    let h = TAU / res as f64;
    let off = (2f64.sqrt() - 1.0) * h;
    let f = |x: f64, y: f64| {
        let v = force(&[x, y], modes, p);
        (v[0], v[1])
    };
    let at = |i: usize| off + i as f64 * h;
    let grid: Vec<Vec<(f64, f64)>> = (0..=res)
        .map(|i| (0..=res).map(|j| f(at(i), at(j))).collect())
        .collect();
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let corners = [grid[i][j], grid[i + 1][j], grid[i][j + 1], grid[i + 1][j + 1]];
            if !brackets(&corners) {
                continue;
            }
            if intensity(&[at(i) + h / 2.0, at(j) + h / 2.0], modes, p) < 1e-6 {
                continue;
            }
            for root in refine(&f, at(i), at(j), h, 0) {
                if is_stable_2d(&root, modes, p) && !found.iter().any(|q| pair_distance(q, &root) < 1e-6) {
                    found.push(root);
                }
            }
        }
    }
    found
}

fn brackets(c: &[(f64, f64); 4]) -> bool {
    let span = |v: [f64; 4]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    span([c[0].0, c[1].0, c[2].0, c[3].0]) && span([c[0].1, c[1].1, c[2].1, c[3].1])
}

fn refine<F: Fn(f64, f64) -> (f64, f64)>(f: &F, x: f64, y: f64, w: f64, depth: usize) -> Vec<[f64; 2]> {
    if w < 1e-9 || depth > 40 {
        return vec![[wrap(x + w / 2.0), wrap(y + w / 2.0)]];
    }
    let half = w / 2.0;
    let mut out = Vec::new();
    for (dx, dy) in [(0.0, 0.0), (half, 0.0), (0.0, half), (half, half)] {
        let (x0, y0) = (x + dx, y + dy);
        let c = [f(x0, y0), f(x0 + half, y0), f(x0, y0 + half), f(x0 + half, y0 + half)];
        if brackets(&c) {
            out.extend(refine(f, x0, y0, half, depth + 1));
            if out.len() > 4 {
                break;
            }
        }
    }
    out
}

fn is_stable_2d(x: &[f64; 2], modes: &[(f64, f64)], p: &SystemParams) -> bool {
    let h = 1e-6;
    let mut j = [[0.0; 2]; 2];
    for c in 0..2 {
        let mut a = *x;
        let mut b = *x;
        a[c] += h;
        b[c] -= h;
        let (fa, fb) = (force(&a, modes, p), force(&b, modes, p));
        for r in 0..2 {
            j[r][c] = (fa[r] - fb[r]) / (2.0 * h);
        }
    }
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    tr < 0.0 && det > 0.0
}

/// Displaces `x` by `perturbation` and integrates `ẋ = F/μ` with RK4 until
/// the force is negligible, the trajectory leaves the neighbourhood, or
/// `t_max` passes. Reports whether it ended within `tol` of `x`.
pub fn flow_returns(
    x: &[f64],
    perturbation: &[f64],
    modes: &[(f64, f64)],
    p: &SystemParams,
    h: f64,
    t_max: f64,
    tol: f64,
) -> bool {
    let mu = p.friction;
    let rhs = |y: &[f64]| -> Vec<f64> { force(y, modes, p).into_iter().map(|f| f / mu).collect() };
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut y: Vec<f64> = x.iter().zip(perturbation).map(|(a, b)| a + b).collect();
    let mut t = 0.0;
    while t < t_max {
        let k1 = rhs(&y);
        if k1.iter().all(|v| v.abs() < 1e-14) {
            break;
        }
        let k2 = rhs(&axpy(&y, &k1, h / 2.0));
        let k3 = rhs(&axpy(&y, &k2, h / 2.0));
        let k4 = rhs(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        if periodic_distance(&y, x) > 0.3 {
            return false;
        }
    }
    periodic_distance(&y, x) < tol
}
