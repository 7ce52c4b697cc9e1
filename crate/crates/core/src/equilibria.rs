//! Zero-force configurations of the overdamped (adiabatic) system and their
//! linear stability.
//!
//! Equilibria are found by scanning a regular grid over one fundamental
//! wavelength per particle, seeding Newton's method in every cell where all
//! force components change sign, and merging the polished roots modulo the
//! `2π` translation of any particle and modulo particle permutation.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::model::{Equilibrium, IlluminationPattern, Stability, SystemParams};
use crate::optics::{adiabatic_field, adiabatic_force, adiabatic_force_into};
use crate::phase::{periodic_delta, wrap_position};
use crate::{Error, Result, WAVELENGTH};

/// Exhaustive grid enumeration is exponential in N; beyond this it is refused.
pub const MAX_ENUMERATION_PARTICLES: usize = 4;
pub const MIN_RESOLUTION: usize = 8;

/// Intensity below which an equilibrium counts as a zero-field point.
const NULL_FIELD_INTENSITY: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    /// Grid points per particle coordinate.
    pub resolution: usize,
    /// Newton stops once the Euclidean force norm is below this.
    pub tol_force: f64,
    /// Roots closer than this (periodic, permutation-aware, max-norm) merge.
    pub tol_dedup: f64,
    /// Half-width of the marginal band for eigenvalue real parts.
    pub eig_margin: f64,
    /// Force norm above which [`stability`] refuses a configuration.
    pub equilibrium_check: f64,
    /// Finite-difference step; `None` picks one from the highest mode order.
    pub jacobian_step: Option<f64>,
    pub max_newton_iter: usize,
    /// Keep zero-field equilibria (all α_n = 0). These come in continuous
    /// families whenever a single mode is pumped.
    pub keep_null_field: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            resolution: 100,
            tol_force: 1e-10,
            tol_dedup: 1e-6 * WAVELENGTH,
            eig_margin: 1e-8,
            equilibrium_check: 1e-8,
            jacobian_step: None,
            max_newton_iter: 60,
            keep_null_field: true,
        }
    }
}

impl EquilibriumOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        EquilibriumOptions {
            resolution,
            ..Self::default()
        }
    }

    fn step_for(&self, pattern: &IlluminationPattern) -> f64 {
        self.jacobian_step
            .unwrap_or_else(|| default_jacobian_step(pattern))
    }
}

pub fn default_jacobian_step(pattern: &IlluminationPattern) -> f64 {
    1e-5 / pattern.max_order().unwrap_or(1) as f64
}

/// Force components and intensity sampled on the grid `[0, 2π)^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub resolution: usize,
    pub n_particles: usize,
    /// Pumped mode orders, the column order of `mode_intensity`.
    pub modes: Vec<u32>,
    /// `P_tot` per grid point.
    pub intensity: Vec<f64>,
    /// `|α_n|²` per grid point, `modes.len()` values each.
    pub mode_intensity: Vec<f64>,
    /// Adiabatic force per grid point, `n_particles` values each.
    pub forces: Vec<f64>,
}

impl LandscapeGrid {
    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    /// Grid indices of a point; the first coordinate varies slowest.
    pub fn indices(&self, point: usize) -> Vec<usize> {
        grid_indices(point, self.resolution, self.n_particles)
    }

    pub fn coordinates(&self, point: usize) -> Vec<f64> {
        self.indices(point)
            .into_iter()
            .map(|i| grid_coordinate(i, self.resolution))
            .collect()
    }

    pub fn point(&self, indices: &[usize]) -> usize {
        indices.iter().fold(0, |acc, &i| acc * self.resolution + i)
    }

    pub fn mode_intensities(&self, point: usize) -> &[f64] {
        let m = self.modes.len();
        &self.mode_intensity[point * m..(point + 1) * m]
    }

    pub fn force(&self, point: usize) -> &[f64] {
        let n = self.n_particles;
        &self.forces[point * n..(point + 1) * n]
    }
}

fn grid_coordinate(i: usize, resolution: usize) -> f64 {
    WAVELENGTH * i as f64 / resolution as f64
}

fn grid_indices(mut point: usize, resolution: usize, dims: usize) -> Vec<usize> {
    let mut idx = vec![0; dims];
    for d in (0..dims).rev() {
        idx[d] = point % resolution;
        point /= resolution;
    }
    idx
}

fn check_grid(params: &SystemParams, resolution: usize, max_particles: usize) -> Result<()> {
    params.validate()?;
    if params.n_particles > max_particles {
        return Err(Error::InvalidParams(alloc::format!(
            "grid scans support at most {max_particles} particles, got {}",
            params.n_particles
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParams(alloc::format!(
            "resolution must be >= {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    Ok(())
}

/// Samples `P_tot`, each mode's `|α_n|²` and the adiabatic force on the grid.
pub fn landscape(
    pattern: &IlluminationPattern,
    params: &SystemParams,
    resolution: usize,
) -> Result<LandscapeGrid> {
    check_grid(params, resolution, 3)?;
    let n = params.n_particles;
    let total = resolution.pow(n as u32);
    let modes: Vec<u32> = pattern.modes().iter().map(|m| m.order).collect();
    let mut grid = LandscapeGrid {
        resolution,
        n_particles: n,
        modes,
        intensity: Vec::with_capacity(total),
        mode_intensity: Vec::with_capacity(total * pattern.len()),
        forces: Vec::with_capacity(total * n),
    };
    let mut x = vec![0.0; n];
    for point in 0..total {
        for (xi, i) in x.iter_mut().zip(grid_indices(point, resolution, n)) {
            *xi = grid_coordinate(i, resolution);
        }
        let sol = adiabatic_field(&x, pattern, params);
        grid.intensity.push(sol.intensity);
        grid.mode_intensity
            .extend(sol.amplitudes.values().map(|a| a.norm_sqr()));
        grid.forces.extend(adiabatic_force(&x, pattern, params));
    }
    Ok(grid)
}

/// Central-difference Jacobian of the adiabatic force, entry `(i, j) = ∂F_i/∂x_j`.
pub fn jacobian(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    step: f64,
) -> DMatrix<f64> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = positions.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut x = positions.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for j in 0..n {
        x[j] = positions[j] + step;
        adiabatic_force_into(&x, pattern, params, &mut plus);
        x[j] = positions[j] - step;
        adiabatic_force_into(&x, pattern, params, &mut minus);
        x[j] = positions[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    jac
}

/// Real parts of the eigenvalues of `m`, ascending.
pub fn eigen_real_parts(m: &DMatrix<f64>) -> Vec<f64> {
    let mut re: Vec<f64> = if m.nrows() == 1 {
        vec![m[(0, 0)]]
    } else {
        m.complex_eigenvalues().iter().map(|z| z.re).collect()
    };
    re.sort_by(f64::total_cmp);
    re
}

pub fn classify(eigen_real_parts: &[f64], margin: f64) -> Stability {
    if eigen_real_parts.iter().any(|&r| r > margin) {
        Stability::Unstable
    } else if eigen_real_parts.iter().all(|&r| r < -margin) {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

/// Linear stability of the overdamped flow `ẋ ∝ F(x)` at an equilibrium,
/// together with the sorted eigenvalue real parts it was decided from.
pub fn stability(
    positions: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    opts: &EquilibriumOptions,
) -> Result<(Stability, Vec<f64>)> {
    let force_norm = norm(&adiabatic_force(positions, pattern, params));
    if !(force_norm <= opts.equilibrium_check) {
        return Err(Error::NotAnEquilibrium {
            force_norm,
            tolerance: opts.equilibrium_check,
        });
    }
    let jac = jacobian(positions, pattern, params, opts.step_for(pattern));
    let re = eigen_real_parts(&jac);
    Ok((classify(&re, opts.eig_margin), re))
}

/// All distinct equilibria of the adiabatic force field that the grid scan
/// resolves, sorted by canonical position.
pub fn find_equilibria(
    pattern: &IlluminationPattern,
    params: &SystemParams,
    opts: &EquilibriumOptions,
) -> Result<Vec<Equilibrium>> {
    check_grid(params, opts.resolution, MAX_ENUMERATION_PARTICLES)?;
    if pattern.is_empty() {
        return Err(Error::DegenerateLandscape);
    }
    let n = params.n_particles;
    let res = opts.resolution;
    let total = res.pow(n as u32);

    let mut forces = vec![0.0; total * n];
    let mut x = vec![0.0; n];
    for point in 0..total {
        for (xi, i) in x.iter_mut().zip(grid_indices(point, res, n)) {
            *xi = grid_coordinate(i, res);
        }
        adiabatic_force_into(&x, pattern, params, &mut forces[point * n..(point + 1) * n]);
    }
    if forces.iter().all(|&f| f == 0.0) {
        return Err(Error::DegenerateLandscape);
    }

    let corners = 1usize << n;
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for cell in 0..total {
        let base = grid_indices(cell, res, n);
        lo.iter_mut().for_each(|v| *v = f64::INFINITY);
        hi.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        for corner in 0..corners {
            let point = (0..n).fold(0, |acc, d| {
                acc * res + (base[d] + ((corner >> d) & 1)) % res
            });
            for d in 0..n {
                let f = forces[point * n + d];
                lo[d] = lo[d].min(f);
                hi[d] = hi[d].max(f);
            }
        }
        if (0..n).any(|d| lo[d] > 0.0 || hi[d] < 0.0) {
            continue;
        }
        let seed: Vec<f64> = base
            .iter()
            .map(|&i| grid_coordinate(i, res) + 0.5 * WAVELENGTH / res as f64)
            .collect();
        let Some(root) = newton(&seed, pattern, params, opts) else {
            continue;
        };
        let canon = canonical(&root);
        if !found.iter().any(|f| same_configuration(f, &canon, opts.tol_dedup)) {
            found.push(canon);
        }
    }

    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut out = Vec::with_capacity(found.len());
    for positions in found {
        let intensity = adiabatic_field(&positions, pattern, params).intensity;
        if !opts.keep_null_field && intensity < NULL_FIELD_INTENSITY {
            continue;
        }
        let (classification, eigen_real_parts) = stability(&positions, pattern, params, opts)?;
        out.push(Equilibrium {
            positions,
            classification,
            intensity,
            eigen_real_parts,
        });
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Damped Newton iteration with a pseudo-inverse step; singular directions
/// (e.g. along zero-field manifolds) are left untouched.
fn newton(
    start: &[f64],
    pattern: &IlluminationPattern,
    params: &SystemParams,
    opts: &EquilibriumOptions,
) -> Option<Vec<f64>> {
    let n = start.len();
    let step = opts.step_for(pattern);
    let max_move = WAVELENGTH / opts.resolution as f64;
    let mut x = start.to_vec();
    let mut f = adiabatic_force(&x, pattern, params);
    let mut fnorm = norm(&f);
    let mut trial = vec![0.0; n];
    let mut ftrial = vec![0.0; n];
    for _ in 0..opts.max_newton_iter {
        if fnorm < opts.tol_force {
            return Some(x);
        }
        let jac = jacobian(&x, pattern, params, step);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        if !(smax > 0.0) {
            return None;
        }
        let rhs = nalgebra::DVector::from_iterator(n, f.iter().map(|v| -v));
        let dx = svd.solve(&rhs, 1e-10 * smax).ok()?;
        let biggest = dx.amax();
        let scale = if biggest > max_move { max_move / biggest } else { 1.0 };

        let mut t = scale;
        let mut accepted = false;
        while t > scale * 1e-4 {
            for i in 0..n {
                trial[i] = x[i] + t * dx[i];
            }
            adiabatic_force_into(&trial, pattern, params, &mut ftrial);
            let tn = norm(&ftrial);
            if tn < fnorm {
                x.copy_from_slice(&trial);
                f.copy_from_slice(&ftrial);
                fnorm = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (fnorm < opts.tol_force).then_some(x);
        }
    }
    (fnorm < opts.tol_force).then_some(x)
}

/// Positions reduced to `[0, 2π)` and sorted.
pub fn canonical(positions: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = positions.iter().map(|&x| wrap_position(x)).collect();
    c.sort_by(f64::total_cmp);
    c
}

/// Whether two configurations coincide within `tol` (max-norm) for some
/// particle permutation, with each coordinate compared modulo `2π`.
pub fn same_configuration(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut perm: Vec<usize> = (0..b.len()).collect();
    loop {
        if a
            .iter()
            .zip(&perm)
            .all(|(&x, &j)| periodic_delta(x, b[j]).abs() < tol)
        {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
