//! CSV writers. Floats carry 17 significant digits; the header row names
//! every column.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cavity_core::diagnostics::order_parameter;
use cavity_core::equilibria::LandscapeGrid;
use cavity_core::{Equilibrium, Trajectory};

use crate::config::Experiment;
use crate::error::CliError;

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn line<I: IntoIterator<Item = String>>(out: &mut String, cells: I) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

fn f(v: f64) -> String {
    let mut s = String::new();
    num(&mut s, v);
    s
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |j| format!("{prefix}_{j}"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Mode orders appearing in any pattern of the experiment.
fn all_modes(exp: &Experiment) -> Vec<u32> {
    let set: BTreeSet<u32> = exp
        .schedule
        .patterns
        .iter()
        .flat_map(|p| p.pattern.modes().iter().map(|m| m.order))
        .collect();
    set.into_iter().collect()
}

/// One row per sample: `t, x_1..x_N, p_1..p_N, P_tot, Theta_tot, N0,
/// pattern_id, N0_pairs`, then `P_n{order}` and `Theta_n{order}` for every
/// mode used anywhere in the schedule (zero intensity while unpumped).
pub fn trajectory_csv(traj: &Trajectory, exp: &Experiment) -> String {
    let n = exp.params.n_particles;
    let modes = all_modes(exp);
    let mut out = String::new();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(indexed("x", n));
    header.extend(indexed("p", n));
    header.extend(["P_tot", "Theta_tot", "N0", "pattern_id", "N0_pairs"].map(String::from));
    header.extend(modes.iter().map(|m| format!("P_n{m}")));
    header.extend(modes.iter().map(|m| format!("Theta_n{m}")));
    line(&mut out, header);
    for s in &traj.samples {
        let mut row = vec![f(exp.export_time(s.time))];
        row.extend(s.positions.iter().map(|&x| f(x)));
        row.extend(s.momenta.iter().map(|&p| f(p)));
        row.push(f(s.intensity));
        row.push(f(s.total_order));
        row.push(s.cluster_count.to_string());
        row.push(traj.pattern_names[s.pattern].clone());
        row.push(s.cluster_pairs.to_string());
        for m in &modes {
            let v = s
                .mode_intensities
                .iter()
                .find(|(k, _)| k == m)
                .map_or(0.0, |(_, v)| *v);
            row.push(f(v));
        }
        for &m in &modes {
            row.push(f(order_parameter(&s.positions, m)));
        }
        line(&mut out, row);
    }
    out
}

/// `t, pattern_id`, one row per pattern application.
pub fn events_csv(traj: &Trajectory, exp: &Experiment) -> String {
    let mut out = String::from("t,pattern_id\n");
    for e in &traj.events {
        line(
            &mut out,
            [f(exp.export_time(e.time)), traj.pattern_names[e.pattern].clone()],
        );
    }
    out
}

/// Observables at the end of each illumination interval.
pub fn segments_csv(traj: &Trajectory, exp: &Experiment) -> String {
    let n = exp.params.n_particles;
    let mut out = String::new();
    let mut header: Vec<String> = ["switch_index", "pattern_id", "t_start", "t_end", "P_tot", "Theta_tot", "N0"]
        .map(String::from)
        .to_vec();
    header.extend(indexed("x", n));
    line(&mut out, header);
    for s in &traj.segments {
        let mut row = vec![
            s.switch_index.to_string(),
            traj.pattern_names[s.pattern].clone(),
            f(exp.export_time(s.start)),
            f(exp.export_time(s.end)),
            f(s.intensity),
            f(s.total_order),
            s.cluster_count.to_string(),
        ];
        row.extend(s.positions.iter().map(|&x| f(x)));
        line(&mut out, row);
    }
    out
}

/// `x_1..x_N, classification, P_tot, eig_re_1..eig_re_N`; eigenvalues in the
/// document's rate unit.
pub fn equilibria_csv(eqs: &[Equilibrium], exp: &Experiment) -> String {
    let n = exp.params.n_particles;
    let mut out = String::new();
    let mut header: Vec<String> = indexed("x", n).collect();
    header.push("classification".into());
    header.push("P_tot".into());
    header.extend(indexed("eig_re", n));
    line(&mut out, header);
    for e in eqs {
        let mut row: Vec<String> = e.positions.iter().map(|&x| f(x)).collect();
        row.push(e.classification.as_str().into());
        row.push(f(e.intensity));
        row.extend(e.eigen_real_parts.iter().map(|&r| f(r * exp.time_scale)));
        line(&mut out, row);
    }
    out
}

/// Grid coordinates, `P_tot`, `P_n{order}` per pumped mode and the force
/// components `F_1..F_N` (document units).
pub fn landscape_csv(grid: &LandscapeGrid, exp: &Experiment) -> String {
    let n = grid.n_particles;
    let mut out = String::new();
    let mut header: Vec<String> = indexed("x", n).collect();
    header.push("P_tot".into());
    header.extend(grid.modes.iter().map(|m| format!("P_n{m}")));
    header.extend(indexed("F", n));
    line(&mut out, header);
    for point in 0..grid.len() {
        let mut row: Vec<String> = grid.coordinates(point).into_iter().map(f).collect();
        row.push(f(grid.intensity[point]));
        row.extend(grid.mode_intensities(point).iter().map(|&v| f(v)));
        row.extend(grid.force(point).iter().map(|&v| f(v * exp.time_scale)));
        line(&mut out, row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(f(0.1), "1.0000000000000001e-1");
        assert_eq!(f(-2.5), "-2.5000000000000000e0");
        let back: f64 = f(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }
}
