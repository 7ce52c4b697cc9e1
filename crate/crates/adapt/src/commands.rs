use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cavity_core::dynamics::{run_trajectory, Scheme};
use cavity_core::equilibria::{find_equilibria, landscape, MAX_ENUMERATION_PARTICLES};
use cavity_core::illumination::{Schedule, ScheduleMode};
use cavity_core::{Error as CoreError, SystemState, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{build_system, derive_seed, ConfigDocument, Experiment};
use crate::error::CliError;
use crate::export;
use crate::presets::{merge, preset};

/// Reads `config` (if any) and merges it over `preset` (if any); `seed`
/// replaces the document's seed.
pub fn load_config(
    config: Option<&Path>,
    preset_name: Option<&str>,
    seed: Option<u64>,
) -> Result<ConfigDocument, CliError> {
    let mut value = match preset_name {
        Some(name) => preset(name).ok_or_else(|| CliError::UnknownPreset(name.into()))?,
        None => Value::Object(Default::default()),
    };
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let over: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        merge(&mut value, over);
    }
    if config.is_none() && preset_name.is_none() {
        return Err(CliError::Config("either --config or --preset is required".into()));
    }
    let mut doc = ConfigDocument::from_value(value)?;
    if let Some(s) = seed {
        doc.seed = s;
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: ConfigDocument,
    pub seed: u64,
    pub version: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partial: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const PARTIAL_MANIFEST: &str = "manifest.partial.json";

/// Files written by one command; removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for stale in [MANIFEST, PARTIAL_MANIFEST] {
            let p = dir.join(stale);
            if p.exists() {
                fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
            }
        }
        Ok(Outputs {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn write(&mut self, name: String, contents: &str) -> Result<(), CliError> {
        export::write_file(&self.dir.join(&name), contents)?;
        self.names.push(name);
        Ok(())
    }

    fn discard(&self) {
        for n in &self.names {
            let _ = fs::remove_file(self.dir.join(n));
        }
    }

    fn finish(self, command: &str, doc: &ConfigDocument, started: Instant, partial: Vec<String>, name: &str) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            command: command.into(),
            config: doc.clone(),
            seed: doc.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.names.clone(),
            duration_s: started.elapsed().as_secs_f64(),
            partial,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        export::write_file(&self.dir.join(name), &(text + "\n"))?;
        Ok(manifest)
    }
}

fn guarded<F>(out: &mut Outputs, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Outputs) -> Result<(), CliError>,
{
    let result = body(out);
    if result.is_err() {
        out.discard();
    }
    result
}

/// Equilibria table, plus the intensity landscape for N ≤ 2.
pub fn cmd_equilibria(doc: &ConfigDocument, out_dir: &Path) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let exp = build_system(doc, doc.seed)?;
    if exp.params.n_particles > MAX_ENUMERATION_PARTICLES {
        return Err(CoreError::InvalidParams(format!(
            "equilibria supports at most {MAX_ENUMERATION_PARTICLES} particles"
        ))
        .into());
    }
    let pattern = &exp.schedule.patterns[0].pattern;
    let eqs = find_equilibria(pattern, &exp.params, &exp.equilibria)?;
    let mut out = Outputs::new(out_dir)?;
    guarded(&mut out, |out| {
        out.write("equilibria.csv".into(), &export::equilibria_csv(&eqs, &exp))?;
        if exp.params.n_particles <= 2 {
            let grid = landscape(pattern, &exp.params, exp.landscape_resolution)?;
            out.write("landscape.csv".into(), &export::landscape_csv(&grid, &exp))?;
        }
        Ok(())
    })?;
    out.finish("equilibria", doc, started, Vec::new(), MANIFEST)
}

/// Intensities after relaxing under the first pattern from the initial state
/// and again from `final_positions`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryProbe {
    pub first: f64,
    pub reapplied: f64,
}

pub fn memory_probe(exp: &Experiment, final_positions: &[f64]) -> Result<MemoryProbe, CliError> {
    let first = &exp.schedule.patterns[0];
    let schedule = Schedule::new(
        ScheduleMode::Static,
        vec![first.clone()],
        exp.schedule.trigger,
        Some(1),
        0,
    )?;
    let relax = |state: &SystemState| -> Result<f64, CliError> {
        let traj = run_trajectory(state, &schedule, &exp.params, &exp.integrator, &exp.noise)?;
        Ok(traj.final_sample().map_or(0.0, |s| s.intensity))
    };
    let mut from_final = SystemState::at_rest(final_positions.to_vec(), &first.pattern);
    from_final.time = 0.0;
    Ok(MemoryProbe {
        first: relax(&exp.initial)?,
        reapplied: relax(&from_final)?,
    })
}

/// Runs the experiment's trajectory.
pub fn simulate(exp: &Experiment) -> Result<Trajectory, CliError> {
    if exp.integrator.scheme == Scheme::Overdamped && exp.noise.enabled {
        return Err(CoreError::InvalidParams("noise needs the full scheme".into()).into());
    }
    Ok(run_trajectory(
        &exp.initial,
        &exp.schedule,
        &exp.params,
        &exp.integrator,
        &exp.noise,
    )?)
}

fn write_run(out: &mut Outputs, traj: &Trajectory, exp: &Experiment, suffix: &str) -> Result<(), CliError> {
    out.write(format!("trajectory{suffix}.csv"), &export::trajectory_csv(traj, exp))?;
    out.write(format!("events{suffix}.csv"), &export::events_csv(traj, exp))?;
    out.write(format!("segments{suffix}.csv"), &export::segments_csv(traj, exp))?;
    Ok(())
}

/// One trajectory: `trajectory.csv`, `events.csv`, `segments.csv`.
pub fn cmd_run(doc: &ConfigDocument, out_dir: &Path) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let exp = build_system(doc, doc.seed)?;
    let traj = simulate(&exp)?;
    let mut out = Outputs::new(out_dir)?;
    guarded(&mut out, |out| {
        write_run(out, &traj, &exp, "")?;
        if exp.memory_probe {
            let last = traj.final_sample().expect("trajectory has samples");
            let probe = memory_probe(&exp, &last.positions)?;
            let text = serde_json::to_string_pretty(&json!({ "memory_probe": probe })).expect("json");
            out.write("memory.json".into(), &(text + "\n"))?;
        }
        Ok(())
    })?;
    out.finish("run", doc, started, Vec::new(), MANIFEST)
}

/// Per-run statistics entering the ensemble summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub final_p_tot: f64,
    pub final_theta_tot: f64,
    pub final_n0: f64,
    /// Time-averaged `P_tot` over the first and last tenth of the
    /// illumination intervals (of the samples when nothing switched).
    pub first_decile_p_tot: f64,
    pub last_decile_p_tot: f64,
    pub switches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_probe: Option<MemoryProbe>,
}

/// Time-averaged `P_tot` over the span of the first and last
/// `ceil(len/10)` illumination intervals. With fewer than two intervals the
/// samples themselves are split into tenths.
pub fn decile_p_tot(traj: &Trajectory) -> (f64, f64) {
    let segs = &traj.segments;
    if segs.len() < 2 {
        let series: Vec<f64> = traj.samples.iter().map(|s| s.intensity).collect();
        return decile_means(&series);
    }
    let k = segs.len().div_ceil(10);
    let window = |lo: f64, hi: f64| {
        let v: Vec<f64> = traj
            .samples
            .iter()
            .filter(|s| s.time >= lo && s.time <= hi)
            .map(|s| s.intensity)
            .collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    (
        window(segs[0].start, segs[k - 1].end),
        window(segs[segs.len() - k].start, segs[segs.len() - 1].end),
    )
}

/// Mean over the first and last `ceil(len/10)` values.
pub fn decile_means(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = values.len().div_ceil(10);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&values[..k]), mean(&values[values.len() - k..]))
}

pub fn summarize(index: usize, traj: &Trajectory, memory: Option<MemoryProbe>, seed: u64) -> RunSummary {
    let last = traj.final_sample().expect("trajectory has samples");
    let (first, lastd) = decile_p_tot(traj);
    RunSummary {
        index,
        seed,
        final_p_tot: last.intensity,
        final_theta_tot: last.total_order,
        final_n0: last.cluster_count as f64,
        first_decile_p_tot: first,
        last_decile_p_tot: lastd,
        switches: traj.events.len(),
        memory_probe: memory,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

pub fn aggregate(runs: &[RunSummary]) -> Value {
    json!({
        "runs": runs.len(),
        "final_P_tot": mean_std(runs.iter().map(|r| r.final_p_tot)),
        "final_Theta_tot": mean_std(runs.iter().map(|r| r.final_theta_tot)),
        "final_N0": mean_std(runs.iter().map(|r| r.final_n0)),
        "first_decile_P_tot": mean_std(runs.iter().map(|r| r.first_decile_p_tot)),
        "last_decile_P_tot": mean_std(runs.iter().map(|r| r.last_decile_p_tot)),
        "increasing_runs": runs.iter().filter(|r| r.last_decile_p_tot > r.first_decile_p_tot).count(),
        "per_run": runs,
    })
}

type Member = (Experiment, Trajectory, Option<MemoryProbe>);

/// Seed of ensemble member `index` under `master`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, 1000 + index as u64)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CAVITY_ADAPT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("CAVITY_ADAPT_THREADS={v:?} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// `n_runs` independently seeded trajectories plus `summary.json`.
///
/// If any run fails, the files of the completed runs are kept and listed in
/// `manifest.partial.json`; `manifest.json` is not written.
pub fn cmd_ensemble(doc: &ConfigDocument, out_dir: &Path, n_runs: usize) -> Result<Manifest, CliError> {
    let started = Instant::now();
    if n_runs == 0 {
        return Err(CliError::Config("--runs must be >= 1".into()));
    }
    build_system(doc, doc.seed)?;
    let pool = thread_pool()?;
    let results: Vec<Result<Member, CliError>> = pool.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|i| {
                let seed = run_seed(doc.seed, i);
                let exp = build_system(doc, seed)?;
                let traj = simulate(&exp)?;
                let probe = if exp.memory_probe {
                    let last = traj.final_sample().expect("trajectory has samples");
                    Some(memory_probe(&exp, &last.positions)?)
                } else {
                    None
                };
                Ok((exp, traj, probe))
            })
            .collect()
    });

    let mut out = Outputs::new(out_dir)?;
    let mut summaries = Vec::new();
    let mut failure = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((exp, traj, probe)) => {
                if let Err(e) = write_run(&mut out, &traj, &exp, &format!("_{i:03}")) {
                    out.discard();
                    return Err(e);
                }
                summaries.push(summarize(i, &traj, probe, exp.seed));
            }
            Err(e) => {
                failure.get_or_insert(CliError::Run {
                    index: i,
                    source: Box::new(e),
                });
            }
        }
    }
    if let Some(err) = failure {
        let partial = out.names.clone();
        out.finish("ensemble", doc, started, partial, PARTIAL_MANIFEST)?;
        return Err(err);
    }
    let text = serde_json::to_string_pretty(&aggregate(&summaries)).expect("summary serializes");
    guarded(&mut out, |out| out.write("summary.json".into(), &(text + "\n")))?;
    out.finish("ensemble", doc, started, Vec::new(), MANIFEST)
}
