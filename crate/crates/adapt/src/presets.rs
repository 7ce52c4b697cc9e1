//! Built-in parameter sets. Each is a full configuration document; a user
//! config is merged over it key by key.

use std::f64::consts::PI;

use serde_json::{json, Value};

pub const PRESET_NAMES: [&str; 9] = [
    "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4", "fig6desk", "fig6full",
];

/// η = 5κ/8, NU₀ = −κ/10, δ_c = NU₀ − κ.
fn atlas(n: usize, mask: &[u8]) -> Value {
    let u0 = -0.1 / n as f64;
    json!({
        "unit": "kappa",
        "system": {
            "n_particles": n,
            "recoil_frequency": 1.0,
            "u0": u0,
            "delta_c": n as f64 * u0 - 1.0,
            "friction": 1.0
        },
        "patterns": [{ "name": "main", "mask": mask, "eta": 0.625 }],
        "integrator": { "scheme": "overdamped", "max_time": 200.0, "sample_stride": 50 },
        "equilibria": { "resolution": if n <= 2 { 100 } else { 60 }, "keep_null_field": false }
    })
}

/// η = κ/5, NU₀ = −κ, δ_c = NU₀/2 − 2κ under stationarity-gated switching.
fn adaptive(n: usize, patterns: Value, mode: &str, max_switches: usize) -> Value {
    let u0 = -1.0 / n as f64;
    json!({
        "unit": "kappa",
        "system": {
            "n_particles": n,
            "recoil_frequency": 1.0,
            "u0": u0,
            "delta_c": n as f64 * u0 / 2.0 - 2.0,
            "friction": 1.0
        },
        "patterns": patterns,
        "schedule": {
            "mode": mode,
            "trigger": { "kind": "stationarity", "tol_v": 1e-6, "tol_f": 1e-6, "window": 3,
                         "check_stride": 10, "timeout": 1e4 },
            "max_switches": max_switches
        },
        "integrator": { "scheme": "overdamped", "max_time": 1e7, "sample_stride": 200 }
    })
}

fn comb(master_count: usize, modes_per_pattern: usize) -> Value {
    json!([{
        "name": "comb",
        "comb": { "n1": 1003, "dn": 7, "master_count": master_count, "pattern_count": 5,
                  "modes_per_pattern": modes_per_pattern, "eta": 0.2 }
    }])
}

pub fn preset(name: &str) -> Option<Value> {
    Some(match name {
        "fig2a" => atlas(2, &[0, 0, 0, 0, 1]),
        "fig2b" => atlas(2, &[1, 0, 1, 1, 1]),
        "fig2c" => atlas(2, &[0, 1, 1, 1, 0]),
        "fig3a" => atlas(3, &[1, 0, 1, 0, 1]),
        "fig3b" => atlas(3, &[1, 0, 1, 1, 1]),
        "fig3c" => {
            let masks: [[u8; 7]; 5] = [
                [1, 0, 1, 0, 0, 0, 1],
                [0, 1, 1, 0, 1, 1, 0],
                [0, 0, 1, 0, 1, 0, 0],
                [0, 1, 1, 1, 1, 1, 0],
                [1, 1, 1, 1, 0, 1, 0],
            ];
            let patterns: Vec<Value> = masks
                .iter()
                .enumerate()
                .map(|(i, m)| json!({ "name": format!("m{}", i + 1), "mask": m, "eta": 0.2 }))
                .collect();
            adaptive(3, Value::Array(patterns), "periodic_cycle", 100)
        }
        "fig4" => {
            let pi2 = PI * PI;
            let (kappa, u0) = (10.0 / pi2, -5.0 / pi2);
            json!({
                "unit": "recoil",
                "system": {
                    "n_particles": 2,
                    "kappa": kappa,
                    "u0": u0,
                    "delta_c": 2.0 * u0 / 2.0 - 2.0 * kappa,
                    "friction": 20.0 / pi2
                },
                "patterns": [{ "name": "main", "mask": [1, 0, 1, 1, 1, 0, 1], "eta": 2.0 / pi2 }],
                "integrator": { "scheme": "full", "max_time": 1e4 * pi2 / 5.0, "sample_stride": 10 },
                "noise": { "enabled": true, "kick_interval": pi2 / 5.0, "kick_sigma": 0.3 }
            })
        }
        "fig6desk" => {
            let mut v = adaptive(30, comb(10, 5), "random_switch", 300);
            v["diagnostics"] = json!({ "memory_probe": true });
            v["schedule"]["trigger"]["timeout"] = json!(0.01);
            v["integrator"]["sample_stride"] = json!(2000);
            v
        }
        "fig6full" => {
            let mut v = adaptive(100, comb(100, 50), "random_switch", 8000);
            v["diagnostics"] = json!({ "memory_probe": true });
            // Rounding leaves residual forces of a few 1e-6 at N = 100.
            v["schedule"]["trigger"]["tol_f"] = json!(1e-4);
            v["schedule"]["trigger"]["timeout"] = json!(0.01);
            v["integrator"]["sample_stride"] = json!(20000);
            v
        }
        _ => return None,
    })
}

/// Recursively merges `over` into `base`: objects merge key by key, any
/// other value replaces.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
