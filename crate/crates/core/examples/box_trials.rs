//! Runs the built-in box scenario and prints one line per trial.
//!
//! `cargo run --release -p mupf-core --example box_trials -- [trials] [memory]`

use std::sync::Arc;

use mupf_core::harness::{batch, box_scenario};
use mupf_core::metrics::summarize;
use mupf_core::{FilterConfig, RunOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let memory = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let (mesh, scenario) = box_scenario().expect("box mesh");
    let config = FilterConfig {
        memory,
        ..FilterConfig::simulation_profile()
    };
    let reports = batch(
        Arc::new(mesh),
        &scenario,
        &config,
        trials,
        0,
        &RunOptions::default(),
    )
    .expect("batch");
    for (i, r) in reports.iter().enumerate() {
        println!(
            "trial {i:2}: index {:.5} position {:.4} m orientation {:6.2} deg {:.2} s {}",
            r.final_index,
            r.position_error.unwrap_or(f64::NAN),
            r.orientation_error.unwrap_or(f64::NAN).to_degrees(),
            r.elapsed.unwrap_or(f64::NAN),
            if r.success { "ok" } else { "failed" }
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summarize(&reports)).unwrap()
    );
}
