//! Trial runner shared by the command-line tool and the acceptance tests:
//! simulate contacts, filter them, score the result.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::config::FilterConfig;
use crate::error::Result;
use crate::filter::ProximityModel;
use crate::geometry::{Pose, TriMesh};
use crate::metrics::{summarize, BatchSummary, SuccessThresholds, SweepRow, TrialReport};
use crate::mupf::{run, RunTrace};
use crate::simulate::{sample_contacts, ScenarioSpec};

/// Box dimensions (m) of the built-in scenario.
pub const BOX_SIZE: [f64; 3] = [0.1, 0.3, 0.2];

/// The 0.1 x 0.3 x 0.2 m box: L = 15 noiseless contacts on every face except
/// the bottom (faces 8 and 9, the -z side), which rests on the table.
pub fn box_scenario() -> Result<(TriMesh, ScenarioSpec)> {
    let mesh = TriMesh::axis_aligned_box(BOX_SIZE[0], BOX_SIZE[1], BOX_SIZE[2])?;
    let spec = ScenarioSpec {
        mesh_path: None,
        true_pose: Pose::new(0.02, -0.03, 0.01, 0.3, -0.2, 0.4),
        measurements: 15,
        face_subset: Some(vec![0, 1, 2, 3, 4, 5, 6, 7, 10, 11]),
        noise_sigma: 0.0,
        seed: 0,
        symmetries: box_symmetries(),
    };
    Ok((mesh, spec))
}

/// Half turns about each axis: the rotations that map a centred box with
/// distinct side lengths onto itself.
pub fn box_symmetries() -> Vec<Pose> {
    use std::f64::consts::PI;
    vec![
        Pose::new(0.0, 0.0, 0.0, PI, 0.0, 0.0),
        Pose::new(0.0, 0.0, 0.0, 0.0, PI, 0.0),
        Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, PI),
    ]
}

/// Seed for trial `i` of a batch: `seed + i`. The scenario and the filter
/// share it; they draw from disjoint RNG streams.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// Options that do not affect the filter itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub thresholds: SuccessThresholds,
    /// Record wall-clock time. Off when reports must be byte-reproducible.
    pub timed: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            thresholds: SuccessThresholds::default(),
            timed: true,
        }
    }
}

/// Filters one measurement sequence and scores it.
pub fn run_trial(
    mesh: Arc<TriMesh>,
    measurements: &[Point3<f64>],
    truth: Option<Pose>,
    symmetries: &[Pose],
    config: &FilterConfig,
    options: &RunOptions,
) -> Result<(TrialReport, RunTrace)> {
    config.validate()?;
    let model = ProximityModel::new(mesh, config.likelihood_sigma())?;
    let start = Instant::now();
    let trace = run(measurements, &model, config)?;
    let elapsed = options.timed.then(|| start.elapsed().as_secs_f64());
    let mut report = TrialReport::new(
        trace.final_estimate().pose,
        trace.index_trace.clone(),
        truth,
        elapsed,
        config.seed,
        &options.thresholds,
        symmetries,
    );
    report.degenerate_steps = trace
        .diagnostics
        .iter()
        .filter(|d| d.degenerate)
        .map(|d| d.t)
        .collect();
    Ok((report, trace))
}

/// Simulates and filters `trials` independent trials of one scenario. Trial
/// `i` uses seed `seed + i` for both its contacts and its particles.
pub fn batch(
    mesh: Arc<TriMesh>,
    scenario: &ScenarioSpec,
    config: &FilterConfig,
    trials: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<TrialReport>> {
    (0..trials)
        .map(|i| {
            let trial = trial_seed(seed, i);
            let spec = ScenarioSpec {
                seed: trial,
                ..scenario.clone()
            };
            let sim = sample_contacts(&spec, &mesh)?;
            let cfg = FilterConfig {
                seed: trial,
                ..config.clone()
            };
            run_trial(
                mesh.clone(),
                &sim.measurements,
                Some(spec.true_pose),
                &spec.symmetries,
                &cfg,
                options,
            )
            .map(|(r, _)| r)
        })
        .collect()
}

/// Runs a batch for each memory length in `memories` on the same contacts.
pub fn sweep_memory(
    mesh: Arc<TriMesh>,
    scenario: &ScenarioSpec,
    config: &FilterConfig,
    memories: impl IntoIterator<Item = usize>,
    trials: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<(SweepRow, BatchSummary)>> {
    memories
        .into_iter()
        .map(|m| {
            let cfg = FilterConfig {
                memory: m,
                ..config.clone()
            };
            let reports = batch(mesh.clone(), scenario, &cfg, trials, seed, options)?;
            let summary = summarize(&reports);
            let row = SweepRow {
                memory: m,
                mean_final_index: summary.mean_final_index,
                successes: summary.successes,
                trials,
            };
            Ok((row, summary))
        })
        .collect()
}
