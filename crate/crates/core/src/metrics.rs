//! Localization quality: the measurement-only performance index, pose error
//! against ground truth, and aggregation over repeated trials.

use nalgebra::{Point3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::config::FilterConfig;
use crate::geometry::{Pose, TriMesh};
use crate::simulate::{ScenarioSpec, SCHEMA_VERSION};

/// Success thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessThresholds {
    /// Position error bound (m) when the truth is known.
    pub position: f64,
    /// Orientation error bound (rad) when the truth is known.
    pub orientation: f64,
    /// Performance index bound (m) when it is not.
    pub index: f64,
}

impl Default for SuccessThresholds {
    fn default() -> Self {
        Self {
            position: 0.02,
            orientation: 10f64.to_radians(),
            index: 0.01,
        }
    }
}

/// Mean distance of the measurements to the mesh posed at `estimate`.
pub fn performance_index(measurements: &[Point3<f64>], estimate: &Pose, mesh: &TriMesh) -> f64 {
    assert!(
        !measurements.is_empty(),
        "performance index needs measurements"
    );
    measurements
        .iter()
        .map(|y| mesh.closest_point(&estimate.to_object(y)).distance)
        .sum::<f64>()
        / measurements.len() as f64
}

/// `(translation distance, geodesic rotation angle)` between two poses.
pub fn pose_error(estimate: &Pose, truth: &Pose) -> (f64, f64) {
    let position = (estimate.translation() - truth.translation()).norm();
    let relative = estimate.rotation() * truth.rotation().transpose();
    let cos = ((relative.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    (position, cos.acos())
}

/// Pose error up to object symmetries. Each symmetry is a rigid motion in
/// the object frame that maps the mesh onto itself, so `estimate ∘ s` puts
/// the same surface in the same place. Returns the error of the closest
/// equivalent pose (smallest orientation error, then position error).
pub fn pose_error_modulo(estimate: &Pose, truth: &Pose, symmetries: &[Pose]) -> (f64, f64) {
    let r = estimate.rotation();
    let t = estimate.translation();
    symmetries
        .iter()
        .map(|s| {
            let rot = r * s.rotation();
            let (phi, theta, psi) = crate::geometry::euler_from_rotation(&rot);
            let tr = r * s.translation() + t;
            pose_error(&Pose::new(tr.x, tr.y, tr.z, phi, theta, psi), truth)
        })
        .fold(pose_error(estimate, truth), |best, e| {
            if (e.1, e.0) < (best.1, best.0) {
                e
            } else {
                best
            }
        })
}

/// Rotation angle between two poses computed through unit quaternions.
pub fn quaternion_angle(a: &Pose, b: &Pose) -> f64 {
    let qa = UnitQuaternion::from_euler_angles(a.phi, a.theta, a.psi);
    let qb = UnitQuaternion::from_euler_angles(b.phi, b.theta, b.psi);
    qa.angle_to(&qb)
}

/// Per-trial outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    /// Final MAP pose, angles canonicalized.
    pub estimate: Pose,
    pub index_trace: Vec<f64>,
    pub final_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_error: Option<f64>,
    /// Wall-clock filtering time (s); `None` when timing is suppressed.
    pub elapsed: Option<f64>,
    pub success: bool,
    pub seed: u64,
    /// Steps at which all weights vanished and were reset.
    #[serde(default)]
    pub degenerate_steps: Vec<usize>,
}

impl TrialReport {
    pub fn new(
        estimate: Pose,
        index_trace: Vec<f64>,
        truth: Option<Pose>,
        elapsed: Option<f64>,
        seed: u64,
        thresholds: &SuccessThresholds,
        symmetries: &[Pose],
    ) -> Self {
        let final_index = *index_trace.last().expect("non-empty index trace");
        let errors = truth.map(|t| pose_error_modulo(&estimate, &t, symmetries));
        let mut report = Self {
            estimate: estimate.canonical(),
            index_trace,
            final_index,
            truth: truth.map(|t| t.canonical()),
            position_error: errors.map(|e| e.0),
            orientation_error: errors.map(|e| e.1),
            elapsed,
            success: false,
            seed,
            degenerate_steps: Vec::new(),
        };
        report.success = success_test(&report, thresholds, truth.as_ref(), symmetries);
        report
    }
}

/// With ground truth: both pose errors under threshold. Without: the final
/// performance index under threshold. The index-only criterion cannot tell a
/// wrong pose that happens to fit the measurements from the right one.
pub fn success_test(
    report: &TrialReport,
    thresholds: &SuccessThresholds,
    truth: Option<&Pose>,
    symmetries: &[Pose],
) -> bool {
    match truth {
        Some(t) => {
            let (p, o) = pose_error_modulo(&report.estimate, t, symmetries);
            p < thresholds.position && o < thresholds.orientation
        }
        None => report.final_index < thresholds.index,
    }
}

/// Aggregate over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub mean_final_index: f64,
    pub median_final_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_position_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_orientation_error: Option<f64>,
    pub mean_elapsed: Option<f64>,
    pub max_elapsed: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn summarize(reports: &[TrialReport]) -> BatchSummary {
    assert!(!reports.is_empty(), "summary needs at least one trial");
    let finals: Vec<f64> = reports.iter().map(|r| r.final_index).collect();
    let successes = reports.iter().filter(|r| r.success).count();
    let collect = |f: fn(&TrialReport) -> Option<f64>| -> Option<Vec<f64>> {
        reports.iter().map(f).collect()
    };
    let elapsed = collect(|r| r.elapsed);
    BatchSummary {
        trials: reports.len(),
        successes,
        success_fraction: successes as f64 / reports.len() as f64,
        mean_final_index: mean(&finals),
        median_final_index: median(&finals),
        mean_position_error: collect(|r| r.position_error).map(|v| mean(&v)),
        mean_orientation_error: collect(|r| r.orientation_error).map(|v| mean(&v)),
        mean_elapsed: elapsed.as_ref().map(|v| mean(v)),
        max_elapsed: elapsed.map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max)),
    }
}

/// One row of a memory-window sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub memory: usize,
    pub mean_final_index: f64,
    pub successes: usize,
    pub trials: usize,
}

/// Resolved settings recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub schema_version: u32,
    pub config: FilterConfig,
    /// Likelihood standard deviation (m) after applying `sigma_p_means`.
    pub likelihood_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    pub seed: u64,
}

impl ReportHeader {
    pub fn new(config: &FilterConfig, scenario: Option<&ScenarioSpec>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            likelihood_sigma: config.likelihood_sigma(),
            scenario: scenario.cloned(),
            seed,
        }
    }
}

/// Output of a single localization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub report: TrialReport,
}

/// Output of a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub summary: BatchSummary,
    pub trials: Vec<TrialReport>,
}

/// Output of a memory-window sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub trials: usize,
    pub rows: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub memory: usize,
    pub summary: BatchSummary,
}

/// `t,index` CSV for one trial.
pub fn index_trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("t,index\n");
    for (t, v) in trace.iter().enumerate() {
        s.push_str(&format!("{},{}\n", t + 1, v));
    }
    s
}

/// `m,mean_index,successes,trials` CSV for a sweep.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("m,mean_index,successes,trials\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.memory, r.mean_final_index, r.successes, r.trials
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identical_poses_have_zero_error() {
        let p = Pose::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
        let (a, b) = pose_error(&p, &p);
        assert_eq!(a, 0.0);
        assert!(b < 1e-7);
    }

    #[test]
    fn quarter_turn_yaw() {
        let (p, o) = pose_error(
            &Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2),
            &Pose::default(),
        );
        assert_eq!(p, 0.0);
        assert!((o - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn index_on_surface_and_at_distance() {
        let mesh = TriMesh::axis_aligned_box(1.0, 1.0, 1.0).unwrap();
        let pose = Pose::new(0.3, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(performance_index(&[Point3::new(0.8, 0.1, 0.2)], &pose, &mesh) < 1e-15);
        let d = performance_index(&[Point3::new(1.05, 0.0, 0.0)], &pose, &mesh);
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn symmetric_flip_has_zero_error_modulo_symmetry() {
        use std::f64::consts::PI;
        let truth = Pose::new(0.02, -0.03, 0.01, 0.3, -0.2, 0.4);
        let flip = Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, PI);
        let r = truth.rotation() * flip.rotation();
        let (phi, theta, psi) = crate::geometry::euler_from_rotation(&r);
        let flipped = Pose::new(truth.x, truth.y, truth.z, phi, theta, psi);
        let (_, o) = pose_error(&flipped, &truth);
        assert!((o - PI).abs() < 1e-6);
        let (p, o) = pose_error_modulo(&flipped, &truth, &[flip]);
        assert!(p < 1e-12 && o < 1e-6);
        // the flipped box covers the same surface
        let mesh = TriMesh::axis_aligned_box(0.1, 0.3, 0.2).unwrap();
        let ys: Vec<Point3<f64>> = (0..12)
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                truth.to_world(&Point3::from((a.coords + b.coords + c.coords) / 3.0))
            })
            .collect();
        assert!(performance_index(&ys, &flipped, &mesh) < 1e-12);
    }

    #[test]
    fn success_modes() {
        let th = SuccessThresholds::default();
        let truth = Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let ok = TrialReport::new(truth, vec![0.001], Some(truth), None, 0, &th, &[]);
        assert!(ok.success);
        let far = TrialReport::new(
            Pose::new(0.2, 0.0, 0.0, 0.0, 0.0, 0.0),
            vec![0.001],
            Some(truth),
            None,
            0,
            &th,
            &[],
        );
        assert!(!far.success);
        // Without truth, a wrong pose with a low index still counts as success.
        let wrong = TrialReport::new(
            Pose::new(0.0, 0.0, 0.0, 3.0, 0.0, 0.0),
            vec![0.002],
            None,
            None,
            0,
            &th,
            &[],
        );
        assert!(wrong.success);
        let high = TrialReport::new(truth, vec![0.05], None, None, 0, &th, &[]);
        assert!(!high.success);
    }

    #[test]
    fn summary_of_one_trial_mirrors_it() {
        let th = SuccessThresholds::default();
        let r = TrialReport::new(
            Pose::default(),
            vec![0.01, 0.003],
            Some(Pose::default()),
            Some(1.5),
            4,
            &th,
            &[],
        );
        let s = summarize(std::slice::from_ref(&r));
        assert_eq!(s.trials, 1);
        assert_eq!(s.successes, 1);
        assert_eq!(s.mean_final_index, r.final_index);
        assert_eq!(s.median_final_index, r.final_index);
        assert_eq!(s.mean_elapsed, Some(1.5));
        assert_eq!(s.max_elapsed, Some(1.5));
        assert_eq!(s.mean_position_error, r.position_error);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn geodesic_matches_quaternion_and_is_symmetric(
            a in prop::array::uniform3(-4.0..4.0f64),
            b in prop::array::uniform3(-4.0..4.0f64),
        ) {
            let pa = Pose::new(0.0, 0.0, 0.0, a[0], a[1], a[2]);
            let pb = Pose::new(0.0, 0.0, 0.0, b[0], b[1], b[2]);
            let (_, o) = pose_error(&pa, &pb);
            let (_, o2) = pose_error(&pb, &pa);
            let q = quaternion_angle(&pa, &pb);
            // arccos is ill-conditioned near 0 and pi
            prop_assume!(o > 1e-4 && o < std::f64::consts::PI - 1e-4);
            prop_assert!((o - q).abs() < 1e-9, "{} vs {}", o, q);
            prop_assert!((o - o2).abs() < 1e-12);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&o));
        }

        #[test]
        fn index_invariant_under_common_rigid_motion(
            g in prop::array::uniform6(-1.0..1.0f64),
            e in prop::array::uniform6(-0.5..0.5f64),
            pts in prop::collection::vec(prop::array::uniform3(-0.3..0.3f64), 1..8),
        ) {
            let mesh = TriMesh::axis_aligned_box(0.1, 0.3, 0.2).unwrap();
            let motion = Pose::new(g[0], g[1], g[2], g[3], g[4], g[5]);
            let est = Pose::new(e[0], e[1], e[2], e[3], e[4], e[5]);
            let ys: Vec<Point3<f64>> = pts.iter().map(|p| Point3::from(*p)).collect();
            let moved: Vec<Point3<f64>> = ys.iter().map(|y| motion.to_world(y)).collect();
            let r = motion.rotation() * est.rotation();
            let (phi, theta, psi) = crate::geometry::euler_from_rotation(&r);
            let t = motion.rotation() * est.translation() + motion.translation();
            let moved_est = Pose::new(t.x, t.y, t.z, phi, theta, psi);
            let a = performance_index(&ys, &est, &mesh);
            let b = performance_index(&moved, &moved_est, &mesh);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
