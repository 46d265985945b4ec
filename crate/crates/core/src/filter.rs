//! Proximity measurement model and the per-particle unscented Kalman step.
//!
//! A contact measurement `y` is modelled as the point of the posed object
//! surface nearest to `y`, plus isotropic Gaussian noise. The likelihood is
//! therefore a Gaussian in the distance from `y` to the posed surface, and the
//! measurement function used by the UKF maps a pose to that nearest point.
//! The measurement function depends on the observed `y` itself.

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix6, Matrix6x3, Point3, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, TriMesh};
use crate::unscented::{make_sigma_points, propagate, SutParams};

/// Eigenvalues more negative than this trigger PSD repair.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// A weighted Gaussian atom in pose space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub weight: f64,
    pub mean: Vector6<f64>,
    pub cov: Matrix6<f64>,
    /// State drawn from the proposal at the last step.
    pub sampled: Vector6<f64>,
}

/// Anything that can score a contact point against a pose hypothesis and
/// predict where on the object the contact happened.
pub trait ContactModel: Sync {
    /// Distance from `y` to the object surface posed at `x`.
    fn distance(&self, y: &Point3<f64>, x: &Vector6<f64>) -> f64;

    /// Unnormalized log-likelihood of contact `y` for pose vector `x`.
    fn log_likelihood(&self, y: &Point3<f64>, x: &Vector6<f64>) -> f64;

    /// World-frame point of the posed surface that explains `y`.
    fn predict_measurement(&self, y: &Point3<f64>, x: &Vector6<f64>) -> Point3<f64>;
}

/// Gaussian proximity likelihood over a triangle mesh.
#[derive(Debug, Clone)]
pub struct ProximityModel {
    mesh: Arc<TriMesh>,
    sigma_p: f64,
}

impl ProximityModel {
    /// `sigma_p` is the likelihood standard deviation in meters.
    pub fn new(mesh: Arc<TriMesh>, sigma_p: f64) -> Result<Self> {
        if !(sigma_p.is_finite() && sigma_p > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_p must be > 0, got {sigma_p}"
            )));
        }
        Ok(Self { mesh, sigma_p })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }
}

impl ContactModel for ProximityModel {
    fn distance(&self, y: &Point3<f64>, x: &Vector6<f64>) -> f64 {
        let pose = Pose::from_vector(x);
        self.mesh.closest_point(&pose.to_object(y)).distance
    }

    fn log_likelihood(&self, y: &Point3<f64>, x: &Vector6<f64>) -> f64 {
        let d = self.distance(y, x);
        -(d * d) / (2.0 * self.sigma_p * self.sigma_p)
    }

    fn predict_measurement(&self, y: &Point3<f64>, x: &Vector6<f64>) -> Point3<f64> {
        let pose = Pose::from_vector(x);
        let hit = self.mesh.closest_point(&pose.to_object(y));
        pose.to_world(&hit.point)
    }
}

/// Outputs of one predict/correct cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct UkfOutput {
    pub predicted_mean: Vector6<f64>,
    pub predicted_cov: Matrix6<f64>,
    pub predicted_measurement: Vector3<f64>,
    pub innovation_cov: Matrix3<f64>,
    pub cross_cov: Matrix6x3<f64>,
    pub gain: Matrix6x3<f64>,
    /// Corrected mean.
    pub mean: Vector6<f64>,
    /// Corrected covariance, symmetrized and PSD-repaired.
    pub cov: Matrix6<f64>,
}

/// Symmetrizes `m` and floors eigenvalues at zero when any falls below
/// `-PSD_TOLERANCE`.
pub fn repair_psd(m: &Matrix6<f64>) -> Matrix6<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.min() >= -PSD_TOLERANCE {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = eig.eigenvectors;
    let r = v * Matrix6::from_diagonal(&clamped) * v.transpose();
    (r + r.transpose()) * 0.5
}

/// UKF predict/correct for a static state under a random-walk model.
///
/// The time update is the additive shortcut `P + Q` (identity dynamics); the
/// measurement prediction pushes the sigma points of `(mean, P + Q)` through
/// `h`, and the correction is the standard Kalman update with gain
/// `K = Gamma * S^-1`.
pub fn ukf_step_with<H>(
    mean: &Vector6<f64>,
    cov: &Matrix6<f64>,
    y: &Vector3<f64>,
    h: H,
    q: &Matrix6<f64>,
    r: &Matrix3<f64>,
    sut: &SutParams,
) -> Result<UkfOutput>
where
    H: FnMut(&Vector6<f64>) -> Vector3<f64>,
{
    let predicted_mean = *mean;
    let predicted_cov = cov + q;

    let sigma = make_sigma_points(&predicted_mean, &predicted_cov, sut)?;
    let mut h = h;
    let out = propagate(&sigma, |x| Ok::<_, Error>(h(x)))?;
    let innovation_cov = {
        let s = out.cov + r;
        (s + s.transpose()) * 0.5
    };
    let cross_cov = out.cross_cov;

    // K S = Gamma  <=>  S K^T = Gamma^T (S symmetric)
    let kt = match innovation_cov.cholesky() {
        Some(ch) => ch.solve(&cross_cov.transpose()),
        None => innovation_cov
            .lu()
            .solve(&cross_cov.transpose())
            .ok_or(Error::SingularInnovation)?,
    };
    let gain: Matrix6x3<f64> = kt.transpose();
    if gain.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInnovation);
    }

    let corrected_mean = predicted_mean + gain * (y - out.mean);
    let corrected_cov = repair_psd(&(predicted_cov - gain * innovation_cov * gain.transpose()));

    Ok(UkfOutput {
        predicted_mean,
        predicted_cov,
        predicted_measurement: out.mean,
        innovation_cov,
        cross_cov,
        gain,
        mean: corrected_mean,
        cov: corrected_cov,
    })
}

/// [`ukf_step_with`] using the contact model's measurement function.
pub fn ukf_step<M: ContactModel + ?Sized>(
    particle: &Particle,
    y: &Point3<f64>,
    model: &M,
    q: &Matrix6<f64>,
    r: &Matrix3<f64>,
    sut: &SutParams,
) -> Result<UkfOutput> {
    ukf_step_with(
        &particle.mean,
        &particle.cov,
        &y.coords,
        |x| model.predict_measurement(y, x).coords,
        q,
        r,
        sut,
    )
}
