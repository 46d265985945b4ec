//! Filter configuration and the two reference parameter profiles.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector6};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::unscented::SutParams;

/// 6x6 covariance that reads and writes as a diagonal `[f64; 6]` when it is
/// diagonal, or as six rows otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cov6(pub Matrix6<f64>);

impl Cov6 {
    pub fn diagonal(d: [f64; 6]) -> Self {
        Self(Matrix6::from_diagonal(&Vector6::from(d)))
    }

    fn is_diagonal(&self) -> bool {
        (0..6).all(|i| (0..6).all(|j| i == j || self.0[(i, j)] == 0.0))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)] // transient, only lives during (de)serialization
enum CovRepr {
    Diagonal([f64; 6]),
    Full([[f64; 6]; 6]),
}

impl Serialize for Cov6 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_diagonal() {
            let d = self.0.diagonal();
            CovRepr::Diagonal([d[0], d[1], d[2], d[3], d[4], d[5]]).serialize(s)
        } else {
            let rows = std::array::from_fn(|i| std::array::from_fn(|j| self.0[(i, j)]));
            CovRepr::Full(rows).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Cov6 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match CovRepr::deserialize(d)? {
            CovRepr::Diagonal(v) => Cov6::diagonal(v),
            CovRepr::Full(rows) => Cov6(Matrix6::from_fn(|i, j| rows[i][j])),
        })
    }
}

/// How the configured `sigma_p` value is read.
///
/// The profiles' `sigma_p = 1e-4` gives a 1 cm likelihood width only when it
/// is read as a variance, which is the default. `StdDev` takes it as meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPInterpretation {
    StdDev,
    #[default]
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingScheme {
    #[default]
    Multinomial,
    Systematic,
}

fn default_true() -> bool {
    true
}

fn default_t0() -> usize {
    2
}

/// All tunables of the memory unscented particle filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// Number of particles N.
    pub particles: usize,
    /// Memory window length m.
    pub memory: usize,
    /// Artificial random-walk covariance Q.
    pub process_noise: Cov6,
    /// Prior covariance P0.
    pub initial_cov: Cov6,
    /// Prior centre x0.
    #[serde(default)]
    pub initial_pose: Pose,
    /// Likelihood scale, read according to `sigma_p_means`.
    pub sigma_p: f64,
    #[serde(default)]
    pub sigma_p_means: SigmaPInterpretation,
    /// Diagonal of the UKF measurement-noise covariance R. Defaults to
    /// `sigma^2 I` with the likelihood sigma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_noise: Option<[f64; 3]>,
    pub sut: SutParams,
    /// Resampling is skipped for steps `t <= resample_delay` (t0).
    #[serde(default = "default_t0")]
    pub resample_delay: usize,
    #[serde(default)]
    pub resampling: ResamplingScheme,
    /// Draw the initial particles from N(x0, P0 / m), i.e. a prior raised to
    /// the power m, so the extracted MAP matches the true posterior's.
    #[serde(default = "default_true")]
    pub prior_exponent: bool,
    /// Include the random-walk transition density in the importance weight
    /// (the plain UPF weight). Off by default: the memory weight omits it.
    #[serde(default)]
    pub transition_density: bool,
    #[serde(default)]
    pub seed: u64,
    /// Fan per-particle work out to the rayon pool. Results do not depend on
    /// it, so it is an execution setting and is left out of serialized reports.
    #[serde(default = "default_true", skip_serializing)]
    pub parallel: bool,
    /// Return an error instead of resetting to uniform weights when every
    /// importance weight vanishes.
    #[serde(default)]
    pub fail_on_degenerate: bool,
}

impl FilterConfig {
    /// Parameter set used for the simulated desk-scale trials (N = 700, m = 10).
    pub fn simulation_profile() -> Self {
        use std::f64::consts::PI;
        Self {
            particles: 700,
            memory: 10,
            process_noise: Cov6::diagonal([1e-5, 1e-5, 1e-5, 1e-4, 1e-4, 1e-4]),
            initial_cov: Cov6::diagonal([0.04, 0.04, 0.04, PI * PI, PI * PI / 4.0, PI * PI]),
            initial_pose: Pose::default(),
            sigma_p: 1e-4,
            sigma_p_means: SigmaPInterpretation::Variance,
            measurement_noise: None,
            sut: SutParams::default(),
            resample_delay: 2,
            resampling: ResamplingScheme::Multinomial,
            prior_exponent: true,
            transition_density: false,
            seed: 0,
            parallel: true,
            fail_on_degenerate: false,
        }
    }

    /// Parameter set for real tactile measurements (N = 1200, larger angular Q,
    /// sigma_p = 4e-4).
    pub fn experimental_profile() -> Self {
        Self {
            particles: 1200,
            process_noise: Cov6::diagonal([1e-5, 1e-5, 1e-5, 1e-3, 1e-3, 1e-3]),
            sigma_p: 4e-4,
            ..Self::simulation_profile()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidConfig("particles must be >= 1".into()));
        }
        if self.memory == 0 {
            return Err(Error::InvalidConfig("memory must be >= 1".into()));
        }
        if !(self.sigma_p.is_finite() && self.sigma_p > 0.0) {
            return Err(Error::InvalidConfig("sigma_p must be > 0".into()));
        }
        if !self.initial_pose.is_finite() {
            return Err(Error::InvalidConfig("initial_pose must be finite".into()));
        }
        check_psd("process_noise", &self.process_noise.0)?;
        check_psd("initial_cov", &self.initial_cov.0)?;
        if let Some(r) = self.measurement_noise {
            if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig(
                    "measurement_noise must be >= 0".into(),
                ));
            }
        }
        self.sut.validate(6)
    }

    /// Likelihood standard deviation in meters.
    pub fn likelihood_sigma(&self) -> f64 {
        match self.sigma_p_means {
            SigmaPInterpretation::StdDev => self.sigma_p,
            SigmaPInterpretation::Variance => self.sigma_p.sqrt(),
        }
    }

    /// UKF measurement-noise covariance R.
    pub fn measurement_cov(&self) -> Matrix3<f64> {
        match self.measurement_noise {
            Some(d) => Matrix3::from_diagonal(&d.into()),
            None => {
                let s = self.likelihood_sigma();
                Matrix3::identity() * (s * s)
            }
        }
    }

    /// Covariance the initial particles are drawn with.
    pub fn prior_cov(&self) -> Matrix6<f64> {
        if self.prior_exponent {
            self.initial_cov.0 / self.memory as f64
        } else {
            self.initial_cov.0
        }
    }
}

fn check_psd(name: &str, m: &Matrix6<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("{name} must be finite")));
    }
    if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidConfig(format!("{name} must be symmetric")));
    }
    if SymmetricEigen::new(*m).eigenvalues.min() < -1e-12 {
        return Err(Error::InvalidConfig(format!(
            "{name} must be positive semidefinite"
        )));
    }
    Ok(())
}
