//! Plain unscented particle filter: current-measurement weights with the
//! random-walk transition density, resampling every step.
//!
//! Kept as the reference the memory filter reduces to when `m = 1` and
//! `t0 = 0` with the transition density enabled.

use nalgebra::Point3;

use crate::config::FilterConfig;
use crate::error::{Error, Result};
use crate::filter::{ukf_step, ContactModel, Particle};
use crate::gaussian::Gaussian;
use crate::mupf::{normalize_log_weights, resample_indices, stream_rng};

const RESAMPLE_STREAM: u64 = u32::MAX as u64;

#[derive(Debug, Clone)]
pub struct UpfState {
    pub particles: Vec<Particle>,
    /// Normalized weights before the last resampling.
    pub last_weights: Vec<f64>,
    pub t: usize,
}

/// Same prior draw as [`crate::mupf::init`].
pub fn upf_init(config: &FilterConfig) -> Result<UpfState> {
    let s = crate::mupf::init(config)?;
    Ok(UpfState {
        particles: s.particles,
        last_weights: Vec::new(),
        t: 0,
    })
}

pub fn upf_step<M: ContactModel + ?Sized>(
    state: &mut UpfState,
    y: &Point3<f64>,
    model: &M,
    config: &FilterConfig,
) -> Result<()> {
    let t = state.t + 1;
    let n = state.particles.len();
    let q = config.process_noise.0;
    let r = config.measurement_cov();

    let mut sampled = Vec::with_capacity(n);
    let mut covs = Vec::with_capacity(n);
    let mut log_w = Vec::with_capacity(n);
    for (i, particle) in state.particles.iter().enumerate() {
        let ukf = ukf_step(particle, y, model, &q, &r, &config.sut)?;
        let proposal = Gaussian::new(ukf.mean, &ukf.cov);
        let mut rng = stream_rng(config.seed, t, i as u64);
        let x = proposal.sample(&mut rng);
        let log_q = proposal.log_pdf(&x);
        let likelihood = model.log_likelihood(y, &x);
        let transition = Gaussian::new(ukf.predicted_mean, &q).log_pdf(&x);
        log_w.push(particle.weight.ln() + likelihood + transition - log_q);
        sampled.push(x);
        covs.push(ukf.cov);
    }

    let weights = normalize_log_weights(&log_w).ok_or(Error::DegenerateWeights { step: t })?;
    let mut rng = stream_rng(config.seed, t, RESAMPLE_STREAM);
    let uniform = 1.0 / n as f64;
    state.particles = resample_indices(&weights, n, config.resampling, &mut rng)
        .into_iter()
        .map(|j| Particle {
            weight: uniform,
            mean: sampled[j],
            cov: covs[j],
            sampled: sampled[j],
        })
        .collect();
    state.last_weights = weights;
    state.t = t;
    Ok(())
}
