//! The memory unscented particle filter.
//!
//! Each step runs a UKF predict/correct on every particle, draws a new state
//! from the corrected Gaussian, and weighs it by the likelihood of the last
//! `m` measurements divided by the proposal density. Resampling is skipped
//! for the first `t0` steps. A separate set of extraction weights raises the
//! windowed likelihoods to the complementary powers `m - t + k - 1`, so that
//! every measurement contributes with exponent `m` to the mixture density the
//! MAP pose is read from.
//!
//! Randomness comes from ChaCha streams keyed by `(seed, t, particle)`, so
//! parallel and serial execution produce identical bits.

use std::collections::VecDeque;

use log::warn;
use nalgebra::{Matrix6, Point3, Vector6};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FilterConfig, ResamplingScheme};
use crate::error::{Error, Result};
use crate::filter::{ukf_step, ContactModel, Particle};
use crate::gaussian::Gaussian;
use crate::geometry::Pose;

const RESAMPLE_STREAM: u64 = u32::MAX as u64;

/// Independent RNG stream for step `t`, particle `i`.
pub(crate) fn stream_rng(seed: u64, t: usize, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 32) | (i & 0xffff_ffff));
    rng
}

/// Pre-resampling quantities of the most recent step, kept for pose extraction.
#[derive(Debug, Clone)]
pub struct ProposalSnapshot {
    /// Drawn states x̂.
    pub sampled: Vec<Vector6<f64>>,
    /// Corrected UKF means x̄.
    pub corrected_mean: Vec<Vector6<f64>>,
    /// Corrected covariances P_t|t.
    pub cov: Vec<Matrix6<f64>>,
    /// log N(x̂; x̄, P).
    pub log_proposal: Vec<f64>,
    /// Normalized propagated weights w̃_t.
    pub weights: Vec<f64>,
    /// `window_log_likelihood[i][j]` is log l(y_k | x̂_i) for `k = window_start + j`.
    pub window_log_likelihood: Vec<Vec<f64>>,
    /// First measurement index (1-based) in the window.
    pub window_start: usize,
}

/// Particle population plus measurement memory.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub particles: Vec<Particle>,
    history: VecDeque<Point3<f64>>,
    memory: usize,
    t: usize,
    snapshot: Option<ProposalSnapshot>,
    /// Times each measurement (index k-1) has entered a propagated weight update.
    usage: Vec<u32>,
}

impl FilterState {
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &Point3<f64>> {
        self.history.iter()
    }

    pub fn snapshot(&self) -> Option<&ProposalSnapshot> {
        self.snapshot.as_ref()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Exponent bookkeeping for the current time.
    pub fn exponent_audit(&self, config: &FilterConfig) -> ExponentAudit {
        let t = self.t;
        let m = config.memory;
        let window_start = self.snapshot.as_ref().map_or(1, |s| s.window_start);
        let extraction = (1..=t)
            .map(|k| {
                if k >= window_start {
                    (m + k - 1 - t) as u32
                } else {
                    0
                }
            })
            .collect();
        ExponentAudit {
            propagated: self.usage.clone(),
            extraction,
            prior: if config.prior_exponent { m as u32 } else { 1 },
        }
    }
}

/// How many times each measurement's likelihood has been multiplied into the
/// particle weights, and how many more times the extraction weights apply it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentAudit {
    pub propagated: Vec<u32>,
    pub extraction: Vec<u32>,
    /// Power the prior density is raised to by the initial sampling covariance.
    pub prior: u32,
}

impl ExponentAudit {
    pub fn totals(&self) -> Vec<u32> {
        self.propagated
            .iter()
            .zip(&self.extraction)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: usize,
    pub window_start: usize,
    pub resampled: bool,
    /// All weights vanished and were reset to uniform.
    pub degenerate: bool,
    pub effective_sample_size: f64,
    pub likelihood_evaluations: usize,
}

/// MAP pose read from the extraction-weighted mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose,
    pub particle_index: usize,
    /// log of the mixture density at the chosen particle.
    pub map_score: f64,
    pub extraction_weights: Vec<f64>,
}

/// Draws the initial population from N(x0, P0), or N(x0, P0/m) with the prior
/// exponent enabled. Each particle carries that covariance and weight 1/N.
pub fn init(config: &FilterConfig) -> Result<FilterState> {
    config.validate()?;
    let n = config.particles;
    let prior = Gaussian::new(config.initial_pose.to_vector(), &config.prior_cov());
    let cov = config.prior_cov();
    let particles = (0..n)
        .map(|i| {
            let mut rng = stream_rng(config.seed, 0, i as u64);
            let x = prior.sample(&mut rng);
            Particle {
                weight: 1.0 / n as f64,
                mean: x,
                cov,
                sampled: x,
            }
        })
        .collect();
    Ok(FilterState {
        particles,
        history: VecDeque::with_capacity(config.memory),
        memory: config.memory,
        t: 0,
        snapshot: None,
        usage: Vec::new(),
    })
}

/// Result of the per-particle part of a step.
struct ParticleUpdate {
    corrected_mean: Vector6<f64>,
    cov: Matrix6<f64>,
    sampled: Vector6<f64>,
    log_proposal: f64,
    log_likelihoods: Vec<f64>,
    log_weight: f64,
}

/// Turns log-weights into linear weights summing to one, or `None` if every
/// weight is zero or undefined.
pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Option<Vec<f64>> {
    let max = log_w
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let lin: Vec<f64> = log_w
        .iter()
        .map(|&v| if v.is_nan() { 0.0 } else { (v - max).exp() })
        .collect();
    let sum: f64 = lin.iter().sum();
    Some(lin.into_iter().map(|w| w / sum).collect())
}

/// Draws `n` ancestor indices with probabilities `weights`.
pub fn resample_indices<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    scheme: ResamplingScheme,
    rng: &mut R,
) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    let pick = |u: f64| -> usize {
        let target = u * total;
        cdf.partition_point(|&c| c <= target).min(weights.len() - 1)
    };
    match scheme {
        ResamplingScheme::Multinomial => (0..n).map(|_| pick(rng.random::<f64>())).collect(),
        ResamplingScheme::Systematic => {
            let u0: f64 = rng.random::<f64>() / n as f64;
            (0..n).map(|i| pick(u0 + i as f64 / n as f64)).collect()
        }
    }
}

/// One filter iteration on measurement `y`.
pub fn step<M: ContactModel + ?Sized>(
    state: &mut FilterState,
    y: &Point3<f64>,
    model: &M,
    config: &FilterConfig,
) -> Result<StepDiagnostics> {
    let n = state.particles.len();
    let t = state.t + 1;
    if state.history.len() == state.memory {
        state.history.pop_front();
    }
    state.history.push_back(*y);
    let window: Vec<Point3<f64>> = state.history.iter().copied().collect();
    let window_start = t + 1 - window.len();

    let q = config.process_noise.0;
    let r = config.measurement_cov();
    let sut = config.sut;

    let update = |i: usize| -> Result<ParticleUpdate> {
        let particle = &state.particles[i];
        let ukf = ukf_step(particle, y, model, &q, &r, &sut)?;
        let proposal = Gaussian::new(ukf.mean, &ukf.cov);
        let mut rng = stream_rng(config.seed, t, i as u64);
        let sampled = proposal.sample(&mut rng);
        let log_proposal = proposal.log_pdf(&sampled);
        let log_likelihoods: Vec<f64> = window
            .iter()
            .map(|yk| model.log_likelihood(yk, &sampled))
            .collect();
        let mut log_weight = particle.weight.ln() + log_likelihoods.iter().sum::<f64>();
        if config.transition_density {
            log_weight += Gaussian::new(ukf.predicted_mean, &q).log_pdf(&sampled);
        }
        log_weight -= log_proposal;
        Ok(ParticleUpdate {
            corrected_mean: ukf.mean,
            cov: ukf.cov,
            sampled,
            log_proposal,
            log_likelihoods,
            log_weight,
        })
    };

    let updates: Vec<ParticleUpdate> = if config.parallel {
        (0..n).into_par_iter().map(update).collect::<Result<_>>()?
    } else {
        (0..n).map(update).collect::<Result<_>>()?
    };

    let log_w: Vec<f64> = updates.iter().map(|u| u.log_weight).collect();
    let (weights, degenerate) = match normalize_log_weights(&log_w) {
        Some(w) => (w, false),
        None => {
            if config.fail_on_degenerate {
                return Err(Error::DegenerateWeights { step: t });
            }
            warn!("step {t}: all importance weights vanished; resetting to uniform");
            (vec![1.0 / n as f64; n], true)
        }
    };
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let mut snapshot = ProposalSnapshot {
        sampled: Vec::with_capacity(n),
        corrected_mean: Vec::with_capacity(n),
        cov: Vec::with_capacity(n),
        log_proposal: Vec::with_capacity(n),
        weights,
        window_log_likelihood: Vec::with_capacity(n),
        window_start,
    };
    for u in updates {
        snapshot.sampled.push(u.sampled);
        snapshot.corrected_mean.push(u.corrected_mean);
        snapshot.cov.push(u.cov);
        snapshot.log_proposal.push(u.log_proposal);
        snapshot.window_log_likelihood.push(u.log_likelihoods);
    }

    let uniform = 1.0 / n as f64;
    let resampled = t > config.resample_delay;
    state.particles = if resampled {
        let mut rng = stream_rng(config.seed, t, RESAMPLE_STREAM);
        resample_indices(&snapshot.weights, n, config.resampling, &mut rng)
            .into_iter()
            .map(|j| Particle {
                weight: uniform,
                mean: snapshot.sampled[j],
                cov: snapshot.cov[j],
                sampled: snapshot.sampled[j],
            })
            .collect()
    } else {
        (0..n)
            .map(|i| Particle {
                weight: uniform,
                mean: snapshot.sampled[i],
                cov: snapshot.cov[i],
                sampled: snapshot.sampled[i],
            })
            .collect()
    };

    state.usage.push(0);
    for k in window_start..=t {
        state.usage[k - 1] += 1;
    }
    state.t = t;
    state.snapshot = Some(snapshot);

    Ok(StepDiagnostics {
        t,
        window_start,
        resampled,
        degenerate,
        effective_sample_size: ess,
        likelihood_evaluations: n * window.len(),
    })
}

/// Log extraction weights: log w̃ + sum_k (m - t + k - 1) log l(y_k | x̂) - log q.
pub fn extraction_log_weights(snapshot: &ProposalSnapshot, t: usize, memory: usize) -> Vec<f64> {
    snapshot
        .weights
        .iter()
        .zip(&snapshot.window_log_likelihood)
        .zip(&snapshot.log_proposal)
        .map(|((w, lls), lq)| {
            let powered: f64 = lls
                .iter()
                .enumerate()
                .map(|(j, ll)| {
                    let k = snapshot.window_start + j;
                    let exponent = (memory + k - 1 - t) as f64;
                    if exponent == 0.0 {
                        0.0
                    } else {
                        exponent * ll
                    }
                })
                .sum();
            w.ln() + powered - lq
        })
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Index and log-density of the point among `points` where the mixture
/// `sum_i w_i N(x; points_i, covs_i)` is largest. Ties go to the lowest index.
pub fn mixture_map(
    points: &[Vector6<f64>],
    covs: &[Matrix6<f64>],
    weights: &[f64],
    parallel: bool,
) -> (usize, f64) {
    let components: Vec<(f64, Gaussian<6>)> = (0..points.len())
        .filter(|&i| weights[i] > 0.0)
        .map(|i| (weights[i].ln(), Gaussian::new(points[i], &covs[i])))
        .collect();
    let density = |j: usize| -> f64 {
        log_sum_exp(components.iter().map(|(lw, g)| lw + g.log_pdf(&points[j])))
    };
    let scores: Vec<f64> = if parallel {
        (0..points.len()).into_par_iter().map(density).collect()
    } else {
        (0..points.len()).map(density).collect()
    };
    scores
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bs), (i, s)| {
            if s > bs {
                (i, s)
            } else {
                (bi, bs)
            }
        })
}

/// MAP pose over the sampled particles under the extraction-weighted mixture
/// `sum_i w̄_i N(x; x̂_i, P_i)`. Does not modify the propagated weights.
pub fn extract_pose(state: &FilterState, config: &FilterConfig) -> Result<PoseEstimate> {
    let snap = state.snapshot.as_ref().ok_or(Error::NoMeasurements)?;
    let n = snap.sampled.len();
    let extraction_weights =
        normalize_log_weights(&extraction_log_weights(snap, state.t, config.memory))
            .unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let (best, score) = mixture_map(
        &snap.sampled,
        &snap.cov,
        &extraction_weights,
        config.parallel,
    );
    Ok(PoseEstimate {
        pose: Pose::from_vector(&snap.sampled[best]),
        particle_index: best,
        map_score: score,
        extraction_weights,
    })
}

/// Everything recorded while filtering a measurement sequence.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub estimates: Vec<PoseEstimate>,
    /// Performance index after each step over the measurements seen so far.
    pub index_trace: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: FilterState,
}

impl RunTrace {
    pub fn final_estimate(&self) -> &PoseEstimate {
        self.estimates
            .last()
            .expect("run processes at least one measurement")
    }
}

/// Filters `measurements` in order, extracting a pose and the running
/// performance index after every step.
pub fn run<M: ContactModel + ?Sized>(
    measurements: &[Point3<f64>],
    model: &M,
    config: &FilterConfig,
) -> Result<RunTrace> {
    if measurements.is_empty() {
        return Err(Error::NoMeasurements);
    }
    let mut state = init(config)?;
    let mut estimates = Vec::with_capacity(measurements.len());
    let mut index_trace = Vec::with_capacity(measurements.len());
    let mut diagnostics = Vec::with_capacity(measurements.len());
    for (t, y) in measurements.iter().enumerate() {
        diagnostics.push(step(&mut state, y, model, config)?);
        let estimate = extract_pose(&state, config)?;
        let x = estimate.pose.to_vector();
        let seen = &measurements[..=t];
        let index = seen.iter().map(|y| model.distance(y, &x)).sum::<f64>() / seen.len() as f64;
        index_trace.push(index);
        estimates.push(estimate);
    }
    Ok(RunTrace {
        estimates,
        index_trace,
        diagnostics,
        final_state: state,
    })
}
