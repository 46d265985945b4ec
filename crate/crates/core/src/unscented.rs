//! Scaled unscented transformation.
//!
//! `2n + 1` sigma points are placed at the mean and at `mean ± columns of
//! sqrt((n + lambda) * P)`, with `lambda = alpha^2 (n + k) - n`. Means use the
//! `w_mean` weights and (cross-)covariances the `w_cov` weights; the two sets
//! differ only in the central weight, which carries the extra `1 - alpha^2 + beta`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sigma-point scaling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SutParams {
    pub alpha: f64,
    #[serde(alias = "kappa")]
    pub k: f64,
    pub beta: f64,
}

impl Default for SutParams {
    /// alpha = 1, k = 2, beta = 30.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            k: 2.0,
            beta: 30.0,
        }
    }
}

impl SutParams {
    pub fn lambda(&self, n: usize) -> f64 {
        let n = n as f64;
        self.alpha * self.alpha * (n + self.k) - n
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "k must be >= 0, got {}",
                self.k
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be finite".into()));
        }
        if n as f64 + self.lambda(n) <= 0.0 || self.lambda(n).is_nan() {
            return Err(Error::InvalidConfig("n + lambda must be positive".into()));
        }
        Ok(())
    }

    /// `(w_mean, w_cov)` for dimension `n`.
    pub fn weights(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let lambda = self.lambda(n);
        let scale = n as f64 + lambda;
        let wi = 1.0 / (2.0 * scale);
        let mut w_mean = vec![wi; 2 * n + 1];
        let mut w_cov = vec![wi; 2 * n + 1];
        w_mean[0] = lambda / scale;
        w_cov[0] = lambda / scale + (1.0 - self.alpha * self.alpha + self.beta);
        (w_mean, w_cov)
    }
}

/// Deterministic sigma points with their mean and covariance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet<const N: usize> {
    pub points: Vec<SVector<f64, N>>,
    pub w_mean: Vec<f64>,
    pub w_cov: Vec<f64>,
}

impl<const N: usize> SigmaPointSet<N> {
    pub fn mean(&self) -> &SVector<f64, N> {
        &self.points[0]
    }

    /// Weighted mean and covariance of the points themselves.
    pub fn reconstruct(&self) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
        let mean = self
            .points
            .iter()
            .zip(&self.w_mean)
            .fold(SVector::<f64, N>::zeros(), |acc, (p, w)| acc + p * *w);
        let cov = self.points.iter().zip(&self.w_cov).fold(
            SMatrix::<f64, N, N>::zeros(),
            |acc, (p, w)| {
                let d = p - mean;
                acc + d * d.transpose() * *w
            },
        );
        (mean, cov)
    }
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Lower Cholesky factor of `m`, adding diagonal jitter `c * trace / n` for
/// `c = 1e-12, 1e-11, ..., 1e-6` if the plain factorization fails.
pub fn cholesky_with_jitter<const N: usize>(m: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    if m.iter().all(|&v| v == 0.0) {
        return Ok(SMatrix::zeros());
    }
    let sym = (m + m.transpose()) * 0.5;
    if let Some(ch) = sym.cholesky() {
        return Ok(ch.l());
    }
    let base = sym.trace() / N as f64;
    if base.is_nan() || base <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let mut c = JITTER_START;
    while c <= JITTER_MAX * (1.0 + 1e-9) {
        let jittered = sym + SMatrix::<f64, N, N>::identity() * (c * base);
        if let Some(ch) = jittered.cholesky() {
            return Ok(ch.l());
        }
        c *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

/// Sigma points for `N(mean, cov)`.
pub fn make_sigma_points<const N: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    params: &SutParams,
) -> Result<SigmaPointSet<N>> {
    params.validate(N)?;
    let scale = N as f64 + params.lambda(N);
    let root = cholesky_with_jitter(&(cov * scale))?;
    let mut points = Vec::with_capacity(2 * N + 1);
    points.push(*mean);
    for i in 0..N {
        points.push(mean + root.column(i));
    }
    for i in 0..N {
        points.push(mean - root.column(i));
    }
    let (w_mean, w_cov) = params.weights(N);
    Ok(SigmaPointSet {
        points,
        w_mean,
        w_cov,
    })
}

/// Moments of `g(x)` reconstructed from propagated sigma points.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated<const N: usize, const M: usize> {
    pub mean: SVector<f64, M>,
    pub cov: SMatrix<f64, M, M>,
    pub cross_cov: SMatrix<f64, N, M>,
    /// The transformed sigma points.
    pub points: Vec<SVector<f64, M>>,
}

/// Pushes each sigma point through `g` and returns mean, covariance and
/// state-output cross-covariance.
pub fn propagate<const N: usize, const M: usize, G, E>(
    set: &SigmaPointSet<N>,
    mut g: G,
) -> std::result::Result<Propagated<N, M>, E>
where
    G: FnMut(&SVector<f64, N>) -> std::result::Result<SVector<f64, M>, E>,
{
    let points = set
        .points
        .iter()
        .map(&mut g)
        .collect::<std::result::Result<Vec<_>, E>>()?;
    let mean = points
        .iter()
        .zip(&set.w_mean)
        .fold(SVector::<f64, M>::zeros(), |acc, (y, w)| acc + y * *w);
    let x_mean = set.points[0];
    let mut cov = SMatrix::<f64, M, M>::zeros();
    let mut cross_cov = SMatrix::<f64, N, M>::zeros();
    for ((x, y), w) in set.points.iter().zip(&points).zip(&set.w_cov) {
        let dy = y - mean;
        cov += dy * dy.transpose() * *w;
        cross_cov += (x - x_mean) * dy.transpose() * *w;
    }
    Ok(Propagated {
        mean,
        cov,
        cross_cov,
        points,
    })
}
