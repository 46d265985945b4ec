//! Multivariate normal sampling and log-density through a symmetric
//! eigendecomposition, so semidefinite covariances are handled uniformly.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalues below this are floored when evaluating the density.
pub const DENSITY_EIGEN_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone)]
pub struct Gaussian<const N: usize> {
    mean: SVector<f64, N>,
    /// Columns are eigenvectors.
    basis: SMatrix<f64, N, N>,
    /// sqrt(max(lambda, 0)) per eigenvector, for sampling.
    sample_scale: SVector<f64, N>,
    /// 1 / max(lambda, floor), for the density.
    inv_eigen: SVector<f64, N>,
    log_norm: f64,
}

impl<const N: usize> Gaussian<N> {
    pub fn new(mean: SVector<f64, N>, cov: &SMatrix<f64, N, N>) -> Self {
        let sym = (cov + cov.transpose()) * 0.5;
        // const-generic eigendecomposition needs DimSub bounds; go through Dyn
        let eig = SymmetricEigen::new(DMatrix::from_iterator(N, N, sym.iter().copied()));
        let values = SVector::<f64, N>::from_iterator(eig.eigenvalues.iter().copied());
        let sample_scale = values.map(|l| l.max(0.0).sqrt());
        let floored = values.map(|l| l.max(DENSITY_EIGEN_FLOOR));
        let log_det: f64 = floored.iter().map(|l| l.ln()).sum();
        Self {
            mean,
            basis: SMatrix::<f64, N, N>::from_iterator(eig.eigenvectors.iter().copied()),
            sample_scale,
            inv_eigen: floored.map(|l| 1.0 / l),
            log_norm: -0.5 * (N as f64 * LN_2PI + log_det),
        }
    }

    pub fn mean(&self) -> &SVector<f64, N> {
        &self.mean
    }

    /// `mean + V diag(sqrt(lambda)) z` for a standard normal `z`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SVector<f64, N> {
        let z = SVector::<f64, N>::from_fn(|_, _| rng.sample(StandardNormal));
        self.mean + self.basis * self.sample_scale.component_mul(&z)
    }

    pub fn log_pdf(&self, x: &SVector<f64, N>) -> f64 {
        let proj = self.basis.transpose() * (x - self.mean);
        let maha: f64 = proj
            .iter()
            .zip(self.inv_eigen.iter())
            .map(|(p, il)| p * p * il)
            .sum();
        self.log_norm - 0.5 * maha
    }
}
