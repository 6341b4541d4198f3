//! Shared fixtures for the criterion benchmarks.

use l1sketch::matrix::DenseMatrix;
use l1sketch::rng::RngStream;

/// Deterministic Gaussian test matrix.
pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let mut rng = RngStream::new(seed, 0);
    DenseMatrix::from_vec(n, d, rng.fill_gaussian(n * d)).expect("dims are consistent")
}
