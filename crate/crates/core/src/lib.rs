//! Randomized sketching for robust linear regression in the l1 and general
//! lp norms.
//!
//! The library is organized around a small set of building blocks:
//!
//! * [`matrix::DenseMatrix`] — row-major dense storage shared by everything.
//! * [`rng::RngStream`] — seeded, stream-addressable randomness so every
//!   randomized construction is reproducible across runs and platforms.
//! * [`sketch`] — the five row-compressing embeddings (dense Cauchy, two fast
//!   Cauchy variants, dense Gaussian, subsampled randomized Hadamard).
//! * [`conditioning`] — well-conditioned basis construction and conditioning
//!   quality metrics (alpha, beta, kappa-bar).
//! * [`ellipsoid`] — Todd's minimum-volume ellipsoid update and 2d-rounding
//!   of centrally symmetric convex bodies from a separation oracle.
//! * [`lp`] — an exact dense weighted least-absolute-deviations solver used
//!   for coreset solves, conditioning LPs, and exact baselines.
//! * [`regression`] — leverage-score estimation, coreset sampling, and the
//!   end-to-end sampling regression pipelines.
//! * [`generators`] — synthetic benchmark matrices and regression instances.

// Lint policy: index-based loops are kept where they mirror the row/column
// index arithmetic of the algorithms, and negated float comparisons such as
// `!(x > 0.0)` are deliberate so that NaN falls into the rejecting branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod conditioning;
pub mod ellipsoid;
pub mod error;
pub mod fwht;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod matrix;
pub mod regression;
pub mod rng;
pub mod sketch;
pub mod stats;
pub mod tailcheck;

pub use conditioning::{ConditionedBasis, ConditioningReport};
pub use ellipsoid::{Ellipsoid, SeparationOracle};
pub use error::{Error, Result};
pub use lp::{L1Problem, L1Solution, SolveStatus};
pub use matrix::DenseMatrix;
pub use regression::{
    Coreset, LeverageEstimate, LeverageEstimator, SamplerConfig, SamplingScheme,
};
pub use rng::RngStream;
pub use sketch::{SketchKind, SketchOperator, SketchSpec};
