//! Bayesian filtering with harmonic exponential distributions on S¹ and SE(2).
//!
//! The crate provides:
//!
//! * generalized Fourier analysis/synthesis on the circle and on a compact
//!   subset of SE(2) ([`transform`]),
//! * the harmonic exponential distribution and its product/convolution
//!   algebra ([`dist`]),
//! * the Harmonic Exponential Filter together with EKF, histogram-filter and
//!   particle-filter baselines ([`filter`], [`baselines`]),
//! * measurement models, a range-only simulator and metrics ([`measurement`],
//!   [`sim`], [`metrics`]),
//! * the S¹ fidelity analysis and the convolution runtime benchmark
//!   ([`analysis`], [`bench`]),
//! * file formats and the `hef` command line tool ([`io`]).
//!
//! Densities live on a regular grid over `[x_min,x_max]×[y_min,y_max]×[0,2π)`
//! with left-aligned samples and a constant quadrature weight, so sums over
//! the grid approximate integrals against the bi-invariant measure.

// Link the system BLAS backing ndarray's matrix products.
extern crate blas_src;

pub mod analysis;
pub mod baselines;
pub mod bench;
pub mod dist;
pub mod error;
pub mod filter;
pub mod grid;
pub mod harness;
pub mod group;
pub mod io;
pub mod measurement;
pub mod metrics;
pub mod sim;
pub mod transform;

pub use error::{HefError, Result};
pub use grid::{DensityGrid, GridSpec};
pub use group::Pose;
