//! Baseline filters for the Table-III comparison: an extended Kalman
//! filter, a planar-convolution histogram filter, and a bootstrap particle
//! filter. All three consume the same controls and measurement models as
//! the HEF and emit the same run-log schema.

pub mod ekf;
pub mod histf;
pub mod pf;

pub use ekf::{ekf_step, GaussianBelief};
pub use histf::{histf_step, HistFilter};
pub use pf::{ParticleFilter, ParticleSet};
