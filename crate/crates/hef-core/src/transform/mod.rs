//! Generalized Fourier analysis and synthesis on S¹ and SE(2).

pub mod numeric;
pub mod s1;
pub mod se2;

pub use s1::{s1_analyze, s1_synthesize, S1Spectrum};
pub use se2::{Role, Se2Fft, Se2Spectrum};
