//! Fourier analysis/synthesis on the circle.
//!
//! The IURs of SO(2) are the scalars `e^{iλθ}`, so the transform reduces to
//! an ordinary Fourier series with the group-measure normalization
//! `coeff(λ) = ∫ f(θ) e^{-iλθ} dθ` (approximated by the equispaced rule).

use crate::error::{HefError, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Truncated circle spectrum; `coeffs[λ + B]` holds frequency `λ ∈ [-B, B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct S1Spectrum {
    pub band_limit: usize,
    pub coeffs: Vec<Complex64>,
}

impl S1Spectrum {
    pub fn zeros(band_limit: usize) -> Self {
        S1Spectrum { band_limit, coeffs: vec![Complex64::new(0.0, 0.0); 2 * band_limit + 1] }
    }

    pub fn coeff(&self, lambda: i64) -> Complex64 {
        self.coeffs[(lambda + self.band_limit as i64) as usize]
    }

    pub fn coeff_mut(&mut self, lambda: i64) -> &mut Complex64 {
        &mut self.coeffs[(lambda + self.band_limit as i64) as usize]
    }

    /// Largest violation of the real-input conjugate symmetry
    /// `coeff(-λ) = conj(coeff(λ))`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let b = self.band_limit as i64;
        (0..=b)
            .map(|l| (self.coeff(-l) - self.coeff(l).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Forward transform of equispaced samples over `[0, 2π)`.
///
/// Truncation beyond the band limit acts as a low-pass filter. Sample counts
/// below `2B+1` are rejected (aliasing guard).
pub fn s1_analyze(samples: &[f64], band_limit: usize) -> Result<S1Spectrum> {
    let n = samples.len();
    if n < 2 * band_limit + 1 {
        return Err(HefError::Config(format!(
            "{} samples cannot resolve band limit {} (need at least {})",
            n,
            band_limit,
            2 * band_limit + 1
        )));
    }
    let dt = TAU / n as f64;
    let mut spec = S1Spectrum::zeros(band_limit);
    for l in -(band_limit as i64)..=band_limit as i64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &f) in samples.iter().enumerate() {
            let ang = -(l as f64) * dt * k as f64;
            acc += f * Complex64::new(ang.cos(), ang.sin());
        }
        *spec.coeff_mut(l) = acc * dt;
    }
    Ok(spec)
}

/// Inverse transform `f(θ) = (1/2π) Σ_λ coeff(λ) e^{iλθ}` evaluated at the
/// given points; returns the real part (the imaginary residue of conjugate
/// symmetric spectra is at roundoff level).
pub fn s1_synthesize(spec: &S1Spectrum, points: &[f64]) -> Vec<f64> {
    let b = spec.band_limit as i64;
    points
        .iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in -b..=b {
                let ang = l as f64 * t;
                acc += spec.coeff(l) * Complex64::new(ang.cos(), ang.sin());
            }
            acc.re / TAU
        })
        .collect()
}

/// Equispaced θ samples `2πk/n`, `k = 0..n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_function_is_pure_dc() {
        let spec = s1_analyze(&vec![1.0; 16], 2).unwrap();
        assert_abs_diff_eq!(spec.coeff(0).re, TAU, epsilon = 1e-12);
        for l in [-2i64, -1, 1, 2] {
            assert!(spec.coeff(l).norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_splits_into_pm_one() {
        let thetas = theta_grid(16);
        let f: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
        let spec = s1_analyze(&f, 2).unwrap();
        assert_abs_diff_eq!(spec.coeff(1).re, std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.coeff(-1).re, std::f64::consts::PI, epsilon = 1e-12);
        assert!(spec.coeff(0).norm() < 1e-12 && spec.coeff(2).norm() < 1e-12);
    }

    #[test]
    fn von_mises_coefficient_ratio_matches_quadrature() {
        // coeff(λ)/coeff(0) = I_λ(κ)/I_0(κ); check λ=1 against a direct
        // quadrature of ∫ e^{κ cos θ} cos(λθ) dθ at high resolution.
        let kappa = 2.0;
        let n = 4096;
        let thetas = theta_grid(n);
        let f: Vec<f64> = thetas.iter().map(|t| (kappa * t.cos()).exp()).collect();
        let spec = s1_analyze(&f, 4).unwrap();
        let ratio = spec.coeff(1).re / spec.coeff(0).re;
        let (mut num, mut den) = (0.0, 0.0);
        for &t in &thetas {
            num += (kappa * t.cos()).exp() * t.cos();
            den += (kappa * t.cos()).exp();
        }
        assert_abs_diff_eq!(ratio, num / den, epsilon = 1e-10);
    }

    #[test]
    fn synthesize_dc_only_is_constant_one() {
        let mut spec = S1Spectrum::zeros(3);
        *spec.coeff_mut(0) = Complex64::new(TAU, 0.0);
        let out = s1_synthesize(&spec, &[0.0, 1.0, 2.5, 6.0]);
        for v in out {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn round_trip_band_limited() {
        // band-limited input reconstructs exactly at the samples
        let thetas = theta_grid(32);
        let f: Vec<f64> = thetas.iter().map(|t| 0.7 + 0.3 * (2.0 * t).cos() - 0.1 * (3.0 * t).sin()).collect();
        let spec = s1_analyze(&f, 5).unwrap();
        let back = s1_synthesize(&spec, &thetas);
        for (a, b) in f.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn von_mises_reconstruction_close_to_closed_form() {
        // κ=4, B=16: band-limit truncation error well below 1e-6
        let kappa = 4.0;
        let i0 = crate::analysis::bessel_i0(kappa);
        let thetas = theta_grid(256);
        let f: Vec<f64> = thetas.iter().map(|t| (kappa * t.cos()).exp() / (TAU * i0)).collect();
        let spec = s1_analyze(&f, 16).unwrap();
        let back = s1_synthesize(&spec, &thetas);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn aliasing_guard() {
        assert!(s1_analyze(&[0.0; 8], 4).is_err());
    }
}
