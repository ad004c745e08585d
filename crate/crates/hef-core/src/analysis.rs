//! Fidelity analysis on the circle: von Mises mixtures, histogram and
//! harmonic-exponential fits at matched parameter counts, and D_KL between
//! them by fine quadrature.

use crate::error::{HefError, Result};
use crate::transform::s1::{s1_analyze, s1_synthesize};
use std::f64::consts::TAU;

/// Modified Bessel function of the first kind, order zero, by its power
/// series `Σ (x/2)^{2k} / (k!)²`. Accurate to better than 1e-12 relative
/// error over the κ range used here (≤ 32, where the series terms stay
/// well inside f64 range).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// One von Mises component of a mixture.
#[derive(Debug, Clone, Copy)]
pub struct VmComponent {
    pub mu: f64,
    pub kappa: f64,
    pub weight: f64,
}

/// Mixture of von Mises distributions on S¹.
#[derive(Debug, Clone)]
pub struct VonMisesMixture {
    pub components: Vec<VmComponent>,
}

impl VonMisesMixture {
    pub fn new(components: Vec<VmComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(HefError::Config("mixture needs at least one component".into()));
        }
        let wsum: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| c.weight < 0.0 || !c.kappa.is_finite() || c.kappa < 0.0) {
            return Err(HefError::Config("mixture weights must be ≥ 0 and κ finite, ≥ 0".into()));
        }
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(HefError::Config(format!("mixture weights sum to {wsum}, expected 1")));
        }
        Ok(VonMisesMixture { components })
    }

    /// Two equal-weight components at a shared concentration κ.
    pub fn symmetric_pair(mu1: f64, mu2: f64, kappa: f64) -> Result<Self> {
        Self::new(vec![
            VmComponent { mu: mu1, kappa, weight: 0.5 },
            VmComponent { mu: mu2, kappa, weight: 0.5 },
        ])
    }

    /// Density at one angle.
    pub fn density(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.kappa * (theta - c.mu).cos()).exp() / (TAU * bessel_i0(c.kappa)))
            .sum()
    }

    /// Density at many angles.
    pub fn density_at(&self, thetas: &[f64]) -> Vec<f64> {
        thetas.iter().map(|&t| self.density(t)).collect()
    }
}

/// Uniform quadrature nodes `θ_k = 2πk/n`.
pub fn quad_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// D_KL(p ‖ q) on S¹ by the uniform rule with weight 2π/n; `q` is floored
/// at 1e-12 of its maximum before division.
pub fn kl_s1(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(HefError::Shape("KL operands of different length".into()));
    }
    let qmax = q.iter().fold(0.0f64, |a, &v| a.max(v));
    let floor = 1e-12 * qmax.max(f64::MIN_POSITIVE);
    let w = TAU / p.len() as f64;
    let mut acc = 0.0;
    for (&pv, &qv) in p.iter().zip(q) {
        if pv > 0.0 {
            acc += pv * (pv / qv.max(floor)).ln();
        }
    }
    Ok(w * acc)
}

/// Piecewise-constant fit with `bins` parameters: each bin takes the average
/// truth density over the bin (64 sub-samples), then the step function is
/// renormalized. Returned sampled on the given quadrature nodes.
pub fn histogram_fit(mix: &VonMisesMixture, bins: usize, nodes: &[f64]) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(HefError::Config("histogram fit needs ≥ 2 bins".into()));
    }
    let sub = 64;
    let mut level = vec![0.0f64; bins];
    for (b, lv) in level.iter_mut().enumerate() {
        let lo = TAU * b as f64 / bins as f64;
        let dh = TAU / (bins * sub) as f64;
        // midpoint rule inside the bin
        *lv = (0..sub).map(|s| mix.density(lo + (s as f64 + 0.5) * dh)).sum::<f64>() / sub as f64;
    }
    let mut samples: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            let b = ((t.rem_euclid(TAU) / TAU) * bins as f64) as usize;
            level[b.min(bins - 1)]
        })
        .collect();
    // renormalize on the quadrature nodes themselves so the D_KL operands
    // integrate to 1 under the same rule (bin-boundary rounding is then
    // mass-neutral)
    let mass: f64 = samples.iter().sum::<f64>() * TAU / nodes.len() as f64;
    for s in samples.iter_mut() {
        *s /= mass;
    }
    Ok(samples)
}

/// Harmonic-exponential fit with `params` real degrees of freedom: band
/// B = ⌊(params−1)/2⌋, η = s1_analyze(log truth), density = exp(synth)/Z.
/// Returned sampled on the given quadrature nodes (which also serve as the
/// analysis grid, so they must number ≥ 2B+1 — use ≥ 4096).
pub fn hed_fit_s1(mix: &VonMisesMixture, params: usize, nodes: &[f64]) -> Result<Vec<f64>> {
    if params < 3 {
        return Err(HefError::Config("HED fit needs ≥ 3 parameters (band ≥ 1)".into()));
    }
    let band = (params - 1) / 2;
    let logf: Vec<f64> = nodes
        .iter()
        .map(|&t| mix.density(t).max(f64::MIN_POSITIVE).ln())
        .collect();
    let eta = s1_analyze(&logf, band)?;
    let field = s1_synthesize(&eta, nodes);
    let c = field.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let z: f64 = field.iter().map(|&v| (v - c).exp()).sum::<f64>() * TAU / nodes.len() as f64;
    let log_z = z.ln() + c;
    Ok(field.iter().map(|&v| (v - log_z).exp()).collect())
}

/// One row of the Fig.-3-style sweep output.
#[derive(Debug, Clone)]
pub struct FidelityRow {
    pub method: &'static str,
    pub params: usize,
    pub kappa: f64,
    pub d_kl: f64,
}

/// Sweep D_KL(truth ‖ fit) for both methods over parameter counts and
/// concentrations. The truth at each κ is the two-component mixture with
/// the given means and equal weights. `n_quad ≥ 4096` enforced.
pub fn fidelity_sweep(
    mus: (f64, f64),
    params: &[usize],
    kappas: &[f64],
    n_quad: usize,
) -> Result<Vec<FidelityRow>> {
    if n_quad < 4096 {
        return Err(HefError::Config("fidelity sweep requires ≥ 4096 quadrature points".into()));
    }
    let nodes = quad_nodes(n_quad);
    let mut rows = Vec::new();
    for &kappa in kappas {
        let mix = VonMisesMixture::symmetric_pair(mus.0, mus.1, kappa)?;
        let truth = mix.density_at(&nodes);
        for &p in params {
            let hist = histogram_fit(&mix, p, &nodes)?;
            let hed = hed_fit_s1(&mix, p, &nodes)?;
            rows.push(FidelityRow { method: "hist", params: p, kappa, d_kl: kl_s1(&truth, &hist)? });
            rows.push(FidelityRow { method: "hed", params: p, kappa, d_kl: kl_s1(&truth, &hed)? });
        }
    }
    Ok(rows)
}
