//! The harmonic exponential distribution on SE(2): `p(g) ∝ exp(η·T(g))`
//! with natural parameters η given by Fourier coefficients of the
//! log-density (Eqs. 3–6).

use crate::error::{HefError, Result};
use crate::grid::{DensityGrid, GridSpec};
use crate::group::Pose;
use crate::transform::se2::{spectral_convolve, Role, Se2Fft, Se2Spectrum};
use ndarray::Array3;

/// Relative floor applied before taking logs of density values.
pub use crate::grid::LOG_FLOOR_REL;

/// Floor a non-negative field at `LOG_FLOOR_REL · max` so logs stay finite.
pub fn floor_density(values: &mut Array3<f64>) {
    let max = values.iter().fold(0.0f64, |a, &v| a.max(v));
    let floor = if max > 0.0 { LOG_FLOOR_REL * max } else { f64::MIN_POSITIVE };
    values.mapv_inplace(|v| v.max(floor));
}

/// Belief object of the filter: natural parameters plus cached evaluations.
///
/// The cached `log_field` is the synthesized (band-limited) `ln φ`; the
/// cached `density` is its normalized exponential. Both are recomputed
/// whenever η changes, so the invariants "strictly positive" and
/// "integrates to one" hold by construction.
#[derive(Debug, Clone)]
pub struct HarmonicExpDist {
    pub eta: Se2Spectrum,
    pub log_z: f64,
    pub grid: GridSpec,
    log_field: Array3<f64>,
    density: Array3<f64>,
}

impl HarmonicExpDist {
    /// Build from natural parameters: synthesize `ln φ`, compute the
    /// log-normalizer by stable quadrature (Eq. 4), cache the density.
    pub fn from_eta(plan: &Se2Fft, eta: Se2Spectrum) -> Result<Self> {
        if eta.role != Role::LogSpace {
            return Err(HefError::Shape("HarmonicExpDist requires a LOG_SPACE spectrum".into()));
        }
        let grid = eta.grid;
        // lenient: η often comes from floored log fields (kinked at the
        // floor plateau), whose synthesis carries a small benign imaginary
        // residue
        let log_field = plan.synthesize_lenient(&eta)?.values;
        let c = log_field.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        if !c.is_finite() {
            return Err(HefError::Numeric("log-density synthesis produced non-finite values".into()));
        }
        let sum: f64 = log_field.iter().map(|&v| (v - c).exp()).sum();
        let log_z = (grid.w() * sum).ln() + c;
        let density = log_field.mapv(|v| (v - log_z).exp());
        Ok(HarmonicExpDist { eta, log_z, grid, log_field, density })
    }

    /// Fit from sampled log-density values (Eq. 4); the caller must have
    /// floored the input so every sample is finite.
    pub fn fit_from_log_density(plan: &Se2Fft, log_f: &DensityGrid) -> Result<Self> {
        if log_f.values.iter().any(|v| !v.is_finite()) {
            return Err(HefError::Numeric("fit_from_log_density requires finite samples".into()));
        }
        let eta = plan.analyze(log_f, Role::LogSpace)?;
        Self::from_eta(plan, eta)
    }

    /// Fit from a (possibly unnormalized, possibly zero-valued) density.
    pub fn fit_from_density(plan: &Se2Fft, density: &DensityGrid) -> Result<Self> {
        let mut vals = density.values.clone();
        floor_density(&mut vals);
        vals.mapv_inplace(f64::ln);
        Self::fit_from_log_density(plan, &DensityGrid::new(density.spec, vals)?)
    }

    /// The uniform distribution (η = 0).
    pub fn uniform(plan: &Se2Fft) -> Result<Self> {
        let eta = Se2Spectrum::zeros(plan.spec, plan.n_lambda, plan.band_n, Role::LogSpace);
        Self::from_eta(plan, eta)
    }

    /// Normalized density samples.
    pub fn evaluate(&self) -> DensityGrid {
        DensityGrid { spec: self.grid, values: self.density.clone() }
    }

    pub fn density(&self) -> &Array3<f64> {
        &self.density
    }

    /// Band-limited unnormalized log-density (η·T on the grid).
    pub fn log_field(&self) -> &Array3<f64> {
        &self.log_field
    }

    /// Normalized log-density at the nearest grid sample to `p`.
    pub fn log_density_at(&self, p: &Pose) -> f64 {
        let (ix, iy, it) = self.grid.nearest_cell(p);
        let v = self.density[[ix, iy, it]];
        let max = self.density.iter().fold(0.0f64, |a, &b| a.max(b));
        v.max(LOG_FLOOR_REL * max).ln()
    }

    /// Eq. 5: coefficient addition realizes the normalized pointwise product.
    pub fn product(plan: &Se2Fft, a: &HarmonicExpDist, b: &HarmonicExpDist) -> Result<Self> {
        Self::from_eta(plan, a.eta.add(&b.eta)?)
    }

    /// Eq. 6: spectral convolution `a ∗ b`, re-fitted to log-space form so
    /// the result is again a HarmonicExpDist.
    pub fn convolve(plan: &Se2Fft, a: &HarmonicExpDist, b: &HarmonicExpDist) -> Result<Self> {
        let ma = plan.analyze(&a.evaluate(), Role::ProbSpace)?;
        let mb = plan.analyze(&b.evaluate(), Role::ProbSpace)?;
        let c = spectral_convolve(&mb, &ma)?;
        let mut grid = plan.synthesize_lenient(&c)?;
        floor_density(&mut grid.values);
        grid.values.mapv_inplace(f64::ln);
        Self::fit_from_log_density(plan, &grid)
    }

    /// [`HarmonicExpDist::convolve`] with a precomputed left operand: the
    /// kernel's probability-space coefficients may come from a closed form
    /// (see `filter::motion_spectrum`), which sidesteps grid aliasing for
    /// kernels concentrated below the cell size.
    pub fn convolve_with_kernel(
        plan: &Se2Fft,
        kernel: &Se2Spectrum,
        a: &HarmonicExpDist,
    ) -> Result<Self> {
        let ma = plan.analyze(&a.evaluate(), Role::ProbSpace)?;
        let c = spectral_convolve(kernel, &ma)?;
        let mut grid = plan.synthesize_lenient(&c)?;
        floor_density(&mut grid.values);
        grid.values.mapv_inplace(f64::ln);
        Self::fit_from_log_density(plan, &grid)
    }

    /// Grid-weighted position mean and circular orientation mean (§IV).
    ///
    /// Returns the mean pose and the orientation resultant length; a
    /// resultant below 1e-6 means the circular mean is undefined (the
    /// returned θ is then 0 by convention and should not be trusted).
    pub fn mean_pose(&self) -> (Pose, f64) {
        self.evaluate().mean_pose()
    }

    /// Argmax over the grid samples; ties resolved to the lowest row-major
    /// index (§IV "approximated using the FFT samples").
    pub fn mode_pose(&self) -> Pose {
        self.evaluate().mode_pose()
    }

    /// Expected IUR coefficients μ = Σ bel(x)·T(x) (diagnostic; this is the
    /// probability-space spectrum of the belief).
    pub fn expected_coeffs(&self, plan: &Se2Fft) -> Result<Se2Spectrum> {
        plan.analyze(&self.evaluate(), Role::ProbSpace)
    }

    /// Differential entropy −∫ p ln p by quadrature.
    pub fn entropy(&self) -> f64 {
        self.evaluate().entropy()
    }
}

/// KL divergence `w·Σ p·ln(p/q)` between two normalized grids, with `q`
/// floored at `1e-12·max q` before the division (§III-D).
pub fn kl_divergence(p: &DensityGrid, q: &DensityGrid) -> Result<f64> {
    if p.spec != q.spec {
        return Err(HefError::Shape("KL divergence operands on different grids".into()));
    }
    let qmax = q.values.iter().fold(0.0f64, |a, &v| a.max(v));
    let floor = LOG_FLOOR_REL * qmax.max(f64::MIN_POSITIVE);
    let w = p.spec.w();
    let mut acc = 0.0;
    for (&pv, &qv) in p.values.iter().zip(q.values.iter()) {
        if pv > 0.0 {
            acc += pv * (pv / qv.max(floor)).ln();
        }
    }
    Ok(w * acc)
}
