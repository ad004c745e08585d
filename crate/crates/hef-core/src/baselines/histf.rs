//! Histogram filter: grid belief, prediction by direct 3-D convolution with
//! a truncated motion kernel that shifts Cartesian coordinates only — the
//! planar convolution the paper critiques (§III-D), kept faithful here so
//! the banana comparison is meaningful.

use crate::error::{HefError, Result};
use crate::filter::{ControlInput, DiffDriveModel};
use crate::grid::DensityGrid;
use crate::group::wrap_pi;
use crate::measurement::{loglik_for, LandmarkMap, Measurement};
use ndarray::Array3;

/// Truncated motion kernel on integer cell offsets.
struct Kernel {
    /// offsets (di, dj, dk) and normalized weights
    taps: Vec<(isize, isize, isize, f64)>,
}

/// Abramowitz–Stegun 7.1.26 error function (|err| < 1.5e-7), plenty for
/// kernel weights.
fn erf(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    s * (1.0 - poly * (-x * x).exp())
}

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// One axis of the separable kernel: cell-integrated Gaussian spread around
/// the commanded shift, with the sub-cell fraction split linearly between
/// the two neighbouring offsets (a winner-take-all snap would freeze the
/// belief whenever the per-step motion is smaller than a cell).
fn axis_taps(mu: f64, h: f64, sigma: f64, support: isize) -> Vec<(isize, f64)> {
    let k0 = (mu / h).floor() as isize;
    let frac = mu / h - k0 as f64;
    let r = ((3.0 * sigma / h).ceil() as isize + 1).min(support);
    // centered cell-integrated Gaussian
    let g = |j: isize| -> f64 {
        let a = (j as f64 - 0.5) * h / sigma;
        let b = (j as f64 + 0.5) * h / sigma;
        phi(b) - phi(a)
    };
    let mut out = Vec::new();
    for k in (k0 - r)..=(k0 + 1 + r) {
        let w = (1.0 - frac) * g(k - k0) + frac * g(k - k0 - 1);
        if w > 1e-12 {
            out.push((k, w));
        }
    }
    out
}

fn build_kernel(
    spec: &crate::grid::GridSpec,
    model: &DiffDriveModel,
    u: &ControlInput,
) -> Result<Kernel> {
    let rx = ((u.dx.abs() + 3.0 * model.sigma_trans) / spec.dx()).ceil() as isize + 1;
    let ry = ((u.dy.abs() + 3.0 * model.sigma_trans) / spec.dy()).ceil() as isize + 1;
    if rx as usize >= spec.nx || ry as usize >= spec.ny {
        return Err(HefError::Config("motion kernel support exceeds the grid".into()));
    }
    let tx = axis_taps(u.dx, spec.dx(), model.sigma_trans, spec.nx as isize);
    let ty = axis_taps(u.dy, spec.dy(), model.sigma_trans, spec.ny as isize);
    // θ support capped at the wrap; wrap_pi keeps the commanded rotation in
    // the principal branch so k0 stays within one revolution
    let tt = axis_taps(wrap_pi(u.dtheta), spec.dtheta(), model.sigma_rot, spec.ntheta as isize / 2);
    let mut taps = Vec::new();
    let mut sum = 0.0;
    for &(di, wx) in &tx {
        for &(dj, wy) in &ty {
            for &(dk, wt) in &tt {
                let v = wx * wy * wt;
                if v > 1e-12 {
                    taps.push((di, dj, dk, v));
                    sum += v;
                }
            }
        }
    }
    if !(sum > 0.0) {
        return Err(HefError::Numeric("motion kernel lost all mass".into()));
    }
    for t in taps.iter_mut() {
        t.3 /= sum;
    }
    Ok(Kernel { taps })
}

/// Histogram-filter state wrapper; exposes the same step interface as the
/// other filters.
pub struct HistFilter {
    pub bel: DensityGrid,
    pub model: DiffDriveModel,
    kernel_cache: Option<(ControlInput, Kernel)>,
}

impl HistFilter {
    pub fn new(prior: DensityGrid, model: DiffDriveModel) -> Result<Self> {
        if !prior.is_normalized(1e-6) {
            return Err(HefError::Config("histogram filter prior must be normalized".into()));
        }
        Ok(HistFilter { bel: prior, model, kernel_cache: None })
    }

    pub fn step(
        &mut self,
        u: &ControlInput,
        measurements: &[Measurement],
        map: &LandmarkMap,
    ) -> Result<()> {
        let need_new = match &self.kernel_cache {
            Some((cu, _)) => cu != u,
            None => true,
        };
        if need_new {
            let k = build_kernel(&self.bel.spec, &self.model, u)?;
            self.kernel_cache = Some((*u, k));
        }
        let kernel = &self.kernel_cache.as_ref().unwrap().1;
        self.bel = predict_with(&self.bel, kernel)?;
        for z in measurements {
            let id = z.landmark_id.ok_or_else(|| {
                HefError::Config("histogram filter requires known correspondence".into())
            })?;
            let ll = loglik_for(map, z, id, &self.bel.spec)?;
            for (b, l) in self.bel.values.iter_mut().zip(ll.values.iter()) {
                *b *= l.exp();
            }
            self.bel.normalize()?;
        }
        Ok(())
    }
}

fn predict_with(bel: &DensityGrid, kernel: &Kernel) -> Result<DensityGrid> {
    let g = bel.spec;
    let (nx, ny, nt) = (g.nx as isize, g.ny as isize, g.ntheta as isize);
    let mut out = Array3::<f64>::zeros(bel.values.raw_dim());
    for &(di, dj, dk, wgt) in &kernel.taps {
        for ix in 0..nx {
            let sx = ix - di;
            if sx < 0 || sx >= nx {
                continue; // planar edge mass is clipped, renormalized below
            }
            for iy in 0..ny {
                let sy = iy - dj;
                if sy < 0 || sy >= ny {
                    continue;
                }
                for it in 0..nt {
                    let st = (it - dk).rem_euclid(nt);
                    out[[ix as usize, iy as usize, it as usize]] +=
                        wgt * bel.values[[sx as usize, sy as usize, st as usize]];
                }
            }
        }
    }
    let mut d = DensityGrid::new(g, out)?;
    d.normalize()?;
    Ok(d)
}

/// Functional one-shot interface used by tests.
pub fn histf_step(
    bel: &DensityGrid,
    model: &DiffDriveModel,
    u: &ControlInput,
    measurements: &[Measurement],
    map: &LandmarkMap,
) -> Result<DensityGrid> {
    let mut f = HistFilter::new(bel.clone(), *model)?;
    f.step(u, measurements, map)?;
    Ok(f.bel)
}
