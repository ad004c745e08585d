//! The shared sample lattice over a compact SE(2) subset, and real-valued
//! density fields sampled on it.

use crate::error::{HefError, Result};
use crate::group::Pose;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Relative floor applied before taking logs of a density: values below
/// `1e-12 · max` are treated as this floor so logs stay finite (§III-D).
pub const LOG_FLOOR_REL: f64 = 1e-12;

/// Regular grid over `[x_min,x_max]×[y_min,y_max]×[0,2π)`.
///
/// Samples are cell-left-aligned: sample `(0,0,0)` sits at
/// `(x_min, y_min, 0)` and the θ axis covers `[0, 2π)` half-open. The
/// quadrature weight `w = Δx·Δy·Δθ` converts grid sums into integrals
/// against the bi-invariant measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub ntheta: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, ntheta: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let s = GridSpec { nx, ny, ntheta, x_min, x_max, y_min, y_max };
        s.validate()?;
        Ok(s)
    }

    /// Unit box `[-0.5, 0.5]²` used by all the paper's experiments.
    pub fn unit_box(nx: usize, ny: usize, ntheta: usize) -> Result<Self> {
        Self::new(nx, ny, ntheta, -0.5, 0.5, -0.5, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || self.ntheta < 2 {
            return Err(HefError::Config(format!(
                "grid dimensions must all be >= 2, got {}x{}x{}",
                self.nx, self.ny, self.ntheta
            )));
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(HefError::Config("grid bounds are inverted or degenerate".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }
    pub fn dtheta(&self) -> f64 {
        TAU / self.ntheta as f64
    }
    /// Full quadrature weight Δx·Δy·Δθ.
    pub fn w(&self) -> f64 {
        self.dx() * self.dy() * self.dtheta()
    }
    /// Planar quadrature weight Δx·Δy.
    pub fn wxy(&self) -> f64 {
        self.dx() * self.dy()
    }
    pub fn lx(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn ly(&self) -> f64 {
        self.y_max - self.y_min
    }
    pub fn total_measure(&self) -> f64 {
        self.lx() * self.ly() * TAU
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.ntheta
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        self.x_min + self.dx() * ix as f64
    }
    pub fn y_at(&self, iy: usize) -> f64 {
        self.y_min + self.dy() * iy as f64
    }
    pub fn theta_at(&self, it: usize) -> f64 {
        self.dtheta() * it as f64
    }
    pub fn pose_at(&self, ix: usize, iy: usize, it: usize) -> Pose {
        Pose::new(self.x_at(ix), self.y_at(iy), self.theta_at(it))
    }

    /// Nearest-sample cell of a pose (indices clamped in x/y, wrapped in θ).
    pub fn nearest_cell(&self, p: &Pose) -> (usize, usize, usize) {
        let fx = (p.x - self.x_min) / self.dx();
        let fy = (p.y - self.y_min) / self.dy();
        let ft = p.theta / self.dtheta();
        let ix = (fx.round().max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.round().max(0.0) as usize).min(self.ny - 1);
        let it = (ft.round() as usize) % self.ntheta;
        (ix, iy, it)
    }

    /// All grid poses in row-major `(ix, iy, iθ)` order, plus the weight.
    pub fn make_grid(&self) -> Result<(Vec<Pose>, f64)> {
        self.validate()?;
        let mut poses = Vec::with_capacity(self.len());
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                for it in 0..self.ntheta {
                    poses.push(self.pose_at(ix, iy, it));
                }
            }
        }
        Ok((poses, self.w()))
    }
}

/// Real-valued function samples on a [`GridSpec`], shape `(nx, ny, ntheta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub values: Array3<f64>,
}

impl DensityGrid {
    pub fn new(spec: GridSpec, values: Array3<f64>) -> Result<Self> {
        if values.dim() != (spec.nx, spec.ny, spec.ntheta) {
            return Err(HefError::Shape(format!(
                "array shape {:?} does not match grid {}x{}x{}",
                values.dim(),
                spec.nx,
                spec.ny,
                spec.ntheta
            )));
        }
        Ok(DensityGrid { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        DensityGrid { spec, values: Array3::zeros((spec.nx, spec.ny, spec.ntheta)) }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        DensityGrid { spec, values: Array3::from_elem((spec.nx, spec.ny, spec.ntheta), c) }
    }

    /// Fill from a function of the sample pose.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let mut v = Array3::zeros((spec.nx, spec.ny, spec.ntheta));
        for ix in 0..spec.nx {
            let x = spec.x_at(ix);
            for iy in 0..spec.ny {
                let y = spec.y_at(iy);
                for it in 0..spec.ntheta {
                    v[[ix, iy, it]] = f(x, y, spec.theta_at(it));
                }
            }
        }
        DensityGrid { spec, values: v }
    }

    /// Quadrature integral `w·Σ values`.
    pub fn integral(&self) -> f64 {
        self.spec.w() * self.values.sum()
    }

    /// `true` when non-negative and integrating to 1 within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= 0.0) && (self.integral() - 1.0).abs() <= tol
    }

    /// Rescale in place so the quadrature integral is 1.
    pub fn normalize(&mut self) -> Result<()> {
        let z = self.integral();
        if !(z.is_finite() && z > 0.0) {
            return Err(HefError::Numeric(format!("cannot normalize density with integral {z}")));
        }
        self.values.mapv_inplace(|v| v / z);
        Ok(())
    }

    /// L1 distance `w·Σ|p-q|`.
    pub fn l1_distance(&self, other: &DensityGrid) -> f64 {
        self.spec.w()
            * self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    /// Total variation distance `½·w·Σ|p-q|` between normalized densities.
    pub fn tv_distance(&self, other: &DensityGrid) -> f64 {
        0.5 * self.l1_distance(other)
    }

    /// Grid-weighted position mean and circular orientation mean (§IV).
    ///
    /// Returns the mean pose and the orientation resultant length; a
    /// resultant below 1e-6 means the circular mean is undefined (the
    /// returned θ is then 0 by convention and should not be trusted).
    pub fn mean_pose(&self) -> (Pose, f64) {
        let g = &self.spec;
        let w = g.w();
        let (mut mx, mut my, mut cs, mut sn) = (0.0, 0.0, 0.0, 0.0);
        for ix in 0..g.nx {
            let x = g.x_at(ix);
            for iy in 0..g.ny {
                let y = g.y_at(iy);
                for it in 0..g.ntheta {
                    let p = self.values[[ix, iy, it]] * w;
                    mx += p * x;
                    my += p * y;
                    let t = g.theta_at(it);
                    cs += p * t.cos();
                    sn += p * t.sin();
                }
            }
        }
        let resultant = cs.hypot(sn);
        let theta = if resultant < 1e-6 { 0.0 } else { sn.atan2(cs) };
        (Pose::new(mx, my, theta), resultant)
    }

    /// Argmax sample as a pose; ties broken by the lowest row-major index.
    pub fn mode_pose(&self) -> Pose {
        let (ix, iy, it) = self.argmax();
        self.spec.pose_at(ix, iy, it)
    }

    /// Differential entropy −∫ p ln p by quadrature.
    pub fn entropy(&self) -> f64 {
        -self.spec.w()
            * self
                .values
                .iter()
                .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
                .sum::<f64>()
    }

    /// Log value at the nearest grid sample to `p`, floored at
    /// `LOG_FLOOR_REL · max`.
    pub fn log_at(&self, p: &Pose) -> f64 {
        let (ix, iy, it) = self.spec.nearest_cell(p);
        let v = self.values[[ix, iy, it]];
        let max = self.values.iter().fold(0.0f64, |a, &b| a.max(b));
        v.max(LOG_FLOOR_REL * max).ln()
    }

    /// Row-major argmax sample; ties broken by the lowest index.
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = (0usize, 0usize, 0usize);
        let mut bv = f64::NEG_INFINITY;
        for ix in 0..self.spec.nx {
            for iy in 0..self.spec.ny {
                for it in 0..self.spec.ntheta {
                    let v = self.values[[ix, iy, it]];
                    if v > bv {
                        bv = v;
                        best = (ix, iy, it);
                    }
                }
            }
        }
        best
    }
}
