//! Bootstrap particle filter with systematic resampling; the 10⁶-particle
//! configuration doubles as the Monte Carlo oracle for the banana test.

use crate::error::{HefError, Result};
use crate::filter::{ControlInput, DiffDriveModel};
use crate::grid::{DensityGrid, GridSpec};
use crate::group::{wrap_pi, Pose};
use crate::measurement::{LandmarkMap, Measurement, MeasurementKind};
use ndarray::Array3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub particles: Vec<Pose>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn uniform_weights(particles: Vec<Pose>) -> Self {
        let n = particles.len();
        ParticleSet { particles, weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weighted mean with a circular mean for θ.
    pub fn mean(&self) -> Pose {
        let (mut x, mut y, mut c, mut s) = (0.0, 0.0, 0.0, 0.0);
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            x += w * p.x;
            y += w * p.y;
            c += w * p.theta.cos();
            s += w * p.theta.sin();
        }
        Pose::new(x, y, s.atan2(c))
    }

    /// Heaviest-weighted particle (§IV mode estimator); ties break to the
    /// lowest index.
    pub fn mode(&self) -> Pose {
        let i = self
            .weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        self.particles[i]
    }

    /// Histogram density at grid resolution with additive 1e-12 smoothing,
    /// for NLL on the same footing as the grid filters. Particles outside
    /// the box land in the nearest boundary cell.
    pub fn histogram_density(&self, grid: &GridSpec) -> DensityGrid {
        let mut counts = Array3::<f64>::zeros((grid.nx, grid.ny, grid.ntheta));
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            let (ix, iy, it) = grid.nearest_cell(p);
            counts[[ix, iy, it]] += w;
        }
        counts.mapv_inplace(|v| v + 1e-12);
        let mut d = DensityGrid::new(*grid, counts).expect("finite histogram");
        d.normalize().expect("positive mass");
        d
    }
}

/// Particle-filter state; owns the RNG so a run is a pure function of the
/// seed.
pub struct ParticleFilter {
    pub set: ParticleSet,
    pub model: DiffDriveModel,
    pub rng: ChaCha8Rng,
    /// set when a step had to reset degenerate (all-zero) weights
    pub degenerate_reset: bool,
}

impl ParticleFilter {
    pub fn new(set: ParticleSet, model: DiffDriveModel, rng: ChaCha8Rng) -> Result<Self> {
        if set.is_empty() {
            return Err(HefError::Config("particle filter needs N ≥ 1".into()));
        }
        let wsum: f64 = set.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 || set.weights.iter().any(|&w| w < 0.0) {
            return Err(HefError::Config("particle weights must be ≥ 0 and sum to 1".into()));
        }
        Ok(ParticleFilter { set, model, rng, degenerate_reset: false })
    }

    /// Draw N particles from the grid prior density (inverse-CDF over
    /// cells, jittered uniformly within each cell).
    pub fn init_from_density(
        density: &DensityGrid,
        n: usize,
        model: DiffDriveModel,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        let g = density.spec;
        let mut cdf = Vec::with_capacity(g.len());
        let mut acc = 0.0;
        for v in density.values.iter() {
            acc += v;
            cdf.push(acc);
        }
        let total = acc;
        let mut particles = Vec::with_capacity(n);
        for _ in 0..n {
            let r = rng.gen::<f64>() * total;
            let idx = cdf.partition_point(|&c| c < r).min(g.len() - 1);
            let it = idx % g.ntheta;
            let iy = (idx / g.ntheta) % g.ny;
            let ix = idx / (g.ntheta * g.ny);
            particles.push(Pose::new(
                g.x_at(ix) + (rng.gen::<f64>() - 0.5) * g.dx(),
                g.y_at(iy) + (rng.gen::<f64>() - 0.5) * g.dy(),
                g.theta_at(it) + (rng.gen::<f64>() - 0.5) * g.dtheta(),
            ));
        }
        ParticleFilter::new(ParticleSet::uniform_weights(particles), model, rng)
    }

    /// One cycle: noisy diff-drive propagation, likelihood weighting,
    /// conditional systematic resampling. Returns the pre-resampling mode.
    pub fn step(
        &mut self,
        u: &ControlInput,
        measurements: &[Measurement],
        map: &LandmarkMap,
    ) -> Result<Pose> {
        self.degenerate_reset = false;
        let nt = Normal::new(0.0, self.model.sigma_trans)
            .map_err(|e| HefError::Config(e.to_string()))?;
        let nr = Normal::new(0.0, self.model.sigma_rot)
            .map_err(|e| HefError::Config(e.to_string()))?;
        for p in self.set.particles.iter_mut() {
            let du = Pose::new(
                u.dx + nt.sample(&mut self.rng),
                u.dy + nt.sample(&mut self.rng),
                u.dtheta + nr.sample(&mut self.rng),
            );
            *p = p.compose(&du);
        }
        if !measurements.is_empty() {
            // accumulate log-weights, then exponentiate around the max for
            // numerical stability
            let mut logw: Vec<f64> = self.set.weights.iter().map(|w| w.max(1e-300).ln()).collect();
            for z in measurements {
                let id = z.landmark_id.ok_or_else(|| {
                    HefError::Config("particle filter requires known correspondence".into())
                })?;
                let lm = *map.landmark(id)?;
                let inv = 1.0 / (2.0 * z.sigma * z.sigma);
                for (p, lw) in self.set.particles.iter().zip(logw.iter_mut()) {
                    let ll = match z.kind {
                        MeasurementKind::Range => {
                            let d = (p.x - lm.x).hypot(p.y - lm.y);
                            -(d - z.value).powi(2) * inv
                        }
                        MeasurementKind::Bearing => {
                            let b = (lm.y - p.y).atan2(lm.x - p.x) - p.theta;
                            -wrap_pi(b - z.value).powi(2) * inv
                        }
                    };
                    *lw += ll;
                }
            }
            let cmax = logw.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            if !cmax.is_finite() {
                // degenerate likelihood: uniform reset with warning flag
                let n = self.set.len();
                self.set.weights = vec![1.0 / n as f64; n];
                self.degenerate_reset = true;
            } else {
                let mut sum = 0.0;
                for (w, &lw) in self.set.weights.iter_mut().zip(&logw) {
                    *w = (lw - cmax).exp();
                    sum += *w;
                }
                for w in self.set.weights.iter_mut() {
                    *w /= sum;
                }
            }
        }
        let mode = self.set.mode();
        if self.set.effective_sample_size() < self.set.len() as f64 / 2.0 {
            self.resample_systematic();
        }
        Ok(mode)
    }

    fn resample_systematic(&mut self) {
        let n = self.set.len();
        let step = 1.0 / n as f64;
        let mut u = self.rng.gen::<f64>() * step;
        let mut acc = self.set.weights[0];
        let mut i = 0usize;
        let mut new = Vec::with_capacity(n);
        for _ in 0..n {
            while acc < u && i + 1 < n {
                i += 1;
                acc += self.set.weights[i];
            }
            new.push(self.set.particles[i]);
            u += step;
        }
        self.set.particles = new;
        self.set.weights = vec![step; n];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::Landmark;
    use rand::SeedableRng;

    fn model() -> DiffDriveModel {
        DiffDriveModel::new(0.03, 0.05).unwrap()
    }

    fn spawn(n: usize, seed: u64) -> ParticleFilter {
        let particles = vec![Pose::identity(); n];
        ParticleFilter::new(
            ParticleSet::uniform_weights(particles),
            model(),
            ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    #[test]
    fn diffusion_grows_covariance_by_process_noise() {
        let mut pf = spawn(100_000, 1);
        pf.step(&ControlInput { dx: 0.0, dy: 0.0, dtheta: 0.0 }, &[], &LandmarkMap::default())
            .unwrap();
        let m = pf.set.mean();
        let var_x: f64 = pf
            .set
            .particles
            .iter()
            .zip(&pf.set.weights)
            .map(|(p, &w)| w * (p.x - m.x).powi(2))
            .sum();
        let want = model().sigma_trans.powi(2);
        assert!((var_x - want).abs() / want < 0.10, "var {var_x} vs {want}");
    }

    #[test]
    fn concentrated_likelihood_triggers_resampling() {
        let mut pf = spawn(1000, 2);
        // spread the cloud first
        for _ in 0..3 {
            pf.step(&ControlInput { dx: 0.0, dy: 0.0, dtheta: 0.0 }, &[], &LandmarkMap::default())
                .unwrap();
        }
        let map = LandmarkMap::new(vec![Landmark { id: 0, x: 0.0, y: 0.0 }]).unwrap();
        let z = Measurement {
            kind: MeasurementKind::Range,
            value: 0.0,
            landmark_id: Some(0),
            sigma: 0.01,
        };
        pf.step(&ControlInput { dx: 0.0, dy: 0.0, dtheta: 0.0 }, &[z], &map).unwrap();
        // after the conditional systematic resample, weights are uniform
        let n = pf.set.len() as f64;
        assert!(pf.set.weights.iter().all(|&w| (w - 1.0 / n).abs() < 1e-12));
        assert!(!pf.degenerate_reset);
    }

    #[test]
    fn resampling_preserves_weighted_mean_in_expectation() {
        // fixed weighted cloud; over 50 seeds the post-resample mean must
        // match the weighted mean within 3 standard errors
        let n = 400usize;
        let particles: Vec<Pose> =
            (0..n).map(|i| Pose::new(i as f64 / n as f64, 0.0, 0.0)).collect();
        let raw: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.013).sin().powi(2) + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let set = ParticleSet { particles, weights };
        let truth = set.mean().x;
        let mut diffs = Vec::new();
        for seed in 0..50u64 {
            let mut pf =
                ParticleFilter::new(set.clone(), model(), ChaCha8Rng::seed_from_u64(900 + seed))
                    .unwrap();
            pf.resample_systematic();
            diffs.push(pf.set.mean().x - truth);
        }
        let m = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / m;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        assert!(mean.abs() <= 3.0 * se.max(1e-9), "bias {mean} vs se {se}");
    }

    #[test]
    fn histogram_density_is_normalized() {
        let grid = GridSpec::unit_box(16, 16, 8).unwrap();
        let mut pf = spawn(5000, 3);
        pf.step(&ControlInput { dx: 0.05, dy: 0.02, dtheta: 0.2 }, &[], &LandmarkMap::default())
            .unwrap();
        let d = pf.set.histogram_density(&grid);
        assert!(d.is_normalized(1e-9));
        assert!(d.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn determinism_under_fixed_seed() {
        let run = || {
            let mut pf = spawn(500, 42);
            let map = LandmarkMap::new(vec![Landmark { id: 0, x: 0.1, y: 0.1 }]).unwrap();
            let z = Measurement {
                kind: MeasurementKind::Range,
                value: 0.1,
                landmark_id: Some(0),
                sigma: 0.05,
            };
            for _ in 0..5 {
                pf.step(&ControlInput { dx: 0.02, dy: 0.0, dtheta: 0.1 }, &[z], &map).unwrap();
            }
            pf.set.mean()
        };
        assert_eq!(run(), run());
    }
}
