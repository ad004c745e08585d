//! Dataset replay: drives any of the four filters over a [`Dataset`] and
//! produces the per-step run log plus summary metrics, so the CLI and the
//! acceptance tests share one code path.

use crate::baselines::ekf::{ekf_step, gaussian_nll, GaussianBelief};
use crate::baselines::histf::HistFilter;
use crate::baselines::pf::ParticleFilter;
use crate::error::{HefError, Result};
use crate::filter::{DiffDriveModel, HefFilter};
use crate::grid::DensityGrid;
use crate::group::{wrap_pi, Pose};
use crate::io::RunRecord;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::sim::Dataset;
use crate::transform::se2::Se2Fft;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

/// Which filter to replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Hef,
    Ekf,
    HistF,
    Pf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] =
        [FilterKind::Hef, FilterKind::Ekf, FilterKind::HistF, FilterKind::Pf];

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Hef => "hef",
            FilterKind::Ekf => "ekf",
            FilterKind::HistF => "histf",
            FilterKind::Pf => "pf",
        }
    }
}

impl FromStr for FilterKind {
    type Err = HefError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hef" => Ok(FilterKind::Hef),
            "ekf" => Ok(FilterKind::Ekf),
            "histf" => Ok(FilterKind::HistF),
            "pf" => Ok(FilterKind::Pf),
            other => Err(HefError::Config(format!(
                "unknown filter {other:?} (expected hef, ekf, histf or pf)"
            ))),
        }
    }
}

/// Replay parameters shared by all filters.
#[derive(Debug, Clone, Copy)]
pub struct HarnessConfig {
    /// motion model assumed by every filter
    pub model: DiffDriveModel,
    /// HEF transform bands `(n_lambda, n_psi, band_n)`; `None` picks
    /// [`Se2Fft::default_bands`]
    pub bands: Option<(usize, usize, usize)>,
    pub n_particles: usize,
    /// seed of the particle filter's own RNG (dataset noise is already
    /// baked into the file)
    pub pf_seed: u64,
    /// keep per-step belief densities in the result (costly on big grids)
    pub dump_beliefs: bool,
}

impl HarnessConfig {
    pub fn new(model: DiffDriveModel) -> Self {
        HarnessConfig { model, bands: None, n_particles: 80_000, pf_seed: 0, dump_beliefs: false }
    }
}

/// Replay output: the run log, aggregate metrics, and (optionally) the
/// posterior density after every step.
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub metrics: MetricsReport,
    pub beliefs: Vec<DensityGrid>,
}

/// Evaluate a Gaussian belief on the grid (for EKF belief dumps and the
/// banana comparison), with the heading deviation wrapped.
pub fn gaussian_density_grid(bel: &GaussianBelief, spec: &crate::grid::GridSpec) -> Result<DensityGrid> {
    let inv = bel
        .cov
        .try_inverse()
        .ok_or_else(|| HefError::Numeric("singular covariance in density evaluation".into()))?;
    let m = bel.mean;
    let mut d = DensityGrid::from_fn(*spec, |x, y, t| {
        let dx = x - m.x;
        let dy = y - m.y;
        let dt = wrap_pi(t - m.theta);
        let q = inv[(0, 0)] * dx * dx
            + inv[(1, 1)] * dy * dy
            + inv[(2, 2)] * dt * dt
            + 2.0 * (inv[(0, 1)] * dx * dy + inv[(0, 2)] * dx * dt + inv[(1, 2)] * dy * dt);
        (-0.5 * q).exp()
    });
    d.normalize()?;
    Ok(d)
}

fn finish(
    records: Vec<RunRecord>,
    beliefs: Vec<DensityGrid>,
    gts: &[Pose],
) -> Result<RunOutput> {
    let modes: Vec<Pose> = records.iter().map(|r| r.mode).collect();
    let means: Vec<Pose> = records.iter().map(|r| r.mean).collect();
    let nlls: Vec<f64> = records.iter().map(|r| r.nll_gt.unwrap_or(f64::INFINITY)).collect();
    let metrics = compute_metrics(&modes, &means, &nlls, gts)?;
    Ok(RunOutput { records, metrics, beliefs })
}

fn annotate(step: usize, e: HefError) -> HefError {
    e.map_msg(|m| format!("step {step}: {m}"))
}

/// Replay one filter over the dataset.
pub fn run_filter(ds: &Dataset, kind: FilterKind, cfg: &HarnessConfig) -> Result<RunOutput> {
    ds.validate()?;
    let grid = ds.header.grid;
    let prior = ds.header.prior.density_grid(&grid)?;
    let gts: Vec<Pose> = ds.steps.iter().map(|s| s.gt).collect();
    let map = &ds.header.map;
    let n = ds.steps.len();
    let mut records = Vec::with_capacity(n);
    let mut beliefs = Vec::new();

    match kind {
        FilterKind::Hef => {
            let plan = match cfg.bands {
                Some((j, l, b)) => Se2Fft::new(grid, j, l, b)?,
                None => Se2Fft::with_default_bands(grid)?,
            };
            let mut f = HefFilter::new(&plan, cfg.model, prior)?;
            for s in &ds.steps {
                let diag = f.step(&s.u, &s.z, map).map_err(|e| annotate(s.t, e))?;
                records.push(RunRecord {
                    t: s.t,
                    mode: diag.mode,
                    mean: diag.mean,
                    log_z: diag.log_z,
                    nll_gt: Some(-f.bel.log_at(&s.gt)),
                });
                if cfg.dump_beliefs {
                    beliefs.push(f.bel.clone());
                }
            }
        }
        FilterKind::Ekf => {
            let mut b = GaussianBelief::moment_matched(&prior)?;
            for s in &ds.steps {
                b = ekf_step(&b, &cfg.model, &s.u, &s.z, map).map_err(|e| annotate(s.t, e))?;
                records.push(RunRecord {
                    t: s.t,
                    mode: b.mean,
                    mean: b.mean,
                    log_z: 0.0,
                    nll_gt: Some(gaussian_nll(&b, &s.gt)),
                });
                if cfg.dump_beliefs {
                    beliefs.push(gaussian_density_grid(&b, &grid)?);
                }
            }
        }
        FilterKind::HistF => {
            let mut f = HistFilter::new(prior, cfg.model)?;
            for s in &ds.steps {
                f.step(&s.u, &s.z, map).map_err(|e| annotate(s.t, e))?;
                let (mean, _) = f.bel.mean_pose();
                records.push(RunRecord {
                    t: s.t,
                    mode: f.bel.mode_pose(),
                    mean,
                    log_z: 0.0,
                    nll_gt: Some(-f.bel.log_at(&s.gt)),
                });
                if cfg.dump_beliefs {
                    beliefs.push(f.bel.clone());
                }
            }
        }
        FilterKind::Pf => {
            let rng = ChaCha8Rng::seed_from_u64(cfg.pf_seed);
            let mut f =
                ParticleFilter::init_from_density(&prior, cfg.n_particles, cfg.model, rng)?;
            for s in &ds.steps {
                let mode = f.step(&s.u, &s.z, map).map_err(|e| annotate(s.t, e))?;
                let hist = f.set.histogram_density(&grid);
                records.push(RunRecord {
                    t: s.t,
                    mode,
                    mean: f.set.mean(),
                    log_z: 0.0,
                    nll_gt: Some(-hist.log_at(&s.gt)),
                });
                if cfg.dump_beliefs {
                    beliefs.push(hist);
                }
            }
        }
    }
    finish(records, beliefs, &gts)
}
