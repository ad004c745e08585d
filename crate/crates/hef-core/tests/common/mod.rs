//! Oracles shared by the acceptance suite: random smooth densities for the
//! convolution cross-check and a brute-force Monte Carlo propagation of the
//! banana scenario.

use hef_core::filter::DiffDriveModel;
use hef_core::sim::Dataset;
use hef_core::{DensityGrid, GridSpec, Pose};
use ndarray::Array3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Random smooth density: constant background plus three contained bumps
/// with a von-Mises-like heading factor. The family stays well inside the
/// band limits of the acceptance transform plan, so the direct-quadrature
/// baseline and the spectral pipeline must agree tightly.
pub fn random_bump_density(spec: &GridSpec, rng: &mut ChaCha8Rng) -> DensityGrid {
    let frac = rng.gen_range(0.2..0.3);
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-0.035..0.035),
                rng.gen_range(-0.035..0.035),
                rng.gen_range(0.078..0.088),
                rng.gen_range(0.3..1.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mut d = DensityGrid::from_fn(*spec, |x, y, t| {
        let mut v = 0.0;
        for &(cx, cy, sigma, kappa, t0) in &bumps {
            let r2 = (x - cx).powi(2) + (y - cy).powi(2);
            v += (-r2 / (2.0 * sigma * sigma)).exp() * (kappa * (t - t0).cos()).exp();
        }
        v
    });
    let mass = d.integral();
    let uniform = (1.0 - frac) / spec.total_measure();
    d.values.mapv_inplace(|v| uniform + frac * v / mass);
    d.normalize().expect("positive density");
    d
}

/// Brute-force banana oracle: draw `n` exact prior samples and push each
/// through the noisy motion model for every step of the dataset, then
/// histogram the final poses on the grid.
pub fn mc_rollout_histogram(
    ds: &Dataset,
    model: &DiffDriveModel,
    n: usize,
    seed: u64,
) -> DensityGrid {
    let spec = ds.header.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = Normal::new(0.0, model.sigma_trans).unwrap();
    let nr = Normal::new(0.0, model.sigma_rot).unwrap();
    let mut counts = Array3::<f64>::zeros((spec.nx, spec.ny, spec.ntheta));
    let mut kept = 0usize;
    for _ in 0..n {
        let mut p = ds.header.prior.sample(&mut rng);
        for s in &ds.steps {
            let noisy = Pose::new(
                s.u.dx + nt.sample(&mut rng),
                s.u.dy + nt.sample(&mut rng),
                s.u.dtheta + nr.sample(&mut rng),
            );
            p = p.compose(&noisy);
        }
        if p.x < spec.x_min || p.x >= spec.x_max || p.y < spec.y_min || p.y >= spec.y_max {
            continue; // outside the box: drop (the scenario keeps this rare)
        }
        let (ix, iy, it) = spec.nearest_cell(&p);
        counts[[ix, iy, it]] += 1.0;
        kept += 1;
    }
    assert!(kept as f64 >= 0.999 * n as f64, "MC oracle lost {} of {n} samples", n - kept);
    let mut d = DensityGrid::new(spec, counts).expect("finite counts");
    d.normalize().expect("non-empty histogram");
    d
}
