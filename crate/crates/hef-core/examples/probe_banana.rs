use hef_core::filter::{ControlInput, DiffDriveModel};
use hef_core::grid::{DensityGrid, GridSpec};
use hef_core::group::Pose;
use hef_core::sim::banana_scenario;
use hef_core::transform::se2::Se2Fft;
use ndarray::Array3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn mc(ds: &hef_core::sim::Dataset, model: &DiffDriveModel, n: usize, upto: usize) -> DensityGrid {
    let spec = ds.header.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nt = Normal::new(0.0, model.sigma_trans).unwrap();
    let nr = Normal::new(0.0, model.sigma_rot).unwrap();
    let mut counts = Array3::<f64>::zeros((spec.nx, spec.ny, spec.ntheta));
    for _ in 0..n {
        let mut p = ds.header.prior.sample(&mut rng);
        for s in ds.steps.iter().take(upto) {
            let noisy = Pose::new(
                s.u.dx + nt.sample(&mut rng),
                s.u.dy + nt.sample(&mut rng),
                s.u.dtheta + nr.sample(&mut rng),
            );
            p = p.compose(&noisy);
        }
        if p.x < spec.x_min || p.x >= spec.x_max || p.y < spec.y_min || p.y >= spec.y_max {
            continue;
        }
        let (ix, iy, it) = spec.nearest_cell(&p);
        counts[[ix, iy, it]] += 1.0;
    }
    let mut d = DensityGrid::new(spec, counts).unwrap();
    d.normalize().unwrap();
    d
}

fn main() {
    let grid = GridSpec::unit_box(50, 50, 32).unwrap();
    let (st, sr) = (0.01, 0.02);
    let ds = banana_scenario(grid, 5, 0.1, st, sr).unwrap();
    let model = DiffDriveModel::new(st, sr).unwrap();
    let prior = ds.header.prior.density_grid(&grid).unwrap();
    let o5 = mc(&ds, &model, 1_000_000, 5);
    let controls: Vec<ControlInput> = ds.steps.iter().map(|s| s.u).collect();
    for (nl, np, bn) in [(62, 136, 48), (62, 168, 64), (80, 200, 80)] {
        let t0 = std::time::Instant::now();
        let plan = Se2Fft::new(grid, nl, np, bn).unwrap();
        let rolled =
            hef_core::filter::predict_rollout(&plan, prior.clone(), &model, &controls).unwrap();
        println!(
            "bands ({nl},{np},{bn}): step5 tv {:.4} entropy {:.3} (mc {:.3}) | {:.1}s",
            rolled[5].tv_distance(&o5),
            rolled[5].entropy(),
            o5.entropy(),
            t0.elapsed().as_secs_f64()
        );
    }
}
