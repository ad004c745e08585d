use hef_core::filter::{motion_spectrum, ControlInput, DiffDriveModel};
use hef_core::grid::{DensityGrid, GridSpec};
use hef_core::transform::se2::{Role, Se2Fft};

fn main() {
    let grid = GridSpec::unit_box(50, 50, 32).unwrap();
    let plan = Se2Fft::new(grid, 62, 136, 32).unwrap();
    let (st, sr) = (0.05, 0.4);
    let u = ControlInput { dx: 0.1, dy: 0.03, dtheta: 0.4 };
    let model = DiffDriveModel::new(st, sr).unwrap();

    // same kernel sampled on the grid: Gaussian in (x, y) around (u.dx,
    // u.dy), wrapped Gaussian in theta around u.dtheta
    let mut kd = DensityGrid::from_fn(grid, |x, y, t| {
        let r2 = (x - u.dx).powi(2) + (y - u.dy).powi(2);
        let mut wt = 0.0;
        for k in -3..=3 {
            let dt = t - u.dtheta + k as f64 * std::f64::consts::TAU;
            wt += (-0.5 * (dt / sr).powi(2)).exp();
        }
        (-0.5 * r2 / (st * st)).exp() * wt
    })
    .unwrap();
    kd.normalize().unwrap();

    let sg = plan.analyze(&kd, Role::ProbSpace).unwrap();
    let sc = motion_spectrum(&plan, &model, &u).unwrap();

    let mut worst = 0.0f64;
    let mut at = (0, 0, 0);
    let mut scale = 0.0f64;
    for j in 0..sg.gl_re.shape()[0] {
        for mi in 0..sg.gl_re.shape()[1] {
            for ni in 0..sg.gl_re.shape()[2] {
                let dr = sg.gl_re[[j, mi, ni]] - sc.gl_re[[j, mi, ni]];
                let di = sg.gl_im[[j, mi, ni]] - sc.gl_im[[j, mi, ni]];
                let d = dr.hypot(di);
                scale = scale.max(sg.gl_re[[j, mi, ni]].hypot(sg.gl_im[[j, mi, ni]]));
                if d > worst {
                    worst = d;
                    at = (j, mi, ni);
                }
            }
        }
    }
    let mut dc_worst = 0.0f64;
    for mi in 0..sg.dc.len() {
        dc_worst = dc_worst.max((sg.dc[mi] - sc.dc[mi]).norm());
    }
    println!("gl worst abs diff {worst:.3e} at {at:?} (scale {scale:.3e}), dc worst {dc_worst:.3e}");
    let (j, mi, ni) = at;
    println!(
        "  grid   ({:+.4e}, {:+.4e})\n  closed ({:+.4e}, {:+.4e})",
        sg.gl_re[[j, mi, ni]],
        sg.gl_im[[j, mi, ni]],
        sc.gl_re[[j, mi, ni]],
        sc.gl_im[[j, mi, ni]]
    );
}
