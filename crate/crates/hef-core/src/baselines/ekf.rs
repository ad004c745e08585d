//! Extended Kalman filter on (x, y, θ) with diff-drive prediction and
//! range/bearing updates (§IV baseline).

use crate::error::{HefError, Result};
use crate::filter::{ControlInput, DiffDriveModel};
use crate::grid::DensityGrid;
use crate::group::{wrap_02pi, wrap_pi, Pose};
use crate::measurement::{LandmarkMap, Measurement, MeasurementKind};
use nalgebra::{Matrix3, RowVector3, Vector3};

/// Unimodal Gaussian belief over the pose.
#[derive(Debug, Clone)]
pub struct GaussianBelief {
    pub mean: Pose,
    pub cov: Matrix3<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Pose, cov: Matrix3<f64>) -> Result<Self> {
        let b = GaussianBelief { mean, cov };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let asym = (self.cov - self.cov.transpose()).abs().max();
        if asym > 1e-10 {
            return Err(HefError::Numeric(format!("covariance asymmetry {asym}")));
        }
        if self.cov.cholesky().is_none() {
            return Err(HefError::Numeric("covariance not positive definite".into()));
        }
        Ok(())
    }

    /// Moment-matched initialization from a grid density (used when the
    /// scenario prior is non-Gaussian, e.g. the rectangular banana prior).
    pub fn moment_matched(density: &DensityGrid) -> Result<Self> {
        let g = &density.spec;
        let w = g.w();
        let (mut mx, mut my, mut cs, mut sn) = (0.0, 0.0, 0.0, 0.0);
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                for it in 0..g.ntheta {
                    let p = density.values[[ix, iy, it]] * w;
                    mx += p * g.x_at(ix);
                    my += p * g.y_at(iy);
                    cs += p * g.theta_at(it).cos();
                    sn += p * g.theta_at(it).sin();
                }
            }
        }
        let mt = sn.atan2(cs);
        let mut cov = Matrix3::zeros();
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                for it in 0..g.ntheta {
                    let p = density.values[[ix, iy, it]] * w;
                    let d = Vector3::new(
                        g.x_at(ix) - mx,
                        g.y_at(iy) - my,
                        wrap_pi(g.theta_at(it) - mt),
                    );
                    cov += p * d * d.transpose();
                }
            }
        }
        // guard against degenerate directions from a delta-like density
        for i in 0..3 {
            cov[(i, i)] = cov[(i, i)].max(1e-10);
        }
        GaussianBelief::new(Pose::new(mx, my, mt), cov)
    }
}

fn predict(bel: &GaussianBelief, model: &DiffDriveModel, u: &ControlInput) -> GaussianBelief {
    let th = bel.mean.theta;
    let (s, c) = th.sin_cos();
    let mean = bel.mean.compose(&Pose::new(u.dx, u.dy, u.dtheta));
    // Jacobian of the composed pose w.r.t. the previous state
    let f = Matrix3::new(
        1.0,
        0.0,
        -s * u.dx - c * u.dy,
        0.0,
        1.0,
        c * u.dx - s * u.dy,
        0.0,
        0.0,
        1.0,
    );
    let q = Matrix3::from_diagonal(&Vector3::new(
        model.sigma_trans.powi(2),
        model.sigma_trans.powi(2),
        model.sigma_rot.powi(2),
    ));
    GaussianBelief { mean, cov: f * bel.cov * f.transpose() + q }
}

fn update(bel: &GaussianBelief, map: &LandmarkMap, z: &Measurement) -> Result<GaussianBelief> {
    let id = z
        .landmark_id
        .ok_or_else(|| HefError::Config("EKF requires known correspondence".into()))?;
    let lm = map.landmark(id)?;
    let (dx, dy) = (lm.x - bel.mean.x, lm.y - bel.mean.y);
    let d2 = dx * dx + dy * dy;
    let d = d2.sqrt();
    let (h, jac, nu) = match z.kind {
        MeasurementKind::Range => {
            if d < 1e-9 {
                return Err(HefError::Numeric("EKF range update at the landmark".into()));
            }
            let h = d;
            (h, RowVector3::new(-dx / d, -dy / d, 0.0), z.value - h)
        }
        MeasurementKind::Bearing => {
            if d2 < 1e-12 {
                return Err(HefError::Numeric("EKF bearing update at the landmark".into()));
            }
            let h = wrap_pi(dy.atan2(dx) - bel.mean.theta);
            (h, RowVector3::new(dy / d2, -dx / d2, -1.0), wrap_pi(z.value - h))
        }
    };
    let _ = h;
    let s = (jac * bel.cov * jac.transpose())[(0, 0)] + z.sigma * z.sigma;
    if s <= 0.0 || !s.is_finite() {
        return Err(HefError::Numeric(format!("singular innovation covariance {s}")));
    }
    let k = bel.cov * jac.transpose() / s;
    let mean_v = Vector3::new(bel.mean.x, bel.mean.y, bel.mean.theta) + k * nu;
    let cov = (Matrix3::identity() - k * jac) * bel.cov;
    let cov = 0.5 * (cov + cov.transpose());
    Ok(GaussianBelief {
        mean: Pose::new(mean_v[0], mean_v[1], wrap_02pi(mean_v[2])),
        cov,
    })
}

/// One EKF cycle: diff-drive predict, then sequential linearized updates.
pub fn ekf_step(
    bel: &GaussianBelief,
    model: &DiffDriveModel,
    u: &ControlInput,
    measurements: &[Measurement],
    map: &LandmarkMap,
) -> Result<GaussianBelief> {
    let mut b = predict(bel, model, u);
    for z in measurements {
        b = update(&b, map, z)?;
    }
    Ok(b)
}

/// Gaussian NLL of the ground truth under the belief (for metrics).
pub fn gaussian_nll(bel: &GaussianBelief, gt: &Pose) -> f64 {
    let d = Vector3::new(gt.x - bel.mean.x, gt.y - bel.mean.y, wrap_pi(gt.theta - bel.mean.theta));
    let chol = match bel.cov.cholesky() {
        Some(c) => c,
        None => return f64::INFINITY,
    };
    let sol = chol.solve(&d);
    let logdet: f64 = (0..3).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
    0.5 * (d.dot(&sol) + logdet + 3.0 * (2.0 * std::f64::consts::PI).ln())
}
