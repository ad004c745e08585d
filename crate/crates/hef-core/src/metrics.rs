//! ATE and NLL metrics (§IV) plus the CSV aggregation used for the
//! Table-III-style summaries.

use crate::error::{HefError, Result};
use crate::group::Pose;
use serde::{Deserialize, Serialize};

/// Per-run metrics: ATE of the mode and mean estimators (map units) and
/// mean NLL of the ground truth under the beliefs (nats).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ate_mode: f64,
    pub ate_mode_std: f64,
    pub ate_mean: f64,
    pub nll: f64,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<()> {
        if self.ate_mode < 0.0 || self.ate_mean < 0.0 {
            return Err(HefError::Numeric("negative ATE".into()));
        }
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v.sqrt())
}

/// Aggregate per-step estimator tracks into a report. `nlls` holds the
/// per-step `−ln bel(x_t^GT)` values already evaluated at the nearest grid
/// sample with the ε floor.
pub fn compute_metrics(
    modes: &[Pose],
    means: &[Pose],
    nlls: &[f64],
    gts: &[Pose],
) -> Result<MetricsReport> {
    if modes.len() != gts.len() || means.len() != gts.len() || nlls.len() != gts.len() {
        return Err(HefError::Shape(format!(
            "metric track lengths differ: {} modes, {} means, {} nlls, {} gt",
            modes.len(),
            means.len(),
            nlls.len(),
            gts.len()
        )));
    }
    if gts.is_empty() {
        return Err(HefError::Shape("empty trajectory".into()));
    }
    let mode_err: Vec<f64> = modes.iter().zip(gts).map(|(m, g)| m.planar_distance(g)).collect();
    let mean_err: Vec<f64> = means.iter().zip(gts).map(|(m, g)| m.planar_distance(g)).collect();
    let (ate_mode, ate_mode_std) = mean_std(&mode_err);
    let (ate_mean, _) = mean_std(&mean_err);
    let nll = nlls.iter().sum::<f64>() / nlls.len() as f64;
    let r = MetricsReport { ate_mode, ate_mode_std, ate_mean, nll };
    r.validate()?;
    Ok(r)
}

/// One row of the aggregated metrics CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub filter: String,
    pub seed: u64,
    pub ate_mode: f64,
    pub ate_mean: f64,
    pub nll: f64,
}

/// Render rows as the documented CSV (`filter,seed,ate_mode,ate_mean,nll`).
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("filter,seed,ate_mode,ate_mean,nll\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9}\n",
            r.filter, r.seed, r.ate_mode, r.ate_mean, r.nll
        ));
    }
    out
}

/// Mean ± std of each metric per filter, across seeds.
#[derive(Debug, Clone)]
pub struct FilterSummary {
    pub filter: String,
    pub ate_mode: (f64, f64),
    pub ate_mean: (f64, f64),
    pub nll: (f64, f64),
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<FilterSummary> {
    let mut names: Vec<String> = rows.iter().map(|r| r.filter.clone()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let pick = |f: fn(&MetricsRow) -> f64| {
                let xs: Vec<f64> =
                    rows.iter().filter(|r| r.filter == name).map(f).collect();
                mean_std(&xs)
            };
            FilterSummary {
                ate_mode: pick(|r| r.ate_mode),
                ate_mean: pick(|r| r.ate_mean),
                nll: pick(|r| r.nll),
                filter: name,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn gt_as_estimate_gives_zero_ate() {
        let gts: Vec<Pose> = (0..10).map(|i| Pose::new(0.01 * i as f64, 0.0, 0.1)).collect();
        let nlls = vec![1.0; 10];
        let r = compute_metrics(&gts, &gts, &nlls, &gts).unwrap();
        assert_abs_diff_eq!(r.ate_mode, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.ate_mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nll, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn uniform_belief_nll_closed_form() {
        // NLL per step of a uniform belief on the unit box is ln 2π
        let nll = TAU.ln();
        let gts = vec![Pose::identity(); 4];
        let r = compute_metrics(&gts, &gts, &vec![nll; 4], &gts).unwrap();
        assert_abs_diff_eq!(r.nll, TAU.ln(), epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        let gts = vec![Pose::identity(); 3];
        assert!(compute_metrics(&gts[..2], &gts, &[0.0; 3], &gts).is_err());
    }

    #[test]
    fn csv_and_summary() {
        let rows = vec![
            MetricsRow { filter: "hef".into(), seed: 0, ate_mode: 0.1, ate_mean: 0.2, nll: 1.0 },
            MetricsRow { filter: "hef".into(), seed: 1, ate_mode: 0.3, ate_mean: 0.4, nll: 3.0 },
            MetricsRow { filter: "ekf".into(), seed: 0, ate_mode: 0.5, ate_mean: 0.5, nll: 5.0 },
        ];
        let csv = metrics_csv(&rows);
        assert!(csv.starts_with("filter,seed,ate_mode,ate_mean,nll\n"));
        assert_eq!(csv.lines().count(), 4);
        let sum = summarize(&rows);
        let hef = sum.iter().find(|s| s.filter == "hef").unwrap();
        assert_abs_diff_eq!(hef.ate_mode.0, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(hef.nll.0, 2.0, epsilon = 1e-12);
        assert!(hef.nll.1 > 0.0);
    }
}
