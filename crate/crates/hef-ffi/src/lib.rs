//! C ABI for the harmonic exponential filter: opaque filter handles,
//! integer status codes, and a thread-local last-error message. The header
//! in `include/hef.h` is generated from this file with cbindgen.
//!
//! Conventions:
//!
//! * every function returns [`HefStatus`] (0 = success) unless it cannot
//!   fail; outputs go through pointers supplied by the caller,
//! * poses are `double[3]` as `(x, y, theta)`,
//! * all entry points catch panics and turn them into
//!   [`HefStatus::Panic`] instead of unwinding across the boundary.

use hef_core::filter::{ControlInput, DiffDriveModel, HefFilter};
use hef_core::measurement::{Landmark, LandmarkMap, Measurement, MeasurementKind};
use hef_core::sim::PriorSpec;
use hef_core::transform::se2::Se2Fft;
use hef_core::{GridSpec, HefError, Pose};
use std::cell::RefCell;
use std::os::raw::{c_char, c_double};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HefStatus {
    Ok = 0,
    /// invalid configuration or argument values
    Config = 1,
    /// operand shape/band mismatch
    Shape = 2,
    /// numeric failure (normalization, divergence)
    Numeric = 3,
    Io = 4,
    Parse = 5,
    /// a required pointer argument was null
    NullArg = 6,
    /// internal panic caught at the boundary
    Panic = 7,
}

/// Grid layout shared with the caller; mirrors the Rust `GridSpec`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HefGrid {
    pub nx: usize,
    pub ny: usize,
    pub ntheta: usize,
    pub x_min: c_double,
    pub x_max: c_double,
    pub y_min: c_double,
    pub y_max: c_double,
}

/// One landmark of the known map.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HefLandmark {
    pub id: u32,
    pub x: c_double,
    pub y: c_double,
}

/// One range measurement with known correspondence.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HefRangeMeasurement {
    pub landmark_id: u32,
    pub range: c_double,
    pub sigma: c_double,
}

/// Per-step diagnostics written by `hef_filter_step`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HefStepDiag {
    pub mode: [c_double; 3],
    pub mean: [c_double; 3],
    pub log_z: c_double,
    pub entropy: c_double,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(e: &HefError) -> HefStatus {
    match e {
        HefError::Config(_) => HefStatus::Config,
        HefError::Shape(_) => HefStatus::Shape,
        HefError::Numeric(_) => HefStatus::Numeric,
        HefError::Io(_) => HefStatus::Io,
        HefError::Parse(_) => HefStatus::Parse,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HefError>) -> HefStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HefStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            HefStatus::Panic
        }
    }
}

/// Opaque filter handle: transform plan, motion model, landmark map and
/// the current belief.
///
/// The filter borrows the plan, so the handle keeps the plan on the heap
/// and drops the filter before the plan.
pub struct HefFilterHandle {
    filter: std::mem::ManuallyDrop<HefFilter<'static>>,
    map: LandmarkMap,
    plan: *mut Se2Fft,
}

impl HefFilterHandle {
    fn spec(&self) -> GridSpec {
        self.filter.plan.spec
    }
}

impl Drop for HefFilterHandle {
    fn drop(&mut self) {
        unsafe {
            std::mem::ManuallyDrop::drop(&mut self.filter);
            drop(Box::from_raw(self.plan));
        }
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn hef_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

fn grid_spec(g: &HefGrid) -> Result<GridSpec, HefError> {
    GridSpec::new(g.nx, g.ny, g.ntheta, g.x_min, g.x_max, g.y_min, g.y_max)
}

/// Create a filter with a Gaussian prior. `bands` may be null (defaults
/// chosen from the grid) or point to `{n_lambda, n_psi, band_n}`.
///
/// # Safety
/// `out` must be a valid pointer; `prior_mean`/`prior_sigma` must point to
/// 3 doubles; `bands` to 3 usizes when non-null.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_new(
    grid: HefGrid,
    sigma_trans: c_double,
    sigma_rot: c_double,
    prior_mean: *const c_double,
    prior_sigma: *const c_double,
    bands: *const usize,
    out: *mut *mut HefFilterHandle,
) -> HefStatus {
    if out.is_null() || prior_mean.is_null() || prior_sigma.is_null() {
        set_error("null pointer argument");
        return HefStatus::NullArg;
    }
    guard(|| {
        let spec = grid_spec(&grid)?;
        let plan = if bands.is_null() {
            Se2Fft::with_default_bands(spec)?
        } else {
            let b = std::slice::from_raw_parts(bands, 3);
            Se2Fft::new(spec, b[0], b[1], b[2])?
        };
        let model = DiffDriveModel::new(sigma_trans, sigma_rot)?;
        let m = std::slice::from_raw_parts(prior_mean, 3);
        let s = std::slice::from_raw_parts(prior_sigma, 3);
        let prior = PriorSpec::Gaussian { mean: [m[0], m[1], m[2]], sigma: [s[0], s[1], s[2]] }
            .density_grid(&spec)?;
        let plan: *mut Se2Fft = Box::into_raw(Box::new(plan));
        let filter = match HefFilter::new(&*plan, model, prior) {
            Ok(f) => f,
            Err(e) => {
                drop(Box::from_raw(plan));
                return Err(e);
            }
        };
        *out = Box::into_raw(Box::new(HefFilterHandle {
            filter: std::mem::ManuallyDrop::new(filter),
            map: LandmarkMap::default(),
            plan,
        }));
        Ok(())
    })
}

/// Replace the landmark map used for measurement updates.
///
/// # Safety
/// `landmarks` must point to `len` elements (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn hef_filter_set_map(
    h: *mut HefFilterHandle,
    landmarks: *const HefLandmark,
    len: usize,
) -> HefStatus {
    if h.is_null() || (landmarks.is_null() && len > 0) {
        set_error("null pointer argument");
        return HefStatus::NullArg;
    }
    guard(|| {
        let lms = if len == 0 {
            vec![]
        } else {
            std::slice::from_raw_parts(landmarks, len)
                .iter()
                .map(|l| Landmark { id: l.id, x: l.x, y: l.y })
                .collect()
        };
        (*h).map = LandmarkMap::new(lms)?;
        Ok(())
    })
}

/// One predict/update cycle: control `u = {dx, dy, dtheta}` in the body
/// frame, then fold `len` range measurements. `diag` may be null.
///
/// # Safety
/// `h` must come from `hef_filter_new`; `u` must point to 3 doubles;
/// `measurements` to `len` elements when `len > 0`.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_step(
    h: *mut HefFilterHandle,
    u: *const c_double,
    measurements: *const HefRangeMeasurement,
    len: usize,
    diag: *mut HefStepDiag,
) -> HefStatus {
    if h.is_null() || u.is_null() || (measurements.is_null() && len > 0) {
        set_error("null pointer argument");
        return HefStatus::NullArg;
    }
    guard(|| {
        let hh = &mut *h;
        let uu = std::slice::from_raw_parts(u, 3);
        let control = ControlInput { dx: uu[0], dy: uu[1], dtheta: uu[2] };
        let zs: Vec<Measurement> = if len == 0 {
            vec![]
        } else {
            std::slice::from_raw_parts(measurements, len)
                .iter()
                .map(|z| Measurement {
                    kind: MeasurementKind::Range,
                    value: z.range,
                    landmark_id: Some(z.landmark_id),
                    sigma: z.sigma,
                })
                .collect()
        };
        let d = hh.filter.step(&control, &zs, &hh.map)?;
        if !diag.is_null() {
            *diag = HefStepDiag {
                mode: [d.mode.x, d.mode.y, d.mode.theta],
                mean: [d.mean.x, d.mean.y, d.mean.theta],
                log_z: d.log_z,
                entropy: d.entropy,
            };
        }
        Ok(())
    })
}

/// Number of doubles in the belief buffer (`nx * ny * ntheta`).
///
/// # Safety
/// `h` must come from `hef_filter_new`.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_belief_len(h: *const HefFilterHandle) -> usize {
    if h.is_null() {
        return 0;
    }
    let s = (*h).spec();
    s.nx * s.ny * s.ntheta
}

/// Copy the current belief density (row-major over x, y, θ) into `buf`.
///
/// # Safety
/// `buf` must point to at least `hef_filter_belief_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_belief(
    h: *const HefFilterHandle,
    buf: *mut c_double,
    len: usize,
) -> HefStatus {
    if h.is_null() || buf.is_null() {
        set_error("null pointer argument");
        return HefStatus::NullArg;
    }
    guard(|| {
        let hh = &*h;
        let bel = &hh.filter.bel;
        let need = bel.values.len();
        if len < need {
            return Err(HefError::Shape(format!("belief buffer holds {len}, need {need}")));
        }
        for (i, v) in bel.values.iter().enumerate() {
            *buf.add(i) = *v;
        }
        Ok(())
    })
}

/// Log belief density at a pose `{x, y, theta}` (floored, never −inf).
///
/// # Safety
/// `pose` must point to 3 doubles and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_log_at(
    h: *const HefFilterHandle,
    pose: *const c_double,
    out: *mut c_double,
) -> HefStatus {
    if h.is_null() || pose.is_null() || out.is_null() {
        set_error("null pointer argument");
        return HefStatus::NullArg;
    }
    guard(|| {
        let p = std::slice::from_raw_parts(pose, 3);
        let hh = &*h;
        *out = hh.filter.bel.log_at(&Pose::new(p[0], p[1], p[2]));
        Ok(())
    })
}

/// Destroy a filter handle. Null is a no-op.
///
/// # Safety
/// `h` must come from `hef_filter_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hef_filter_free(h: *mut HefFilterHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> HefGrid {
        HefGrid { nx: 16, ny: 16, ntheta: 8, x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 }
    }

    #[test]
    fn lifecycle_and_step() {
        unsafe {
            let mut h: *mut HefFilterHandle = std::ptr::null_mut();
            let mean = [0.0, 0.0, 0.0];
            let sigma = [0.08, 0.08, 0.3];
            let st = hef_filter_new(
                grid(),
                0.01,
                0.05,
                mean.as_ptr(),
                sigma.as_ptr(),
                std::ptr::null(),
                &mut h,
            );
            assert_eq!(st, HefStatus::Ok);

            let lms = [HefLandmark { id: 0, x: 0.2, y: 0.0 }];
            assert_eq!(hef_filter_set_map(h, lms.as_ptr(), 1), HefStatus::Ok);

            let u = [0.02, 0.0, 0.1];
            let z = [HefRangeMeasurement { landmark_id: 0, range: 0.18, sigma: 0.02 }];
            let mut diag = HefStepDiag {
                mode: [0.0; 3],
                mean: [0.0; 3],
                log_z: 0.0,
                entropy: 0.0,
            };
            assert_eq!(hef_filter_step(h, u.as_ptr(), z.as_ptr(), 1, &mut diag), HefStatus::Ok);
            assert!(diag.log_z.is_finite());
            assert!(diag.mode.iter().all(|v| v.is_finite()));

            let n = hef_filter_belief_len(h);
            assert_eq!(n, 16 * 16 * 8);
            let mut buf = vec![0.0; n];
            assert_eq!(hef_filter_belief(h, buf.as_mut_ptr(), n), HefStatus::Ok);
            let cell = {
                let s = (*h).spec();
                s.dx() * s.dy() * s.dtheta()
            };
            let mass: f64 = buf.iter().sum::<f64>() * cell;
            assert!((mass - 1.0).abs() < 1e-6, "belief mass {mass}");

            let pose = [0.0, 0.0, 0.1];
            let mut lp = 0.0;
            assert_eq!(hef_filter_log_at(h, pose.as_ptr(), &mut lp), HefStatus::Ok);
            assert!(lp.is_finite());

            hef_filter_free(h);
        }
    }

    #[test]
    fn errors_reported_with_message() {
        unsafe {
            let mut h: *mut HefFilterHandle = std::ptr::null_mut();
            let mean = [0.0, 0.0, 0.0];
            let sigma = [0.08, 0.08, 0.3];
            let bad = HefGrid { nx: 0, ..grid() };
            let st = hef_filter_new(
                bad,
                0.01,
                0.05,
                mean.as_ptr(),
                sigma.as_ptr(),
                std::ptr::null(),
                &mut h,
            );
            assert_eq!(st, HefStatus::Config);
            let mut buf = [0i8; 256];
            let n = hef_last_error_message(buf.as_mut_ptr(), buf.len());
            assert!(n > 0);

            // null output pointer
            assert_eq!(
                hef_filter_new(
                    grid(),
                    0.01,
                    0.05,
                    mean.as_ptr(),
                    sigma.as_ptr(),
                    std::ptr::null(),
                    std::ptr::null_mut()
                ),
                HefStatus::NullArg
            );
        }
    }
}
