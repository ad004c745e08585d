//! SE(2) group elements and their composition algebra.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// An SE(2) element `(x, y, θ)`; `θ` is always stored in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_02pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid may return TAU when theta is a tiny negative number.
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > std::f64::consts::PI {
        t - TAU
    } else {
        t
    }
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: wrap_02pi(theta) }
    }

    pub fn identity() -> Self {
        Pose { x: 0.0, y: 0.0, theta: 0.0 }
    }

    /// Rigid-body composition: rotate `other`'s translation by `self.theta`,
    /// add translations, add angles mod 2π.
    pub fn compose(&self, other: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    /// Group inverse: `a.compose(a.inverse()) == identity`.
    pub fn inverse(&self) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.theta)
    }

    /// Planar Euclidean distance between the translation parts.
    pub fn planar_distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn compose_pure_translation() {
        let p = Pose::new(1.0, 0.0, 0.0).compose(&Pose::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_quarter_turn() {
        // A quarter turn rotates the x step into +y.
        let p = Pose::new(0.0, 0.0, FRAC_PI_2).compose(&Pose::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let a = Pose::new(0.3, -0.2, 1.1);
        let e = a.compose(&a.inverse());
        assert_abs_diff_eq!(e.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.y, 0.0, epsilon = 1e-12);
        assert!(e.theta < 1e-12 || (TAU - e.theta) < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let i = Pose::identity().inverse();
        assert_eq!((i.x, i.y, i.theta), (0.0, 0.0, 0.0));
        let i = Pose::new(1.0, 0.0, 0.0).inverse();
        assert_abs_diff_eq!(i.x, -1.0, epsilon = 1e-12);
        let i = Pose::new(1.0, 0.0, FRAC_PI_2).inverse();
        assert_abs_diff_eq!(i.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(i.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(i.theta, 3.0 * FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn wrap_conventions() {
        assert_abs_diff_eq!(wrap_02pi(-0.1), TAU - 0.1, epsilon = 1e-12);
        assert_eq!(wrap_02pi(TAU), 0.0);
        assert_eq!(wrap_02pi(-1e-18), 0.0);
        assert_abs_diff_eq!(wrap_pi(PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_pi(PI), PI, epsilon = 1e-12);
    }
}
