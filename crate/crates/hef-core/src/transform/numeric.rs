//! Small numeric building blocks for the transforms: Gauss–Legendre
//! quadrature rules and split-complex matrix products.

use ndarray::Array2;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre polynomial with the usual
/// Chebyshev-based initial guesses. Accurate to machine precision for the
/// modest orders (< 200) used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess (roots ordered descending in cos argument)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by upward recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto `(a, b)`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// A complex matrix stored as separate real and imaginary parts so products
/// run on the fast real `f64` GEMM.
#[derive(Debug, Clone)]
pub struct CMat {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { re: Array2::zeros((rows, cols)), im: Array2::zeros((rows, cols)) }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    /// `self · rhs` via four real GEMMs.
    pub fn dot(&self, rhs: &CMat) -> CMat {
        CMat {
            re: self.re.dot(&rhs.re) - self.im.dot(&rhs.im),
            im: self.re.dot(&rhs.im) + self.im.dot(&rhs.re),
        }
    }

    /// `self · rhs` for a real right-hand side (two GEMMs).
    pub fn dot_real(&self, rhs: &Array2<f64>) -> CMat {
        CMat { re: self.re.dot(rhs), im: self.im.dot(rhs) }
    }

    /// `selfᴴ · rhs` (conjugate transpose on the left).
    pub fn h_dot(&self, rhs: &CMat) -> CMat {
        let ret = self.re.t();
        let imt = self.im.t();
        CMat {
            re: ret.dot(&rhs.re) + imt.dot(&rhs.im),
            im: ret.dot(&rhs.im) - imt.dot(&rhs.re),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1
        let (xs, ws) = gauss_legendre(5);
        for deg in 0..=9usize {
            let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let want = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(got, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_mapped_interval() {
        let (xs, ws) = gauss_legendre_on(20, 0.0, 3.0);
        let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.exp()).sum();
        assert_abs_diff_eq!(got, 3f64.exp() - 1.0, epsilon = 1e-10);
    }

    #[test]
    fn complex_product_matches_naive() {
        use num_complex::Complex64;
        let a = CMat {
            re: ndarray::array![[1.0, 2.0], [0.5, -1.0]],
            im: ndarray::array![[0.0, 1.0], [2.0, 0.25]],
        };
        let b = CMat {
            re: ndarray::array![[0.3, -2.0], [1.5, 1.0]],
            im: ndarray::array![[1.0, 0.0], [-0.5, 2.0]],
        };
        let c = a.dot(&b);
        for i in 0..2 {
            for j in 0..2 {
                let mut want = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    want += Complex64::new(a.re[[i, k]], a.im[[i, k]])
                        * Complex64::new(b.re[[k, j]], b.im[[k, j]]);
                }
                assert_abs_diff_eq!(c.re[[i, j]], want.re, epsilon = 1e-14);
                assert_abs_diff_eq!(c.im[[i, j]], want.im, epsilon = 1e-14);
            }
        }
    }
}
