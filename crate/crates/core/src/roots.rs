//! Scalar root finding and polynomial roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute residual tolerance used by [`bisect`].
pub const BISECT_TOL: f64 = 1e-12;
/// Iteration cap used by [`bisect`].
pub const BISECT_MAX_ITER: usize = 200;

/// Bisection on `[lo, hi]` for a function whose sign differs at the ends.
///
/// Stops when `|f(x)| <= 1e-12` or the bracket collapses to machine width.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootFindingFailure(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECT_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= BISECT_TOL || mid == lo || mid == hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Evaluates a polynomial with ascending real coefficients at a complex point.
pub fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_derivative(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

/// Strips trailing (highest-order) zero coefficients.
pub fn trim(coeffs: &[f64]) -> &[f64] {
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1] == 0.0 {
        n -= 1;
    }
    &coeffs[..n]
}

/// Roots of a real polynomial given by ascending coefficients.
///
/// Eigenvalues of the companion matrix, each polished by one Newton step.
/// Complex roots come back in conjugate pairs.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs);
    if c.is_empty() {
        return Err(Error::RootFindingFailure("zero polynomial".into()));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eig
        .iter()
        .map(|z| {
            let z = Complex64::new(z.re, z.im);
            let d = poly_eval_derivative(c, z);
            if d.norm() > 0.0 {
                let step = poly_eval(c, z) / d;
                if step.is_finite() {
                    return z - step;
                }
            }
            z
        })
        .collect();
    if roots.iter().any(|z| !z.is_finite()) {
        return Err(Error::RootFindingFailure("non-finite eigenvalue".into()));
    }
    // Snap conjugate pairs back together after polishing.
    for r in roots.iter_mut() {
        if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    let scale: f64 = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for r in &roots {
        let resid = poly_eval(c, *r).norm() / (scale * r.norm().max(1.0).powi(deg as i32));
        if resid > 1e-12 {
            return Err(Error::RootFindingFailure(format!(
                "relative residual {resid:e} at root {r}"
            )));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn quadratic_roots_match_formula() {
        // k(x) for the two-OU example: x^2 - 1.625 x + 0.34765625
        let roots = poly_roots(&[0.347_656_25, -1.625, 1.0]).unwrap();
        let disc = (1.625f64 * 1.625 - 4.0 * 0.347_656_25).sqrt();
        assert_abs_diff_eq!(roots[0].re, (1.625 - disc) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(roots[1].re, (1.625 + disc) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(roots[0].re.sqrt(), 0.503_47, epsilon = 1e-5);
        assert_abs_diff_eq!(roots[1].re.sqrt(), 1.171_12, epsilon = 1e-5);
    }

    #[test]
    fn complex_pairs() {
        // (x^2 + 1)(x - 3)
        let roots = poly_roots(&[-3.0, 1.0, -3.0, 1.0]).unwrap();
        assert_eq!(roots.len(), 3);
        let imag: Vec<f64> = roots.iter().map(|r| r.im).collect();
        assert!(imag.iter().any(|v| (v - 1.0).abs() < 1e-12));
        assert!(imag.iter().any(|v| (v + 1.0).abs() < 1e-12));
    }
}
