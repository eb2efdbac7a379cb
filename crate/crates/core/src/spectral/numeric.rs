use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::SpectralDensity;
use crate::error::{invalid, require_positive, Error, Result};
use crate::model::LmmseCurve;
use crate::quad::GaussLegendre;

/// A sampled spectrum, linearly interpolated between samples and zero beyond the grid.
///
/// The grid is uniform and either starts at `omega = 0` (the negative half is
/// implied by symmetry) or is symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSpectrum {
    pub omega_grid: Vec<f64>,
    pub s_values: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn new(omega_grid: Vec<f64>, s_values: Vec<f64>) -> Result<Self> {
        let s = Self {
            omega_grid,
            s_values,
        };
        s.validate()?;
        Ok(s)
    }

    /// Samples `f` at `points` evenly spaced frequencies on `[0, omega_max]`.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, omega_max: f64, points: usize) -> Result<Self> {
        require_positive("omega_max", omega_max)?;
        if points < 2 {
            return Err(invalid("points", "need at least two samples"));
        }
        let omega_grid: Vec<f64> = (0..points)
            .map(|k| omega_max * k as f64 / (points - 1) as f64)
            .collect();
        let s_values = omega_grid.iter().map(|&w| f(w)).collect();
        Self::new(omega_grid, s_values)
    }

    /// `(1 - |omega|)` on `|omega| <= 1`, zero elsewhere.
    pub fn triangular(points: usize) -> Result<Self> {
        Self::from_fn(|w| (1.0 - w.abs()).max(0.0), 1.0, points)
    }

    pub fn validate(&self) -> Result<()> {
        let (w, s) = (&self.omega_grid, &self.s_values);
        if w.len() < 2 {
            return Err(invalid("omega_grid", "need at least two samples"));
        }
        if w.len() != s.len() {
            return Err(invalid("s_values", "must have one value per frequency"));
        }
        if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("s_values", "samples must be finite and non-negative"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("omega_grid", "frequencies must be finite"));
        }
        let h = w[1] - w[0];
        if !(h > 0.0) {
            return Err(invalid("omega_grid", "must be increasing"));
        }
        let span = w[w.len() - 1] - w[0];
        for (k, pair) in w.windows(2).enumerate() {
            if ((pair[1] - pair[0]) - h).abs() > 1e-9 * span.max(1.0) {
                return Err(invalid("omega_grid", format!("not uniform at index {}", k + 1)));
            }
        }
        if w[0] > 1e-12 * span {
            return Err(invalid("omega_grid", "must start at 0 or be symmetric about 0"));
        }
        if w[0] < 0.0 {
            let n = w.len();
            for k in 0..n {
                let (a, b) = (k, n - 1 - k);
                if (w[a] + w[b]).abs() > 1e-9 * span || (s[a] - s[b]).abs() > 1e-12 * s[a].max(s[b]).max(1.0) {
                    return Err(invalid("omega_grid", "spectrum must be symmetric in omega"));
                }
            }
        }
        if s.iter().all(|&v| v == 0.0) {
            return Err(invalid("s_values", "spectrum is identically zero"));
        }
        Ok(())
    }

    fn omega_max(&self) -> f64 {
        *self.omega_grid.last().expect("validated grid")
    }

    /// `R_X(0)`.
    pub fn variance(&self) -> f64 {
        self.spectral_mean(|s| s).expect("piecewise rule has no failure mode")
    }

    /// Reads two-column `omega,s_value` CSV (an optional header line is skipped).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut vals = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(invalid("csv", format!("line {} needs two columns", n + 1))),
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    omega.push(x);
                    vals.push(y);
                }
                _ if omega.is_empty() && n == 0 => continue,
                _ => return Err(invalid("csv", format!("line {} is not numeric", n + 1))),
            }
        }
        Self::new(omega, vals)
    }
}

impl SpectralDensity for TabulatedSpectrum {
    fn density(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let grid = &self.omega_grid;
        if w > self.omega_max() {
            return 0.0;
        }
        let h = grid[1] - grid[0];
        let pos = (w - grid[0]) / h;
        let k = (pos.floor() as usize).min(grid.len() - 2);
        let t = pos - k as f64;
        self.s_values[k] * (1.0 - t) + self.s_values[k + 1] * t
    }

    /// Gauss-Legendre on each grid cell, where the interpolant is linear.
    fn spectral_mean<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let rule = GaussLegendre::new(6);
        let mut total = 0.0;
        for pair in self.omega_grid.windows(2) {
            let (a, b) = (pair[0].max(0.0), pair[1]);
            if b <= 0.0 {
                continue;
            }
            total += rule.integrate(a, b, |w| g(self.density(w)));
        }
        Ok(total / std::f64::consts::PI)
    }
}

/// FFT grid for the cepstral factorization: `points` frequencies on `[-omega_max, omega_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericGrid {
    pub points: usize,
    pub omega_max: f64,
}

impl Default for NumericGrid {
    fn default() -> Self {
        Self {
            points: 1 << 16,
            omega_max: 64.0,
        }
    }
}

impl NumericGrid {
    pub fn validate(&self) -> Result<()> {
        if !self.points.is_power_of_two() || self.points < 16 {
            return Err(invalid("points", format!("must be a power of two >= 16, got {}", self.points)));
        }
        require_positive("omega_max", self.omega_max)
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * self.omega_max / self.points as f64
    }

    /// Time step of the impulse response, `2 pi / (points d_omega)`.
    pub fn dt(&self) -> f64 {
        std::f64::consts::TAU / (self.points as f64 * self.d_omega())
    }
}

/// Sampled Wiener impulse response with the error functionals derived from it.
#[derive(Debug, Clone)]
pub struct NumericFactorization {
    /// Ascending sample times.
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub dt: f64,
    pub mmse: f64,
    pub var0: f64,
    /// RMS of `|S_Y^+|^2 - S_Y` over the grid.
    pub recon_rms: f64,
    /// `cumulative[k] = int_{-inf}^{times[k]} h^2` (trapezoid rule).
    cumulative: Vec<f64>,
}

impl NumericFactorization {
    fn tail(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return 0.0;
        }
        if t >= self.times[n - 1] {
            return self.cumulative[n - 1];
        }
        let pos = (t - self.times[0]) / self.dt;
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        self.cumulative[k] * (1.0 - frac) + self.cumulative[k + 1] * frac
    }

    /// `int h^2` over the whole line.
    pub fn energy(&self) -> f64 {
        *self.cumulative.last().expect("non-empty response")
    }

    pub fn lmmse(&self, d: f64) -> f64 {
        if d == f64::INFINITY {
            self.mmse
        } else if d == f64::NEG_INFINITY {
            self.mmse + self.energy()
        } else {
            self.mmse + self.tail(-d)
        }
    }

    /// `lmmse(0)` of this pipeline.
    pub fn cmmse(&self) -> f64 {
        self.lmmse(0.0)
    }

    /// `p_d` normalized by this pipeline's own `cmmse`, so shared discretization bias cancels.
    pub fn pd(&self, d: f64) -> f64 {
        (self.lmmse(d) - self.mmse) / (self.cmmse() - self.mmse)
    }

    /// `h(t)` by linear interpolation (zero outside the sampled window).
    pub fn h_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return 0.0;
        }
        let pos = (t - self.times[0]) / self.dt;
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        self.h[k] * (1.0 - frac) + self.h[k + 1] * frac
    }

    pub fn curve(&self, grid: &[f64]) -> Result<LmmseCurve> {
        LmmseCurve::sample(grid, self.cmmse(), self.mmse, self.mmse + self.energy(), |d| Ok(self.lmmse(d)))
    }
}

/// Cepstral (minimum-phase) factorization of `S_Y = 1 + snr S_X` on an FFT grid.
///
/// `log S_Y` is transformed to the cepstrum, its causal half kept (the endpoints at
/// half weight), and exponentiated back to give `S_Y^+`. The impulse response of
/// `H = sqrt(snr) S_X / conj(S_Y^+)` follows by one inverse transform.
pub fn factorize_numeric<S: SpectralDensity + ?Sized>(
    sx: &S,
    snr: f64,
    grid: NumericGrid,
) -> Result<NumericFactorization> {
    require_positive("snr", snr)?;
    grid.validate()?;
    let n = grid.points;
    let dw = grid.d_omega();
    let omega = |k: usize| if k < n / 2 { k as f64 * dw } else { (k as f64 - n as f64) * dw };
    let s_x: Vec<f64> = (0..n).map(|k| sx.density(omega(k))).collect();
    if s_x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("spectrum", "samples must be finite and non-negative"));
    }
    let s_y: Vec<f64> = s_x.iter().map(|s| 1.0 + snr * s).collect();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex64> = s_y.iter().map(|s| Complex64::new(s.ln(), 0.0)).collect();
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf[0] *= 0.5;
    buf[n / 2] *= 0.5;
    buf[n / 2 + 1..].iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    forward.process(&mut buf);
    let s_plus: Vec<Complex64> = buf.iter().map(|c| c.exp()).collect();

    let recon_rms = (s_plus
        .iter()
        .zip(&s_y)
        .map(|(p, y)| (p.norm_sqr() - y).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    if !(recon_rms <= 1e-4) {
        return Err(Error::GridResolutionError(format!(
            "|S_Y^+|^2 deviates from S_Y by {recon_rms:e} RMS"
        )));
    }

    let root = snr.sqrt();
    let mut h_buf: Vec<Complex64> = s_x
        .iter()
        .zip(&s_plus)
        .map(|(s, p)| root * s / p.conj())
        .collect();
    inverse.process(&mut h_buf);
    let dt = grid.dt();
    let h_scale = dw / std::f64::consts::TAU;
    // reorder from FFT layout (t >= 0 first) to ascending time
    let half = n / 2;
    let mut times = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for k in (half..n).chain(0..half) {
        let t = if k < half { k as f64 } else { k as f64 - n as f64 } * dt;
        times.push(t);
        h.push(h_buf[k].re * h_scale);
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for k in 1..n {
        acc += 0.5 * (h[k - 1] * h[k - 1] + h[k] * h[k]) * dt;
        cumulative.push(acc);
    }

    let w = dw / std::f64::consts::TAU;
    let mmse = s_x.iter().zip(&s_y).map(|(x, y)| x / y).sum::<f64>() * w;
    let var0 = s_x.iter().sum::<f64>() * w;
    Ok(NumericFactorization {
        times,
        h,
        dt,
        mmse,
        var0,
        recon_rms,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OuParams;
    use crate::ou::{cmmse_ou, lmmse_ou, mmse_ou};
    use crate::spectral::{factorize_rational, wiener_mmse, wiener_transfer, RationalSpectrum};
    use approx::assert_abs_diff_eq;

    #[test]
    fn tabulated_validation_and_interpolation() {
        let t = TabulatedSpectrum::triangular(1025).unwrap();
        assert_abs_diff_eq!(t.density(0.25), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(t.density(-0.25), 0.75, epsilon = 1e-12);
        assert_eq!(t.density(1.5), 0.0);
        assert_abs_diff_eq!(t.variance(), 1.0 / std::f64::consts::TAU * 2.0 * 0.5, epsilon = 1e-12);
        assert!(TabulatedSpectrum::new(vec![0.0, 1.0, 3.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(TabulatedSpectrum::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(TabulatedSpectrum::new(vec![-1.0, 0.0, 1.0], vec![0.5, 1.0, 0.4]).is_err());
        assert!(TabulatedSpectrum::new(vec![-1.0, 0.0, 1.0], vec![0.5, 1.0, 0.5]).is_ok());
    }

    #[test]
    fn csv_ingestion() {
        let t = TabulatedSpectrum::from_csv("omega,s_value\n0,1\n0.5,0.5\n1,0\n").unwrap();
        assert_eq!(t.omega_grid, vec![0.0, 0.5, 1.0]);
        assert!(TabulatedSpectrum::from_csv("0,1\n0.5\n").is_err());
    }

    #[test]
    fn grid_must_be_power_of_two() {
        let t = TabulatedSpectrum::triangular(64).unwrap();
        let bad = NumericGrid {
            points: 1000,
            omega_max: 10.0,
        };
        assert!(factorize_numeric(&t, 1.0, bad).is_err());
    }

    #[test]
    fn ou_impulse_response_matches_rational_pipeline() {
        let p = OuParams::new(0.5).unwrap();
        let sx = RationalSpectrum::ou(&p);
        let num = factorize_numeric(&sx, 1.0, NumericGrid::default()).unwrap();
        assert!(num.recon_rms < 1e-12);
        let f = factorize_rational(&sx, 1.0).unwrap();
        let pfe = wiener_transfer(&sx, &f, 1.0).unwrap();
        let ts: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.02 + 0.001).collect();
        let rms = (ts
            .iter()
            .map(|&t| (num.h_at(t) - pfe.impulse_response(t)).powi(2))
            .sum::<f64>()
            / ts.len() as f64)
            .sqrt();
        assert!(rms < 1e-3, "rms {rms}");
        // the 1/omega^2 tail cut at omega_max costs about 1/(pi omega_max) in R_X(0)
        assert_abs_diff_eq!(num.var0, 1.0, epsilon = 1e-2);
        assert_abs_diff_eq!(num.mmse, mmse_ou(&p, 1.0).unwrap(), epsilon = 1e-2);
        assert_abs_diff_eq!(num.cmmse(), cmmse_ou(&p, 1.0).unwrap(), epsilon = 1e-2);
        assert_abs_diff_eq!(num.lmmse(1.0), lmmse_ou(&p, 1.0, 1.0).unwrap(), epsilon = 1e-2);
        assert_abs_diff_eq!(num.mmse, wiener_mmse(&sx, 1.0).unwrap(), epsilon = 1e-2);
    }

    #[test]
    fn flat_spectrum_is_memoryless() {
        let grid = NumericGrid {
            points: 1 << 12,
            omega_max: 32.0,
        };
        let flat = TabulatedSpectrum::from_fn(|_| 1.0, 40.0, 401).unwrap();
        let num = factorize_numeric(&flat, 1.0, grid).unwrap();
        let peak = num
            .h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert!(num.times[peak].abs() <= num.dt);
    }

    #[test]
    fn numeric_curve_is_monotone() {
        let t = TabulatedSpectrum::triangular(4097).unwrap();
        let num = factorize_numeric(&t, 1.0, NumericGrid::default()).unwrap();
        let grid: Vec<f64> = (0..=60).map(|k| -3.0 + 0.1 * k as f64).collect();
        let c = num.curve(&grid).unwrap();
        c.check_invariants(1e-9).unwrap();
        assert_abs_diff_eq!(num.pd(0.0), 1.0, epsilon = 1e-15);
    }
}
