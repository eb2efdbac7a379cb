//! Mixtures of OU laws and the Gaussian process sharing their spectrum.
//!
//! A mixture draws `alpha ~ mu` once and then runs OU(alpha). Its lookahead error is
//! the `mu`-average of the component errors. The Gaussian process with the same
//! spectrum is never easier to estimate, and any fixed OU smoother gives an upper
//! bound for it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::model::OuParams;
use crate::ou::lmmse_unchecked;
use crate::quad::GaussLegendre;
use crate::sim::{fixed_lag_mc, mix_seed, McConfig, McEstimate};
use crate::spectral::RationalSpectrum;

/// A discrete probability measure on OU rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMeasure {
    pub alphas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MixingMeasure {
    pub fn new(alphas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = Self { alphas, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha], vec![1.0])
    }

    /// Discretizes a continuous measure with density `density` on `[lo, hi]` by
    /// Gauss-Legendre nodes (32 is a sensible default).
    pub fn from_density<F: Fn(f64) -> f64>(lo: f64, hi: f64, nodes: usize, density: F) -> Result<Self> {
        require_positive("lo", lo)?;
        if !(hi > lo && hi.is_finite()) {
            return Err(invalid("hi", "must be finite and above lo"));
        }
        if nodes == 0 {
            return Err(invalid("nodes", "need at least one node"));
        }
        let rule = GaussLegendre::new(nodes);
        let (alphas, mut weights): (Vec<f64>, Vec<f64>) =
            rule.on_interval(lo, hi).map(|(a, w)| (a, w * density(a))).unzip();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(invalid("density", "must integrate to a positive finite mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(alphas, weights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "mixture is empty"));
        }
        if self.alphas.len() != self.weights.len() {
            return Err(invalid("weights", "must have one weight per alpha"));
        }
        for &a in &self.alphas {
            require_positive("alphas", a)?;
        }
        for &w in &self.weights {
            require_positive("weights", w)?;
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("must sum to 1, got {total}")));
        }
        let mut sorted = self.alphas.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("alphas", "must be distinct"));
        }
        Ok(())
    }

    /// `(alpha, weight)` pairs.
    pub fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.alphas.iter().copied().zip(self.weights.iter().copied())
    }

    /// `sum_k w_k / (2 alpha_k)`.
    pub fn stationary_variance(&self) -> f64 {
        self.components().map(|(a, w)| w / (2.0 * a)).sum()
    }

    /// The mixture's own rates plus the geometric mean of every pair.
    pub fn default_beta_grid(&self) -> Vec<f64> {
        let mut grid = self.alphas.clone();
        for (i, a) in self.alphas.iter().enumerate() {
            for b in &self.alphas[i + 1..] {
                grid.push((a * b).sqrt());
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}

fn component(alpha: f64) -> OuParams {
    OuParams {
        alpha,
        beta: 1.0,
        mu: 0.0,
    }
}

/// `sum_k w_k lmmse_{alpha_k}(d, snr)`.
pub fn mixture_lmmse(mix: &MixingMeasure, snr: f64, d: f64) -> Result<f64> {
    mix.validate()?;
    require_positive("snr", snr)?;
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    Ok(mix
        .components()
        .map(|(a, w)| w * lmmse_unchecked(&component(a), snr, d))
        .sum())
}

/// `S(omega) = sum_k w_k / (alpha_k^2 + omega^2)` over a common denominator.
pub fn mixture_spectrum(mix: &MixingMeasure) -> Result<RationalSpectrum> {
    mix.validate()?;
    // polynomials in x = s^2, where alpha^2 + omega^2 = alpha^2 - x
    let factor = |a: f64| vec![a * a, -1.0];
    let mut den = vec![1.0];
    for &a in &mix.alphas {
        den = poly_mul(&den, &factor(a));
    }
    let mut num = vec![0.0; mix.alphas.len()];
    for (k, (_, w)) in mix.components().enumerate() {
        let mut term = vec![w];
        for (j, &a) in mix.alphas.iter().enumerate() {
            if j != k {
                term = poly_mul(&term, &factor(a));
            }
        }
        for (acc, t) in num.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    RationalSpectrum::new(num, den, 1.0)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `R(tau) = sum_k w_k exp(-alpha_k |tau|) / (2 alpha_k)`.
pub fn mixture_autocorr(mix: &MixingMeasure, tau: f64) -> Result<f64> {
    mix.validate()?;
    Ok(mix
        .components()
        .map(|(a, w)| w * (-a * tau.abs()).exp() / (2.0 * a))
        .sum())
}

/// Lower bound on the lookahead error of the Gaussian process with the mixture spectrum.
pub fn gaussian_lower_bound(mix: &MixingMeasure, snr: f64, d: f64) -> Result<f64> {
    mixture_lmmse(mix, snr, d)
}

/// Error of the smoother tuned to OU(`beta_assumed`) applied to OU(`alpha_true`).
pub fn mismatched_lmmse(
    alpha_true: f64,
    beta_assumed: f64,
    snr: f64,
    d: f64,
    mc: &McConfig,
) -> Result<McEstimate> {
    require_positive("alpha_true", alpha_true)?;
    require_positive("beta_assumed", beta_assumed)?;
    if !(d >= 0.0) {
        return Err(invalid("d", format!("must be >= 0, got {d}")));
    }
    fixed_lag_mc(&component(alpha_true), &component(beta_assumed), snr, d, mc)
}

/// Both sides of the bound on the Gaussian process's lookahead error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub upper_stderr: f64,
    /// The smoother rate attaining `upper`.
    pub best_beta: f64,
}

/// `lower` is the mixture error; `upper` minimizes the `mu`-averaged mismatched error
/// over `beta_grid`.
pub fn gaussian_upper_bound(
    mix: &MixingMeasure,
    snr: f64,
    d: f64,
    beta_grid: &[f64],
    mc: &McConfig,
) -> Result<BoundPair> {
    if beta_grid.is_empty() {
        return Err(invalid("beta_grid", "must not be empty"));
    }
    let lower = gaussian_lower_bound(mix, snr, d)?;
    let mut best: Option<(f64, f64, f64)> = None;
    for (bi, &beta) in beta_grid.iter().enumerate() {
        let mut value = 0.0;
        let mut var = 0.0;
        for (ki, (alpha, w)) in mix.components().enumerate() {
            let cfg = McConfig {
                seed: mix_seed(mc.seed, ((bi as u64) << 32) | ki as u64),
                ..*mc
            };
            let est = mismatched_lmmse(alpha, beta, snr, d, &cfg)?;
            value += w * est.value;
            var += (w * est.stderr).powi(2);
        }
        if best.is_none_or(|(v, _, _)| value < v) {
            best = Some((value, var.sqrt(), beta));
        }
    }
    let (upper, upper_stderr, best_beta) = best.expect("grid is non-empty");
    if lower > upper + 3.0 * upper_stderr {
        return Err(Error::NumericalFailure(format!(
            "lower bound {lower} exceeds upper bound {upper} by more than 3 standard errors"
        )));
    }
    Ok(BoundPair {
        lower,
        upper,
        upper_stderr,
        best_beta,
    })
}
