//! Wiener-Hopf factorization and fixed-lag Wiener filtering for stationary Gaussian inputs.
//!
//! With `S_Y = 1 + snr S_X` split as `S_Y^+ S_Y^-`, the non-causal Wiener filter
//! is `H = sqrt(snr) S_X / S_Y^-` acting on the whitened observations. The error
//! with lookahead `d` is `mmse + int_{-inf}^{-d} h(t)^2 dt`.

mod decay;
mod numeric;
mod rational;

pub use num_complex::Complex64;
pub use decay::{decay_rate, DecayFit, DecayKind};
pub use numeric::{factorize_numeric, NumericFactorization, NumericGrid, TabulatedSpectrum};
pub use rational::{
    factorize_rational, lmmse_rational, two_ou_closed_form, wiener_transfer, FactoredSpectrum,
    PartialFractionExpansion, RationalSpectrum,
};

use crate::error::{require_positive, Result};

/// A power spectral density `S_X(omega)`, even in `omega`.
pub trait SpectralDensity {
    fn density(&self, omega: f64) -> f64;

    /// `(1 / 2 pi) int g(S_X(omega)) d omega` over the real line, for `g(0) = 0`.
    fn spectral_mean<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64>;
}

/// Wiener smoothing error `(1 / 2 pi) int S_X / (1 + snr S_X) d omega`.
pub fn wiener_mmse<S: SpectralDensity + ?Sized>(sx: &S, snr: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    sx.spectral_mean(|s| s / (1.0 + snr * s))
}

/// Causal error of a Gaussian input, `(1 / (2 pi snr)) int log(1 + snr S_X) d omega`.
pub fn wiener_cmmse<S: SpectralDensity + ?Sized>(sx: &S, snr: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    Ok(sx.spectral_mean(|s| (snr * s).ln_1p())? / snr)
}
