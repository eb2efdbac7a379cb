//! Information utility of lookahead: `U(t) = I(X_0; Y_0^t | Y_{-inf}^0)` in nats.
//!
//! For a Gaussian input `lmmse(t) = cmmse exp(-2 U(t))`. For OU the utility has a
//! closed form through the Riccati error `e_hat` started from zero (the error of
//! estimating `X_t` when `X_0` is known).

use serde::Serialize;

use crate::error::{invalid, require_non_negative, require_positive, Result};
use crate::model::{LmmseCurve, OuParams};
use crate::ou::{cmmse_unchecked, decay, mmse_unchecked, riccati_error};
use crate::quad::{integrate, QuadTol};

/// Riccati solution from `e_hat(0) = 0`, written with the constant
/// `rho_hat = (tau + alpha) / (tau - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedRiccati {
    pub rho_hat: f64,
    pub gamma: f64,
    tau: f64,
    alpha: f64,
}

impl ConditionedRiccati {
    pub fn new(params: &OuParams, gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        let tau = params.tau(gamma);
        Ok(Self {
            rho_hat: (tau + params.alpha) / (tau - params.alpha),
            gamma,
            tau,
            alpha: params.alpha,
        })
    }

    /// `e_hat(t) = -alpha/gamma + (tau/gamma)(rho_hat E - 1)/(rho_hat E + 1)` with
    /// `E = exp(2 tau t)`, evaluated through `exp(-2 tau t)` so it never overflows.
    pub fn e_hat(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let inv = decay(2.0 * self.tau * t);
        let ratio = (self.rho_hat - inv) / (self.rho_hat + inv);
        (self.tau * ratio - self.alpha) / self.gamma
    }
}

/// `Var(X_t | Y_0^t, X_0)`.
pub fn e_hat_ou(params: &OuParams, gamma: f64, t: f64) -> Result<f64> {
    require_non_negative("t", t)?;
    Ok(ConditionedRiccati::new(params, gamma)?.e_hat(t))
}

/// `U(t) = -1/2 log(E + (1 - E)(tau + alpha) / (2 tau))` with `E = exp(-2 tau t)`.
pub fn utility_ou(params: &OuParams, snr: f64, t: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    require_non_negative("t", t)?;
    let tau = params.tau(snr);
    let e = decay(2.0 * tau * t);
    let floor = (tau + params.alpha) / (2.0 * tau);
    // E + (1 - E) floor = 1 - (1 - E)(1 - floor)
    Ok(-0.5 * (-(1.0 - e) * (1.0 - floor)).ln_1p())
}

/// `U(t) = (snr/2) (t cmmse - int_0^t e_hat(s) ds)`, by adaptive quadrature.
pub fn utility_ou_integral(params: &OuParams, snr: f64, t: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    require_non_negative("t", t)?;
    if !t.is_finite() {
        return Err(invalid("t", "must be finite for the integral form"));
    }
    let ric = ConditionedRiccati::new(params, snr)?;
    let c = cmmse_unchecked(params, snr);
    let gap = integrate(|s| c - ric.e_hat(s), 0.0, t, QuadTol::abs(1e-13))?;
    Ok(0.5 * snr * gap)
}

/// `cmmse exp(-2 U(d))` for `d >= 0`.
pub fn lmmse_from_utility(params: &OuParams, snr: f64, d: f64) -> Result<f64> {
    let u = utility_ou(params, snr, d)?;
    Ok(cmmse_unchecked(params, snr) * (-2.0 * u).exp())
}

/// `U'(t) = (snr/2)(cmmse - e_hat(t))`.
pub fn utility_prime(params: &OuParams, snr: f64, t: f64) -> Result<f64> {
    let e = e_hat_ou(params, snr, t)?;
    Ok(0.5 * snr * (cmmse_unchecked(params, snr) - e))
}

/// Mutual information rate `I(snr) = snr cmmse / 2` (nats per unit time).
pub fn mutual_info_rate(cmmse: f64, snr: f64) -> f64 {
    0.5 * snr * cmmse
}

/// `(1/snr) int_0^snr mmse(g) dg`, the causal error implied by a smoothing-error curve.
pub fn cmmse_from_mmse<F: FnMut(f64) -> f64>(mmse: F, snr: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    Ok(integrate(mmse, 0.0, snr, QuadTol::abs(1e-12))? / snr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoUtilityCurve {
    pub tau_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub u_prime0: f64,
    pub mutual_info_rate: f64,
}

pub fn utility_curve(params: &OuParams, snr: f64, grid: &[f64]) -> Result<InfoUtilityCurve> {
    let u_values = grid
        .iter()
        .map(|&t| utility_ou(params, snr, t))
        .collect::<Result<Vec<_>>>()?;
    let u_prime = grid
        .iter()
        .map(|&t| utility_prime(params, snr, t))
        .collect::<Result<Vec<_>>>()?;
    let c = cmmse_unchecked(params, snr);
    Ok(InfoUtilityCurve {
        tau_grid: grid.to_vec(),
        u_values,
        u_prime,
        u_prime0: 0.5 * snr * c,
        mutual_info_rate: mutual_info_rate(c, snr),
    })
}

/// Checks `lmmse(d) >= N exp(-2 U(d))` at every point with `d >= 0`, up to `1e-9`.
///
/// `n_x0_given_past` is the entropy power of `X_0` given the observed past; the
/// utility is supplied by the caller because it depends on the input law.
pub fn entropy_power_check<U: Fn(f64) -> f64>(curve: &LmmseCurve, n_x0_given_past: f64, utility: U) -> bool {
    curve
        .points
        .iter()
        .filter(|(d, _)| *d >= 0.0)
        .all(|&(d, v)| v >= n_x0_given_past * (-2.0 * utility(d)).exp() - 1e-9)
}

/// The OU steady-state smoothing error reached by the utility as `t -> inf`.
pub fn utility_limit_mmse(params: &OuParams, snr: f64) -> f64 {
    mmse_unchecked(params, snr)
}

/// `e_hat` and the generic Riccati solver started from zero must agree; exposed for checks.
pub fn e_hat_via_riccati(params: &OuParams, gamma: f64, t: f64) -> Result<f64> {
    riccati_error(params, gamma, 0.0, t)
}
