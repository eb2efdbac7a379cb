//! Closed forms for the Ornstein-Uhlenbeck process observed in white Gaussian noise.
//!
//! All formulas keep the diffusion amplitude `beta` general. With
//! `tau = sqrt(alpha^2 + gamma beta^2)` the filtering and smoothing errors are
//! `(tau - alpha) / gamma` and `beta^2 / (2 tau)`, and the Kalman-Bucy error
//! variance obeys `de/dt = -2 alpha e - gamma e^2 + beta^2`.

use serde::Serialize;

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::model::OuParams;
use crate::roots::bisect;

/// Exponent magnitude beyond which `exp(-x)` is treated as exactly zero.
pub(crate) const EXP_CLAMP: f64 = 700.0;

/// `exp(-x)` for `x >= 0`, clamped to zero past [`EXP_CLAMP`].
pub(crate) fn decay(x: f64) -> f64 {
    if x > EXP_CLAMP {
        0.0
    } else {
        (-x).exp()
    }
}

/// Solution of the scalar Riccati equation from an arbitrary initial variance.
///
/// `rho` is the signed constant `(gamma e0 + alpha + tau) / (gamma e0 + alpha - tau)`.
/// It is `>= 1` when `e0` sits above the steady state and `<= -1` below it. It is
/// infinite when `e0` is exactly the steady state. Evaluation goes through the
/// equivalent form
///
/// `e(t) = e_ss + (e0 - e_ss) E / (1 + (e0 - e_ss)(1 - E) gamma / (2 tau))`, `E = exp(-2 tau t)`,
///
/// which stays finite for `gamma = 0` and for large `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiSolution {
    pub e0: f64,
    pub gamma: f64,
    pub tau_rate: f64,
    pub rho: f64,
    alpha: f64,
    beta: f64,
}

impl RiccatiSolution {
    pub fn new(params: &OuParams, gamma: f64, e0: f64) -> Result<Self> {
        require_non_negative("gamma", gamma)?;
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        require_non_negative("e0", e0)?;
        if !e0.is_finite() {
            return Err(invalid("e0", "must be finite"));
        }
        let tau = params.tau(gamma);
        let a = params.alpha;
        let num = gamma * e0 + a + tau;
        let den = gamma * e0 + a - tau;
        let rho = if den == 0.0 { f64::INFINITY } else { num / den };
        Ok(Self {
            e0,
            gamma,
            tau_rate: tau,
            rho,
            alpha: a,
            beta: params.beta,
        })
    }

    /// Steady state `(tau - alpha)/gamma`, written as `beta^2 / (tau + alpha)`.
    pub fn steady_state(&self) -> f64 {
        self.beta * self.beta / (self.tau_rate + self.alpha)
    }

    /// Error variance after observing for time `t` (`t = inf` gives the steady state).
    pub fn error_at(&self, t: f64) -> f64 {
        let ess = self.steady_state();
        if t == 0.0 {
            return self.e0;
        }
        let big_e = decay(2.0 * self.tau_rate * t);
        let offset = self.e0 - ess;
        ess + offset * big_e / (1.0 + offset * (1.0 - big_e) * self.gamma / (2.0 * self.tau_rate))
    }

    /// `Lambda_t = (rho e^{2 t tau} + 1) / (rho e^{2 t tau} - 1)`, i.e. `(gamma e_t + alpha) / tau`.
    pub fn lambda_at(&self, t: f64) -> f64 {
        (self.gamma * self.error_at(t) + self.alpha) / self.tau_rate
    }
}

/// Error variance `e_t` of the Kalman-Bucy filter started from variance `e0`.
pub fn riccati_error(params: &OuParams, gamma: f64, e0: f64, t: f64) -> Result<f64> {
    require_non_negative("t", t)?;
    Ok(RiccatiSolution::new(params, gamma, e0)?.error_at(t))
}

/// `e_d = Var(X_0 | Y_0^d)`: the one-sided window error started from the prior.
fn one_sided(params: &OuParams, gamma: f64, len: f64) -> Result<f64> {
    riccati_error(params, gamma, params.stationary_variance(), len)
}

/// Fuses two conditionally independent views of `X_0` sharing the prior variance `var0`.
///
/// `1/nu = 1/e_l + 1/e_d - 1/var0`, written as `e_l e_d var0 / (var0 (e_l + e_d) - e_l e_d)`.
pub(crate) fn fuse(e_l: f64, e_d: f64, var0: f64) -> f64 {
    e_l * e_d * var0 / (var0 * (e_l + e_d) - e_l * e_d)
}

/// `nu(l, d, gamma) = Var(X_0 | Y_{-l}^{d})` for `l, d >= 0` (either may be infinite).
pub fn finite_window_error(params: &OuParams, l: f64, d: f64, gamma: f64) -> Result<f64> {
    require_non_negative("l", l)?;
    require_non_negative("d", d)?;
    require_positive("gamma", gamma)?;
    let e_l = one_sided(params, gamma, l)?;
    let e_d = one_sided(params, gamma, d)?;
    Ok(fuse(e_l, e_d, params.stationary_variance()))
}

/// Causal (filtering) error `(sqrt(alpha^2 + snr beta^2) - alpha) / snr`.
pub fn cmmse_ou(params: &OuParams, snr: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    Ok(cmmse_unchecked(params, snr))
}

pub(crate) fn cmmse_unchecked(params: &OuParams, snr: f64) -> f64 {
    // rationalized to stay accurate for small snr
    params.beta * params.beta / (params.tau(snr) + params.alpha)
}

/// Non-causal (smoothing) error `beta^2 / (2 sqrt(alpha^2 + snr beta^2))`.
pub fn mmse_ou(params: &OuParams, snr: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    Ok(mmse_unchecked(params, snr))
}

pub(crate) fn mmse_unchecked(params: &OuParams, snr: f64) -> f64 {
    params.beta * params.beta / (2.0 * params.tau(snr))
}

/// MMSE with lookahead `d` (negative `d` is prediction; `+-inf` return the anchors).
pub fn lmmse_ou(params: &OuParams, snr: f64, d: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    Ok(lmmse_unchecked(params, snr, d))
}

pub(crate) fn lmmse_unchecked(params: &OuParams, snr: f64, d: f64) -> f64 {
    let var0 = params.stationary_variance();
    if d == f64::NEG_INFINITY {
        return var0;
    }
    let c = cmmse_unchecked(params, snr);
    let m = mmse_unchecked(params, snr);
    if d == f64::INFINITY {
        return m;
    }
    if d >= 0.0 {
        let e = decay(2.0 * d * params.tau(snr));
        m + e * (c - m)
    } else {
        let e = decay(2.0 * params.alpha * d.abs());
        e * c + (1.0 - e) * var0
    }
}

/// Normalized convergence ratio `(lmmse(d) - mmse) / (cmmse - mmse)`.
pub fn pd_ratio(params: &OuParams, snr: f64, d: f64) -> Result<f64> {
    require_positive("snr", snr)?;
    require_non_negative("d", d)?;
    let c = cmmse_unchecked(params, snr);
    let m = mmse_unchecked(params, snr);
    if c - m <= 0.0 {
        return Err(Error::DegenerateCase(format!(
            "cmmse ({c}) does not exceed mmse ({m})"
        )));
    }
    // Equal to exp(-2 d tau); evaluated from the definition.
    Ok((lmmse_unchecked(params, snr, d) - m) / (c - m))
}

/// SNR needed at lookahead `d` to match the zero-lookahead error at `snr`, with its limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffResult {
    /// Solution of `lmmse(d, gamma) = cmmse(snr)`.
    pub gamma_star: f64,
    /// `lim_{d -> inf} gamma_star`, where `mmse(gamma_inf) = cmmse(snr)`.
    pub gamma_inf: f64,
    /// Vertical asymptote: `Var(X_0 | X_{d*}) = cmmse(snr)`.
    pub d_star: f64,
}

/// `gamma_inf` in closed form: `mmse(gamma) = c` gives `tau = beta^2 / (2c)`.
pub fn gamma_inf(params: &OuParams, snr: f64) -> Result<f64> {
    let c = cmmse_ou(params, snr)?;
    let b2 = params.beta * params.beta;
    let tau = b2 / (2.0 * c);
    Ok((tau * tau - params.alpha * params.alpha) / b2)
}

/// `d*` in closed form from `var0 (1 - exp(-2 alpha |d*|)) = cmmse(snr)`.
pub fn d_star(params: &OuParams, snr: f64) -> Result<f64> {
    let c = cmmse_ou(params, snr)?;
    let ratio = c / params.stationary_variance();
    Ok((-ratio).ln_1p() / (2.0 * params.alpha))
}

pub fn tradeoff(params: &OuParams, snr: f64, d: f64) -> Result<TradeoffResult> {
    let target = cmmse_ou(params, snr)?;
    let g_inf = gamma_inf(params, snr)?;
    let d_star = d_star(params, snr)?;
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    let residual = |g: f64| lmmse_unchecked(params, g, d) - target;
    let gamma_star = if d == 0.0 {
        snr
    } else if d == f64::INFINITY {
        g_inf
    } else if d > 0.0 {
        // lmmse(d, .) decreases in gamma: above target at gamma_inf, below at snr.
        let lo = g_inf * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        if residual(lo) <= 0.0 {
            // the gap to gamma_inf is below rounding at this lookahead
            lo
        } else {
            bisect(residual, lo, snr)?
        }
    } else {
        if d <= d_star {
            return Err(Error::NoSolution(format!(
                "lookahead {d} is at or below the vertical asymptote d* = {d_star}"
            )));
        }
        let mut hi = snr;
        let mut doublings = 0;
        while residual(hi) > 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 || !hi.is_finite() {
                return Err(Error::NoSolution(format!(
                    "no finite SNR reaches cmmse({snr}) at lookahead {d}"
                )));
            }
        }
        bisect(residual, snr, hi)?
    };
    Ok(TradeoffResult {
        gamma_star,
        gamma_inf: g_inf,
        d_star,
    })
}

/// Parameters of the time-scaled process `X_{a t}`: OU(a alpha, sqrt(a) beta).
pub fn scaled_params(params: &OuParams, a: f64) -> Result<OuParams> {
    require_positive("a", a)?;
    OuParams::with_beta(params.alpha * a, params.beta * a.sqrt())
}

/// `lmmse` of the time-scaled process, computed directly from its own OU law.
///
/// Agrees with `lmmse_ou(params, snr / a, a d)`.
pub fn scaled_process_lmmse(params: &OuParams, a: f64, snr: f64, d: f64) -> Result<f64> {
    lmmse_ou(&scaled_params(params, a)?, snr, d)
}
