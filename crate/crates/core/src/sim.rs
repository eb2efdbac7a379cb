//! Brute-force oracle: exact OU discretization, discrete Kalman filtering and
//! fixed-lag smoothing (matched or mismatched), and a reproducible Monte Carlo harness.
//!
//! A step of length `step` turns the channel into `y_k = sqrt(snr) step x_k + sqrt(step) w_k`
//! and the OU law into the AR(1) recursion `x_{k+1} = a x_k + sqrt(q) v_k` with
//! `a = exp(-alpha step)` and `q = beta^2 (1 - a^2) / (2 alpha)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::jump::JumpChannelSpec;
use crate::model::OuParams;

/// Monte Carlo settings shared by every simulation routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    /// Independent paths in the first batch.
    pub paths: usize,
    /// Discretization step (time units).
    pub step: f64,
    /// Length of the averaging window on each path (time units).
    pub window: f64,
    /// When set, the path count doubles until the standard error drops below this.
    pub target_stderr: Option<f64>,
    /// Hard cap on the number of paths.
    pub sample_cap: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: 400,
            step: 1e-3,
            window: 20.0,
            target_stderr: None,
            sample_cap: 1 << 20,
        }
    }
}

impl McConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(invalid("paths", format!("need at least 100, got {}", self.paths)));
        }
        require_positive("step", self.step)?;
        require_positive("window", self.window)?;
        if self.sample_cap < self.paths {
            return Err(invalid("sample_cap", "must be at least `paths`"));
        }
        if let Some(t) = self.target_stderr {
            require_positive("target_stderr", t)?;
        }
        Ok(())
    }

    /// OU oracles need a fine grid for their O(step) bias to stay negligible.
    fn validate_ou(&self) -> Result<()> {
        self.validate()?;
        if self.step > 1e-2 {
            return Err(invalid("step", format!("must be <= 1e-2 for OU oracles, got {}", self.step)));
        }
        Ok(())
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub paths: usize,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            paths: 0,
        }
    }

    /// `|self - other|` measured in combined standard errors.
    pub fn z_score(&self, other: &McEstimate) -> f64 {
        (self.value - other.value).abs() / self.stderr.hypot(other.stderr)
    }
}

/// SplitMix64 finalizer, used to derive independent seeds from `(seed, tag)`.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one path: the seed picks the key, the path index picks the stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Runs `per_path` on path indices `[0, n)` and returns the results in index order.
fn run_paths<F>(range: std::ops::Range<usize>, per_path: &F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    range.into_par_iter().map(per_path).collect()
}

/// Averages one scalar per path, growing the sample until `target_stderr` is met.
///
/// Results depend only on the seed and path indices, never on the thread count.
pub fn mc_mean<F>(mc: &McConfig, per_path: F) -> Result<McEstimate>
where
    F: Fn(usize) -> f64 + Sync,
{
    mc.validate()?;
    let mut samples = run_paths(0..mc.paths, &per_path);
    loop {
        let est = summarize(&samples);
        if !est.value.is_finite() {
            return Err(Error::NumericalFailure("non-finite Monte Carlo sample".into()));
        }
        match mc.target_stderr {
            Some(t) if est.stderr > t => {
                let n = samples.len();
                if n >= mc.sample_cap {
                    return Err(Error::McBudgetExceeded(format!(
                        "stderr {:.3e} above target {t:.3e} after {n} paths",
                        est.stderr
                    )));
                }
                let next = (2 * n).min(mc.sample_cap);
                samples.extend(run_paths(n..next, &per_path));
            }
            _ => return Ok(est),
        }
    }
}

fn summarize(samples: &[f64]) -> McEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        paths: samples.len(),
    }
}

/// Exact AR(1) discretization of the OU state and the channel at a fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteKalmanModel {
    pub ar_coeff: f64,
    pub proc_noise: f64,
    pub obs_gain: f64,
    pub obs_noise: f64,
}

/// Steady-state quantities of the discrete Kalman filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Variance of `x_k` given `y_{<k}`.
    pub p_prior: f64,
    /// Variance of `x_k` given `y_{<=k}`.
    pub p_post: f64,
    pub gain: f64,
    pub innov_var: f64,
    /// Closed-loop pole `a (1 - K h)`.
    pub rho: f64,
}

impl DiscreteKalmanModel {
    pub fn from_ou(params: &OuParams, snr: f64, step: f64) -> Result<Self> {
        require_positive("step", step)?;
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(invalid("snr", format!("must be finite and >= 0, got {snr}")));
        }
        let a = (-params.alpha * step).exp();
        // 1 - a^2 via expm1 keeps precision for tiny steps
        let one_minus_a2 = -(-2.0 * params.alpha * step).exp_m1();
        Ok(Self {
            ar_coeff: a,
            proc_noise: params.beta * params.beta * one_minus_a2 / (2.0 * params.alpha),
            obs_gain: snr.sqrt() * step,
            obs_noise: step,
        })
    }

    /// `q / (1 - a^2)`, equal to `beta^2 / (2 alpha)` by construction.
    pub fn stationary_variance(&self) -> f64 {
        self.proc_noise / (1.0 - self.ar_coeff * self.ar_coeff)
    }

    /// Stable closed form of the scalar discrete Riccati fixed point.
    pub fn steady_state(&self) -> SteadyState {
        let (a, q, h, r) = (self.ar_coeff, self.proc_noise, self.obs_gain, self.obs_noise);
        let p_prior = if h == 0.0 {
            self.stationary_variance()
        } else {
            let b = r * (1.0 - a * a) - q * h * h;
            2.0 * q * r / (b + (b * b + 4.0 * h * h * q * r).sqrt())
        };
        let innov_var = h * h * p_prior + r;
        let gain = p_prior * h / innov_var;
        let p_post = (1.0 - gain * h) * p_prior;
        SteadyState {
            p_prior,
            p_post,
            gain,
            innov_var,
            rho: a * (1.0 - gain * h),
        }
    }

    /// Exact error variance of the steady-state fixed-lag smoother with `lag` steps
    /// (`None` for the infinite lag).
    pub fn fixed_lag_variance(&self, lag: Option<u64>) -> f64 {
        let ss = self.steady_state();
        let r2 = ss.rho * ss.rho;
        let sum = match lag {
            None => 1.0 / (1.0 - r2),
            Some(l) => (1.0 - r2.powi(l.min(i32::MAX as u64) as i32)) / (1.0 - r2),
        };
        let c = self.obs_gain * self.ar_coeff * ss.p_post;
        ss.p_post - c * c / ss.innov_var * sum
    }

    /// Steps needed for `rho^n` to fall below `1e-12`.
    pub fn settling_steps(&self) -> usize {
        let rho = self.steady_state().rho.abs();
        if rho <= 0.0 {
            return 1;
        }
        ((1e-12f64).ln() / rho.ln()).ceil().max(1.0) as usize
    }
}

/// A simulated signal and its per-step observations.
#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Simulates `steps` samples of a stationary OU path observed through `model`'s channel.
pub fn simulate_ou<R: Rng + ?Sized>(
    params: &OuParams,
    model: &DiscreteKalmanModel,
    steps: usize,
    rng: &mut R,
) -> OuPath {
    let sd_q = model.proc_noise.sqrt();
    let sd_r = model.obs_noise.sqrt();
    let mut x = Vec::with_capacity(steps);
    let mut y = Vec::with_capacity(steps);
    let mut state = params.stationary_variance().sqrt() * normal(rng);
    for _ in 0..steps {
        x.push(state);
        y.push(model.obs_gain * state + sd_r * normal(rng));
        state = model.ar_coeff * state + sd_q * normal(rng);
    }
    OuPath { x, y }
}

/// Fixed-lag estimates from a steady-state filter run over `y`.
///
/// Entry `k` of the result estimates `x_k` from `y_{<= k + lag}` and is `None`
/// where that window runs past the data. A negative lag means prediction:
/// `a^{|lag|}` times the filtered estimate `|lag|` steps earlier. `lag = None`
/// uses every remaining observation.
pub fn kalman_fixed_lag(model: &DiscreteKalmanModel, y: &[f64], lag: Option<i64>) -> Vec<Option<f64>> {
    let ss = model.steady_state();
    let h = model.obs_gain;
    let a = model.ar_coeff;
    let n = y.len();
    let mut filtered = Vec::with_capacity(n);
    let mut innov = Vec::with_capacity(n);
    let mut prior = 0.0;
    for &obs in y {
        let nu = obs - h * prior;
        let post = prior + ss.gain * nu;
        innov.push(nu);
        filtered.push(post);
        prior = a * post;
    }
    match lag {
        Some(l) if l < 0 => {
            let back = (-l) as usize;
            let factor = a.powi(back.min(i32::MAX as usize) as i32);
            (0..n)
                .map(|k| (k >= back).then(|| factor * filtered[k - back]))
                .collect()
        }
        Some(0) => filtered.into_iter().map(Some).collect(),
        _ => {
            // g[k] = sum_{j>=1} rho^{j-1} nu_{k+j} over the available data
            let mut g = vec![0.0; n];
            for k in (0..n.saturating_sub(1)).rev() {
                g[k] = innov[k + 1] + ss.rho * g[k + 1];
            }
            let coef = h * a * ss.p_post / ss.innov_var;
            match lag {
                None => (0..n).map(|k| Some(filtered[k] + coef * g[k])).collect(),
                Some(l) => {
                    let l = l as usize;
                    let tail = ss.rho.powi(l.min(i32::MAX as usize) as i32);
                    (0..n)
                        .map(|k| {
                            (k + l < n).then(|| filtered[k] + coef * (g[k] - tail * g[k + l]))
                        })
                        .collect()
                }
            }
        }
    }
}

/// Lag in steps for a lookahead `d` (`None` for `+inf`).
fn lag_steps(d: f64, step: f64) -> Result<Option<i64>> {
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    if d == f64::INFINITY {
        return Ok(None);
    }
    if !d.is_finite() {
        return Err(invalid("d", "prediction from the infinite past is the prior; use the closed form"));
    }
    Ok(Some((d / step).round() as i64))
}

/// Monte Carlo fixed-lag MSE of the smoother built for `filter_params` when the
/// signal is actually OU(`true_params`).
///
/// Each path is an independent stationary trajectory: a burn-in long enough for the
/// filter to settle, then `mc.window` time units over which squared errors are averaged.
pub fn fixed_lag_mc(
    true_params: &OuParams,
    filter_params: &OuParams,
    snr: f64,
    d: f64,
    mc: &McConfig,
) -> Result<McEstimate> {
    require_positive("snr", snr)?;
    mc.validate_ou()?;
    let truth = DiscreteKalmanModel::from_ou(true_params, snr, mc.step)?;
    let model = DiscreteKalmanModel::from_ou(filter_params, snr, mc.step)?;
    let lag = lag_steps(d, mc.step)?;
    let settle = model.settling_steps();
    let burn = settle + lag.map_or(0, |l| l.min(0).unsigned_abs() as usize);
    let window = (mc.window / mc.step).round().max(1.0) as usize;
    let ahead = match lag {
        None => settle,
        Some(l) => l.max(0) as usize,
    };
    let total = burn + window + ahead;
    mc_mean(mc, |path| {
        let mut rng = path_rng(mc.seed, path as u64);
        let sim = simulate_ou(true_params, &truth, total, &mut rng);
        let est = kalman_fixed_lag(&model, &sim.y, lag);
        let mut acc = 0.0;
        for k in burn..burn + window {
            let e = sim.x[k] - est[k].expect("window sits inside the data");
            acc += e * e;
        }
        acc / window as f64
    })
}

/// Result of the `simulate` oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub estimate: f64,
    pub stderr: f64,
    pub steps_to_steady_state: usize,
    /// Exact error of the discrete smoother, free of sampling noise.
    pub discrete_exact: f64,
}

/// Matched fixed-lag oracle for OU with its exact discrete counterpart.
pub fn simulate_fixed_lag(params: &OuParams, snr: f64, d: f64, mc: &McConfig) -> Result<SimReport> {
    let est = fixed_lag_mc(params, params, snr, d, mc)?;
    let model = DiscreteKalmanModel::from_ou(params, snr, mc.step)?;
    let lag = lag_steps(d, mc.step)?;
    let discrete_exact = match lag {
        None => model.fixed_lag_variance(None),
        Some(l) if l >= 0 => model.fixed_lag_variance(Some(l as u64)),
        Some(l) => {
            let k = l.unsigned_abs() as i32;
            let a2k = model.ar_coeff.powi(2 * k);
            a2k * model.steady_state().p_post + (1.0 - a2k) * model.stationary_variance()
        }
    };
    Ok(SimReport {
        estimate: est.value,
        stderr: est.stderr,
        steps_to_steady_state: model.settling_steps(),
        discrete_exact,
    })
}

/// A path observed through the SNR-jump channel: gain `sqrt(snr_past) step` up to and
/// including index `zero`, gain `sqrt(gamma_future) step` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gains: Vec<f64>,
    pub zero: usize,
}

pub fn simulate_jump_channel<R: Rng + ?Sized>(
    params: &OuParams,
    jump: &JumpChannelSpec,
    steps_before: usize,
    steps_after: usize,
    step: f64,
    rng: &mut R,
) -> Result<JumpPath> {
    let past = DiscreteKalmanModel::from_ou(params, jump.snr_past, step)?;
    let future = DiscreteKalmanModel::from_ou(params, jump.gamma_future, step)?;
    let n = steps_before + 1 + steps_after;
    let mut path = simulate_ou(params, &past, n, rng);
    let sd_r = step.sqrt();
    let mut gains = vec![past.obs_gain; n];
    for k in steps_before + 1..n {
        gains[k] = future.obs_gain;
        // redraw: the observation noise is independent of the past draw anyway
        path.y[k] = future.obs_gain * path.x[k] + sd_r * normal(rng);
    }
    Ok(JumpPath {
        x: path.x,
        y: path.y,
        gains,
        zero: steps_before,
    })
}

/// Kalman filter with per-step gains followed by a Rauch-Tung-Striebel pass;
/// returns the smoothed estimate of `x[target]` from all of `y`.
///
/// The filter starts at the stationary prior, so the caller provides the burn-in.
fn rts_estimate(model: &DiscreteKalmanModel, prior_var: f64, gains: &[f64], y: &[f64], target: usize) -> f64 {
    let a = model.ar_coeff;
    let q = model.proc_noise;
    let r = model.obs_noise;
    let n = y.len();
    let mut m_post = vec![0.0; n];
    let mut p_post = vec![0.0; n];
    let (mut m, mut p) = (0.0, prior_var);
    for k in 0..n {
        let h = gains[k];
        let s = h * h * p + r;
        let gain = p * h / s;
        m += gain * (y[k] - h * m);
        p *= 1.0 - gain * h;
        m_post[k] = m;
        p_post[k] = p;
        m *= a;
        p = a * a * p + q;
    }
    let mut ms = m_post[n - 1];
    for k in (target..n - 1).rev() {
        let p_pred = a * a * p_post[k] + q;
        let c = p_post[k] * a / p_pred;
        ms = m_post[k] + c * (ms - a * m_post[k]);
    }
    ms
}

/// Monte Carlo estimate of `f(snr, gamma, d, l) = Var(X_d | Y_{-inf}^{d+l})` for OU
/// under the jump channel. One squared error per path.
pub fn jump_f_ou_mc(
    params: &OuParams,
    jump: &JumpChannelSpec,
    d: f64,
    l: f64,
    mc: &McConfig,
) -> Result<McEstimate> {
    mc.validate_ou()?;
    crate::error::require_non_negative("d", d)?;
    crate::error::require_non_negative("l", l)?;
    if !(d.is_finite() && l.is_finite()) {
        return Err(invalid("d, l", "must be finite for simulation"));
    }
    let d_steps = (d / mc.step).round() as usize;
    let after = d_steps + (l / mc.step).round() as usize;
    DiscreteKalmanModel::from_ou(params, jump.snr_past, mc.step)?;
    DiscreteKalmanModel::from_ou(params, jump.gamma_future, mc.step)?;
    mc_mean(mc, |path| {
        let mut rng = path_rng(mc.seed, path as u64);
        jump_path_error(params, jump, d_steps, after, mc.step, &mut rng).expect("parameters validated above")
    })
}

/// One squared error of the jump-channel smoother at `d_steps` after the jump, with
/// `after` steps observed past the jump and a burn-in long enough to forget the prior.
pub(crate) fn jump_path_error<R: Rng + ?Sized>(
    params: &OuParams,
    jump: &JumpChannelSpec,
    d_steps: usize,
    after: usize,
    step: f64,
    rng: &mut R,
) -> Result<f64> {
    let past = DiscreteKalmanModel::from_ou(params, jump.snr_past, step)?;
    let burn = past.settling_steps();
    let sim = simulate_jump_channel(params, jump, burn, after, step, rng)?;
    let target = sim.zero + d_steps;
    let est = rts_estimate(&past, params.stationary_variance(), &sim.gains, &sim.y, target);
    Ok((sim.x[target] - est).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ou(alpha: f64) -> OuParams {
        OuParams::new(alpha).unwrap()
    }

    #[test]
    fn discretization_preserves_stationary_variance() {
        let p = OuParams::with_beta(0.7, 1.3).unwrap();
        for step in [1e-4, 1e-3, 1e-2] {
            let m = DiscreteKalmanModel::from_ou(&p, 1.0, step).unwrap();
            assert_abs_diff_eq!(m.stationary_variance(), p.stationary_variance(), epsilon = 1e-12);
        }
    }

    #[test]
    fn steady_state_solves_riccati() {
        let m = DiscreteKalmanModel::from_ou(&ou(0.5), 1.0, 1e-3).unwrap();
        let ss = m.steady_state();
        let (a, q, h, r) = (m.ar_coeff, m.proc_noise, m.obs_gain, m.obs_noise);
        let next = a * a * (ss.p_prior - ss.p_prior * ss.p_prior * h * h / (h * h * ss.p_prior + r)) + q;
        assert_abs_diff_eq!(next, ss.p_prior, epsilon = 1e-15);
    }

    #[test]
    fn exact_discrete_errors_converge_at_first_order() {
        let p = ou(0.5);
        let c = crate::ou::cmmse_ou(&p, 1.0).unwrap();
        let e1 = DiscreteKalmanModel::from_ou(&p, 1.0, 1e-3).unwrap().fixed_lag_variance(Some(0));
        let e2 = DiscreteKalmanModel::from_ou(&p, 1.0, 2e-3).unwrap().fixed_lag_variance(Some(0));
        let ratio = (e2 - c) / (e1 - c);
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fixed_lag_estimates_match_brute_force_sum() {
        let m = DiscreteKalmanModel::from_ou(&ou(0.5), 1.0, 0.05).unwrap();
        let mut rng = path_rng(3, 0);
        let sim = simulate_ou(&ou(0.5), &m, 200, &mut rng);
        let ss = m.steady_state();
        let lagged = kalman_fixed_lag(&m, &sim.y, Some(7));
        let filt = kalman_fixed_lag(&m, &sim.y, Some(0));
        // direct evaluation of x_{k|k} + sum_j c_j nu_{k+j}
        let mut prior = 0.0;
        let mut innov = Vec::new();
        for &y in &sim.y {
            let nu = y - m.obs_gain * prior;
            innov.push(nu);
            prior = m.ar_coeff * (prior + ss.gain * nu);
        }
        let k = 50;
        let direct: f64 = filt[k].unwrap()
            + (1..=7)
                .map(|j| m.obs_gain * m.ar_coeff * ss.p_post * ss.rho.powi(j - 1) / ss.innov_var * innov[k + j as usize])
                .sum::<f64>();
        assert_abs_diff_eq!(lagged[k].unwrap(), direct, epsilon = 1e-12);
        assert!(lagged[195].is_none());
        let pred = kalman_fixed_lag(&m, &sim.y, Some(-3));
        assert!(pred[2].is_none());
        assert_abs_diff_eq!(pred[10].unwrap(), m.ar_coeff.powi(3) * filt[7].unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn mc_is_deterministic_and_thread_independent() {
        let mc = McConfig {
            paths: 100,
            window: 1.0,
            step: 1e-2,
            ..McConfig::with_seed(11)
        };
        let a = fixed_lag_mc(&ou(0.5), &ou(0.5), 1.0, 0.0, &mc).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fixed_lag_mc(&ou(0.5), &ou(0.5), 1.0, 0.0, &mc).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn matched_and_mismatched_coincide_for_equal_models() {
        let mc = McConfig {
            paths: 100,
            window: 1.0,
            step: 1e-2,
            ..McConfig::with_seed(5)
        };
        let a = fixed_lag_mc(&ou(0.5), &ou(0.5), 1.0, 0.5, &mc).unwrap();
        let b = fixed_lag_mc(&ou(0.5), &OuParams::with_beta(0.5, 1.0).unwrap(), 1.0, 0.5, &mc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn target_stderr_grows_sample_or_fails() {
        let mc = McConfig {
            paths: 100,
            window: 0.5,
            step: 1e-2,
            target_stderr: Some(1e-6),
            sample_cap: 200,
            ..McConfig::with_seed(1)
        };
        let r = fixed_lag_mc(&ou(0.5), &ou(0.5), 1.0, 0.0, &mc);
        assert!(matches!(r, Err(Error::McBudgetExceeded(_))));
    }

    #[test]
    fn config_validation() {
        assert!(McConfig { paths: 10, ..McConfig::default() }.validate().is_err());
        let coarse = McConfig { step: 0.1, ..McConfig::default() };
        assert!(fixed_lag_mc(&ou(0.5), &ou(0.5), 1.0, 0.0, &coarse).is_err());
    }

    #[test]
    fn rts_matches_steady_state_smoother_far_from_edges() {
        let p = ou(0.5);
        let m = DiscreteKalmanModel::from_ou(&p, 1.0, 0.01).unwrap();
        let mut rng = path_rng(9, 0);
        let sim = simulate_ou(&p, &m, 6000, &mut rng);
        let gains = vec![m.obs_gain; sim.y.len()];
        let fl = kalman_fixed_lag(&m, &sim.y, Some(300));
        let target = 3000;
        let rts = rts_estimate(&m, p.stationary_variance(), &gains, &sim.y[..target + 301], target);
        assert_abs_diff_eq!(rts, fl[target].unwrap(), epsilon = 1e-8);
    }
}
