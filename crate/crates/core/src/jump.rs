//! Observation with an SNR jump at time 0: SNR `snr_past` on `(-inf, 0]` and
//! `gamma_future` afterwards. `f(snr, gamma, d, l) = Var(X_d | Y_{-inf}^{d+l})`.
//!
//! Averaging `f(snr, G, T - L, L)` over `G ~ U[0, snr]`, `L ~ U[0, T]` gives back
//! `cmmse(snr)` for every stationary input and every `T`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::markov::{hmm_path_statistic, Dtmc, HmmEstimator, HmmLayout};
use crate::mixture::MixingMeasure;
use crate::model::{OuParams, ProcessSpec};
use crate::ou::{cmmse_unchecked, fuse, riccati_error};
use crate::quad::GaussLegendre;
use crate::sim::{jump_path_error, mc_mean, mix_seed, path_rng, DiscreteKalmanModel, McConfig, McEstimate};

/// Symbols of fully observed past kept by the chain simulation.
const JUMP_HISTORY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpChannelSpec {
    pub snr_past: f64,
    /// SNR after the jump. Zero is allowed and means the future is unobserved.
    pub gamma_future: f64,
    pub horizon_t: f64,
}

impl JumpChannelSpec {
    pub fn new(snr_past: f64, gamma_future: f64, horizon_t: f64) -> Result<Self> {
        let s = Self {
            snr_past,
            gamma_future,
            horizon_t,
        };
        s.validate()?;
        Ok(s)
    }

    /// No jump: the same SNR on both sides.
    pub fn stationary(snr: f64) -> Result<Self> {
        Self::new(snr, snr, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("snr_past", self.snr_past)?;
        require_non_negative("gamma_future", self.gamma_future)?;
        require_positive("horizon_t", self.horizon_t)?;
        if !(self.snr_past.is_finite() && self.gamma_future.is_finite() && self.horizon_t.is_finite()) {
            return Err(invalid("jump", "SNRs and horizon must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpError {
    pub d: f64,
    pub l: f64,
    pub value: f64,
}

/// `f` for an OU input.
///
/// The causal error at `d` comes from the Riccati equation at SNR `gamma_future`
/// started from `cmmse(snr_past)`; the error from `(d, d + l]` alone comes from the
/// same equation started from the prior. The two views of `X_d` are conditionally
/// independent given `X_d`, so they fuse as `1/f = 1/e_fwd + 1/e_bwd - 1/R_X(0)`.
pub fn jump_f_ou(params: &OuParams, jump: &JumpChannelSpec, d: f64, l: f64) -> Result<JumpError> {
    params.validate()?;
    jump.validate()?;
    require_non_negative("d", d)?;
    require_non_negative("l", l)?;
    if !d.is_finite() {
        return Err(invalid("d", "must be finite"));
    }
    let var0 = params.stationary_variance();
    let start = cmmse_unchecked(params, jump.snr_past);
    let e_fwd = riccati_error(params, jump.gamma_future, start, d)?;
    let e_bwd = riccati_error(params, jump.gamma_future, var0, l)?;
    Ok(JumpError {
        d,
        l,
        value: fuse(e_fwd, e_bwd, var0),
    })
}

/// Tensor Gauss-Legendre settings: start at `nodes` per axis and double until two
/// successive results agree within `tol`, giving up past `max_nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            nodes: 16,
            max_nodes: 256,
            tol: 1e-6,
        }
    }
}

impl QuadConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.max_nodes < self.nodes {
            return Err(invalid("nodes", "need 2 <= nodes <= max_nodes"));
        }
        require_positive("tol", self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// `cmmse(snr)`.
    pub lhs: f64,
    /// `(1/(T snr)) int_0^snr int_0^T f(snr, g, T - l, l) dl dg`.
    pub rhs: f64,
    pub abs_err: f64,
    /// Nodes per axis of the accepted rule.
    pub nodes: usize,
}

fn tensor_average<F: FnMut(f64, f64) -> Result<f64>>(snr: f64, t: f64, n: usize, mut f: F) -> Result<f64> {
    let rule = GaussLegendre::new(n);
    let mut total = 0.0;
    for (g, wg) in rule.on_interval(0.0, snr) {
        for (l, wl) in rule.on_interval(0.0, t) {
            total += wg * wl * f(g, l)?;
        }
    }
    Ok(total / (t * snr))
}

/// Checks the averaged jump-channel identity for OU by tensor quadrature.
pub fn theorem1_check(params: &OuParams, snr: f64, t: f64, quad: &QuadConfig) -> Result<Theorem1Report> {
    params.validate()?;
    require_positive("snr", snr)?;
    require_positive("T", t)?;
    quad.validate()?;
    let f = |g: f64, l: f64| -> Result<f64> {
        let jump = JumpChannelSpec::new(snr, g, t)?;
        Ok(jump_f_ou(params, &jump, (t - l).max(0.0), l)?.value)
    };
    let mut n = quad.nodes;
    let mut prev = tensor_average(snr, t, n, f)?;
    loop {
        let next_n = 2 * n;
        if next_n > quad.max_nodes {
            return Err(Error::QuadratureFailure(format!(
                "no agreement within {:e} up to {} nodes per axis",
                quad.tol, quad.max_nodes
            )));
        }
        let next = tensor_average(snr, t, next_n, f)?;
        let converged = (next - prev).abs() <= quad.tol;
        prev = next;
        n = next_n;
        if converged {
            break;
        }
    }
    let lhs = cmmse_unchecked(params, snr);
    Ok(Theorem1Report {
        lhs,
        rhs: prev,
        abs_err: (lhs - prev).abs(),
        nodes: n,
    })
}

/// Monte Carlo `f` for any supported process.
///
/// OU and OU mixtures are simulated on the exact discrete grid and smoothed with a
/// time-varying Kalman filter (a mixture draws its rate per path and uses the matched
/// filter). Chain processes go through the hidden-Markov forward-backward recursion.
pub fn jump_f_mc(spec: &ProcessSpec, jump: &JumpChannelSpec, d: f64, l: f64, mc: &McConfig) -> Result<McEstimate> {
    jump.validate()?;
    require_non_negative("d", d)?;
    require_non_negative("l", l)?;
    if !(d.is_finite() && l.is_finite()) {
        return Err(invalid("d, l", "must be finite for simulation"));
    }
    match spec {
        ProcessSpec::Ou(p) => crate::sim::jump_f_ou_mc(p, jump, d, l, mc),
        ProcessSpec::OuMixture(m) => mixture_jump_mc(m, jump, d, l, mc),
        ProcessSpec::ShiftedMarkov(c) => chain_jump_mc(c, jump, d, l, mc),
        _ => Err(invalid(
            "process",
            "jump-channel simulation supports OU, OU mixtures and shifted Markov chains",
        )),
    }
}

fn mixture_jump_mc(m: &MixingMeasure, jump: &JumpChannelSpec, d: f64, l: f64, mc: &McConfig) -> Result<McEstimate> {
    m.validate()?;
    mc.validate()?;
    let components: Vec<OuParams> = m.alphas.iter().map(|&a| OuParams::new(a)).collect::<Result<_>>()?;
    for p in &components {
        DiscreteKalmanModel::from_ou(p, jump.snr_past, mc.step)?;
        DiscreteKalmanModel::from_ou(p, jump.gamma_future, mc.step)?;
    }
    let cdf: Vec<f64> = m
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let d_steps = (d / mc.step).round() as usize;
    let after = d_steps + (l / mc.step).round() as usize;
    mc_mean(mc, |path| {
        let mut rng = path_rng(mc.seed, path as u64);
        let u: f64 = rng.random();
        let k = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
        jump_path_error(&components[k], jump, d_steps, after, mc.step, &mut rng).expect("parameters validated above")
    })
}

/// Symbol `k` covers `[u - 1 + k, u + k)` where `u` is uniform: the time left in the
/// symbol straddling 0. Each symbol gets its exposure before and after the jump.
fn chain_jump_layout(u: f64, jump: &JumpChannelSpec, d: f64, l: f64) -> HmmLayout {
    let end = d + l;
    let first = -(JUMP_HISTORY as i64);
    let last = (end - u + 1.0).floor() as i64;
    let target_k = (d - u + 1.0).floor() as i64;
    let overlap = |a: f64, b: f64, lo: f64, hi: f64| (b.min(hi) - a.max(lo)).max(0.0);
    let symbols = (first..=last)
        .map(|k| {
            let (a, b) = (u - 1.0 + k as f64, u + k as f64);
            vec![
                (overlap(a, b, f64::NEG_INFINITY, 0.0), jump.snr_past),
                (overlap(a, b, 0.0, end), jump.gamma_future),
            ]
        })
        .collect();
    HmmLayout {
        symbols,
        target: (target_k - first) as usize,
    }
}

fn chain_jump_mc(chain: &Dtmc, jump: &JumpChannelSpec, d: f64, l: f64, mc: &McConfig) -> Result<McEstimate> {
    chain.validate()?;
    mc.validate()?;
    mc_mean(mc, |path| {
        let mut rng = path_rng(mc.seed, path as u64);
        let u: f64 = rng.random();
        let layout = chain_jump_layout(u, jump, d, l);
        hmm_path_statistic(chain, &layout, HmmEstimator::PosteriorVariance, &mut rng)
    })
}

/// Monte Carlo version of the averaged identity: every tensor node gets its own seed.
pub fn theorem1_mc(spec: &ProcessSpec, snr: f64, t: f64, nodes: usize, mc: &McConfig) -> Result<McEstimate> {
    require_positive("snr", snr)?;
    require_positive("T", t)?;
    if nodes < 1 {
        return Err(invalid("nodes", "must be at least 1"));
    }
    let rule = GaussLegendre::new(nodes);
    let scale = 1.0 / (t * snr);
    let (mut value, mut var) = (0.0, 0.0);
    let mut tag = 0u64;
    for (g, wg) in rule.on_interval(0.0, snr) {
        for (l, wl) in rule.on_interval(0.0, t) {
            let cfg = McConfig {
                seed: mix_seed(mc.seed, tag),
                ..*mc
            };
            tag += 1;
            let jump = JumpChannelSpec::new(snr, g, t)?;
            let est = jump_f_mc(spec, &jump, (t - l).max(0.0), l, &cfg)?;
            let w = wg * wl * scale;
            value += w * est.value;
            var += (w * est.stderr).powi(2);
        }
    }
    Ok(McEstimate {
        value,
        stderr: var.sqrt(),
        paths: mc.paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou::{cmmse_ou, lmmse_ou, mmse_ou};
    use approx::assert_abs_diff_eq;

    fn ou(alpha: f64) -> OuParams {
        OuParams::new(alpha).unwrap()
    }

    #[test]
    fn reductions_without_jump() {
        let p = ou(0.5);
        let j = JumpChannelSpec::stationary(1.0).unwrap();
        for d in [0.0, 0.3, 2.0] {
            assert_abs_diff_eq!(jump_f_ou(&p, &j, d, 0.0).unwrap().value, cmmse_ou(&p, 1.0).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(jump_f_ou(&p, &j, d, f64::INFINITY).unwrap().value, mmse_ou(&p, 1.0).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(jump_f_ou(&p, &j, d, 0.7).unwrap().value, lmmse_ou(&p, 1.0, 0.7).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn stationarity_restored_without_jump() {
        let p = OuParams::with_beta(1.3, 0.8).unwrap();
        let j = JumpChannelSpec::stationary(2.5).unwrap();
        for l in [0.0, 0.1, 1.0, 4.0] {
            let base = jump_f_ou(&p, &j, 0.0, l).unwrap().value;
            for d in [0.2, 1.0, 7.0] {
                assert!((jump_f_ou(&p, &j, d, l).unwrap().value - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_window_and_future_snr() {
        let p = ou(0.5);
        for d in [0.0, 0.5, 2.0] {
            let mut prev_g = f64::INFINITY;
            for g in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
                let j = JumpChannelSpec::new(1.0, g, 1.0).unwrap();
                let mut prev_l = f64::INFINITY;
                for l in [0.0, 0.1, 0.5, 1.0, 3.0] {
                    let v = jump_f_ou(&p, &j, d, l).unwrap().value;
                    assert!(v <= prev_l + 1e-15);
                    assert!(v > 0.0 && v <= p.stationary_variance());
                    prev_l = v;
                }
                let v = jump_f_ou(&p, &j, d, 0.5).unwrap().value;
                assert!(v <= prev_g + 1e-15);
                prev_g = v;
            }
        }
    }

    #[test]
    fn unobserved_future_is_prediction() {
        let p = ou(0.5);
        let j = JumpChannelSpec::new(1.0, 0.0, 1.0).unwrap();
        let v = jump_f_ou(&p, &j, 1.0, 3.0).unwrap().value;
        assert_abs_diff_eq!(v, lmmse_ou(&p, 1.0, -1.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn identity_by_quadrature() {
        for (alpha, snr, t) in [(0.5, 1.0, 2.0), (0.5, 0.1, 5.0), (1.0, 0.3, 1.0)] {
            let r = theorem1_check(&ou(alpha), snr, t, &QuadConfig::with_nodes(64)).unwrap();
            assert!(r.abs_err < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn identity_at_short_horizon() {
        let p = ou(0.5);
        let r = theorem1_check(&p, 1.0, 1e-3, &QuadConfig::default()).unwrap();
        assert!(r.abs_err < 1e-3, "{r:?}");
    }

    #[test]
    fn identity_for_random_parameters() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let alpha = rng.random_range(0.1..3.0);
            let snr = rng.random_range(0.1..5.0);
            let t = rng.random_range(0.2..5.0);
            let r = theorem1_check(&ou(alpha), snr, t, &QuadConfig::default()).unwrap();
            assert!(r.abs_err < 1e-5, "alpha {alpha} snr {snr} T {t}: {r:?}");
        }
    }

    #[test]
    fn quadrature_budget() {
        let q = QuadConfig {
            nodes: 2,
            max_nodes: 2,
            tol: 1e-6,
        };
        assert!(matches!(theorem1_check(&ou(0.5), 1.0, 2.0, &q), Err(Error::QuadratureFailure(_))));
    }

    #[test]
    fn simulation_matches_closed_form() {
        let p = ou(0.5);
        let j = JumpChannelSpec::new(1.0, 2.0, 1.0).unwrap();
        let mc = McConfig {
            step: 2e-3,
            ..McConfig::with_seed(5)
        };
        let est = jump_f_mc(&ProcessSpec::Ou(p), &j, 0.5, 0.5, &mc).unwrap();
        let exact = jump_f_ou(&p, &j, 0.5, 0.5).unwrap().value;
        assert!((est.value - exact).abs() < 3.0 * est.stderr + 2e-3, "{est:?} vs {exact}");
    }

    #[test]
    fn single_component_mixture_is_ou() {
        let j = JumpChannelSpec::new(1.0, 0.5, 1.0).unwrap();
        let mc = McConfig {
            step: 5e-3,
            ..McConfig::with_seed(9)
        };
        let a = jump_f_mc(&ProcessSpec::Ou(ou(0.8)), &j, 0.2, 0.3, &mc).unwrap();
        let b = jump_f_mc(&ProcessSpec::OuMixture(MixingMeasure::single(0.8).unwrap()), &j, 0.2, 0.3, &mc).unwrap();
        // the mixture path consumes one extra uniform, so the two are independent draws
        assert!(a.z_score(&b) < 4.0, "{a:?} {b:?}");
    }

    #[test]
    fn chain_layout_places_target() {
        let j = JumpChannelSpec::new(1.0, 2.0, 1.0).unwrap();
        let lay = chain_jump_layout(0.3, &j, 0.5, 0.9);
        let target = &lay.symbols[lay.target];
        // symbol [0.3, 1.3) holds d = 0.5 and is seen after the jump up to d + l = 1.4
        assert_abs_diff_eq!(target[0].0, 0.0);
        assert_abs_diff_eq!(target[1].0, 1.0, epsilon = 1e-12);
        let straddling = &lay.symbols[lay.target - 1];
        assert_abs_diff_eq!(straddling[0].0, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(straddling[1].0, 0.3, epsilon = 1e-12);
        let last = lay.symbols.last().unwrap();
        assert_abs_diff_eq!(last[1].0, 0.1, epsilon = 1e-12);
        let total: f64 = lay.symbols.iter().map(|s| s[1].0).sum();
        assert_abs_diff_eq!(total, 1.4, epsilon = 1e-12);
    }

    #[test]
    fn chain_identity_matches_causal_error() {
        use crate::markov::{lmmse_shifted, HmmOptions};
        let chain = Dtmc::example();
        let mc = McConfig {
            paths: 1000,
            ..McConfig::with_seed(21)
        };
        let avg = theorem1_mc(&ProcessSpec::ShiftedMarkov(chain.clone()), 1.0, 1.0, 6, &mc).unwrap();
        let opts = HmmOptions {
            hist_len: JUMP_HISTORY,
            ..HmmOptions::default()
        };
        let causal = lmmse_shifted(&chain, 0.0, &opts, &McConfig { paths: 1000, ..McConfig::with_seed(22) }).unwrap();
        assert!(avg.z_score(&causal) < 3.0, "{avg:?} vs {causal:?}");
    }
}
