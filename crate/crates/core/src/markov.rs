//! Piecewise-constant processes built from a finite Markov chain, and the
//! comparison between such a process and its time reversal.
//!
//! Symbol `k` of the chain occupies a unit interval. A uniform random shift makes
//! the process stationary. Observing an interval of length `e` that lies inside a
//! single symbol `x` at SNR `snr` is equivalent to one Gaussian observation with
//! mean `sqrt(snr) e x` and variance `e`. A symbol's observations therefore reduce
//! to a few `(exposure, snr)` pieces, and estimation becomes exact forward-backward
//! recursion on a hidden Markov model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::quad::GaussLegendre;
use crate::sim::{mc_mean, mix_seed, normal, path_rng, McConfig, McEstimate};

/// A finite-alphabet chain: `transition[i][j] = P(next = values[j] | now = values[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DtmcSpec", into = "DtmcSpec")]
pub struct Dtmc {
    pub values: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DtmcSpec {
    values: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

impl TryFrom<DtmcSpec> for Dtmc {
    type Error = Error;
    fn try_from(s: DtmcSpec) -> Result<Self> {
        Dtmc::new(s.values, s.transition)
    }
}

impl From<Dtmc> for DtmcSpec {
    fn from(c: Dtmc) -> Self {
        DtmcSpec {
            values: c.values,
            transition: c.transition,
        }
    }
}

impl Dtmc {
    pub fn new(values: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic(&values, &transition)?;
        let stationary = dtmc_stationary(&transition)?;
        Ok(Self {
            values,
            transition,
            stationary,
        })
    }

    /// Alphabet `{5, 0, -5}` with a chain that is much easier to predict forward than backward.
    pub fn example() -> Self {
        Self::new(
            vec![5.0, 0.0, -5.0],
            vec![
                vec![0.6, 0.4, 0.0],
                vec![0.0, 0.2, 0.8],
                vec![0.875, 0.0, 0.125],
            ],
        )
        .expect("example chain is valid")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_stochastic(&self.values, &self.transition)?;
        check_irreducible(&self.transition)?;
        let mu = &self.stationary;
        if mu.len() != self.len() {
            return Err(invalid("stationary", "wrong length"));
        }
        let moved = step_distribution(mu, &self.transition);
        let err = moved.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > 1e-10 {
            return Err(invalid("stationary", format!("not invariant (error {err:e})")));
        }
        Ok(())
    }

    /// `Var_mu(values)`.
    pub fn variance(&self) -> f64 {
        distribution_variance(&self.stationary, &self.values)
    }

    /// `P^k`, row-major.
    pub fn transition_power(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut out: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..k {
            out = out
                .iter()
                .map(|row| step_distribution(row, &self.transition))
                .collect();
        }
        out
    }
}

fn check_stochastic(values: &[f64], transition: &[Vec<f64>]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid("values", "alphabet is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("values", "must be finite"));
    }
    let n = values.len();
    if transition.len() != n || transition.iter().any(|r| r.len() != n) {
        return Err(invalid("transition", format!("must be {n} x {n}")));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("transition", format!("row {i} has an entry outside [0, 1]")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid("transition", format!("row {i} sums to {s}, not 1")));
        }
    }
    Ok(())
}

fn check_irreducible(transition: &[Vec<f64>]) -> Result<()> {
    let n = transition.len();
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for (j, &p) in transition[i].iter().enumerate() {
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::Reducible(format!("state {j} is unreachable from state {start}")));
        }
    }
    Ok(())
}

/// `nu P`.
fn step_distribution(nu: &[f64], transition: &[Vec<f64>]) -> Vec<f64> {
    let n = nu.len();
    let mut out = vec![0.0; n];
    for (i, &w) in nu.iter().enumerate() {
        for j in 0..n {
            out[j] += w * transition[i][j];
        }
    }
    out
}

fn distribution_variance(nu: &[f64], values: &[f64]) -> f64 {
    let m: f64 = nu.iter().zip(values).map(|(p, x)| p * x).sum();
    nu.iter().zip(values).map(|(p, x)| p * (x - m).powi(2)).sum()
}

/// Stationary law of an irreducible chain by power iteration on the lazy chain `(P + I)/2`,
/// which has the same invariant law and no periodicity.
pub fn dtmc_stationary(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = transition.len();
    if n == 0 {
        return Err(invalid("transition", "empty matrix"));
    }
    check_irreducible(transition)?;
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let moved = step_distribution(&mu, transition);
        let next: Vec<f64> = mu.iter().zip(&moved).map(|(a, b)| 0.5 * (a + b)).collect();
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|v| v / total).collect();
        let change = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        mu = next;
        if change < 1e-15 {
            let resid = step_distribution(&mu, transition)
                .iter()
                .zip(&mu)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if resid <= 1e-12 {
                return Ok(mu);
            }
        }
    }
    Err(Error::NonConvergence("power iteration for the stationary law".into()))
}

/// Time reversal: `P^R[i][j] = mu_j P[j][i] / mu_i`.
pub fn dtmc_reverse(chain: &Dtmc) -> Result<Dtmc> {
    let mu = &chain.stationary;
    let n = chain.len();
    let transition: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| mu[j] * chain.transition[j][i] / mu[i]).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        })
        .collect();
    Ok(Dtmc {
        values: chain.values.clone(),
        transition,
        stationary: mu.clone(),
    })
}

/// `Var(X_k | X_0)` averaged over the stationary law, from the rows of `P^k`.
pub fn k_step_prediction_variance(chain: &Dtmc, k: usize) -> f64 {
    let pk = chain.transition_power(k);
    chain
        .stationary
        .iter()
        .zip(&pk)
        .map(|(m, row)| m * distribution_variance(row, &chain.values))
        .sum()
}

/// `sum_x mu(x) Var[P(. | x)]`.
pub fn prediction_variance(chain: &Dtmc) -> f64 {
    k_step_prediction_variance(chain, 1)
}

/// Lookahead error at infinite SNR.
///
/// Zero for `d >= 0`. For `d < 0`, with `k = ceil(|d|)` and `f = |d| - (k - 1)`, the
/// last observed symbol is `k` steps back with probability `f` and `k - 1` steps back
/// otherwise, giving `f V_k + (1 - f) V_{k-1}`; on `[-1, 0]` this is `|d| V_1`.
pub fn lmmse_infinite_snr(chain: &Dtmc, d: f64) -> Result<f64> {
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    if d >= 0.0 {
        return Ok(0.0);
    }
    if d == f64::NEG_INFINITY {
        return Ok(chain.variance());
    }
    let gap = -d;
    let k = gap.ceil() as usize;
    let frac = gap - (k - 1) as f64;
    if k > 10_000 {
        return Ok(chain.variance());
    }
    let vk = k_step_prediction_variance(chain, k);
    let vk1 = if k == 1 { 0.0 } else { k_step_prediction_variance(chain, k - 1) };
    Ok(frac * vk + (1.0 - frac) * vk1)
}

/// Which statistic each path contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HmmEstimator {
    /// Posterior variance of the target symbol (lower-variance, same mean).
    #[default]
    PosteriorVariance,
    /// Squared error of the posterior mean against the sampled symbol.
    SquaredResidual,
}

/// Settings of the HMM Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmOptions {
    /// Fully observed symbols before the window (stands in for the infinite past).
    pub hist_len: usize,
    pub snr: f64,
    pub estimator: HmmEstimator,
}

impl Default for HmmOptions {
    fn default() -> Self {
        Self {
            hist_len: 50,
            snr: 1.0,
            estimator: HmmEstimator::PosteriorVariance,
        }
    }
}

impl HmmOptions {
    fn validate(&self) -> Result<()> {
        if self.hist_len == 0 {
            return Err(invalid("hist_len", "must be at least 1"));
        }
        require_positive("snr", self.snr)
    }
}

/// Monte Carlo defaults for chain experiments: 10000 paths.
pub fn markov_mc(seed: u64) -> McConfig {
    McConfig {
        paths: 10_000,
        ..McConfig::with_seed(seed)
    }
}

/// Observation pieces `(exposure, snr)` for each symbol, and the symbol to estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmLayout {
    pub symbols: Vec<Vec<(f64, f64)>>,
    pub target: usize,
}

impl HmmLayout {
    /// `hist_len` symbols at full exposure followed by `tail`.
    fn with_history(hist_len: usize, snr: f64, tail: &[f64], target_in_tail: usize) -> Self {
        let mut symbols = vec![vec![(1.0, snr)]; hist_len];
        symbols.extend(tail.iter().map(|&e| vec![(e, snr)]));
        Self {
            symbols,
            target: hist_len + target_in_tail,
        }
    }
}

/// Draws one chain path with its observations and returns the path's statistic.
pub fn hmm_path_statistic<R: Rng + ?Sized>(
    chain: &Dtmc,
    layout: &HmmLayout,
    estimator: HmmEstimator,
    rng: &mut R,
) -> f64 {
    let n_states = chain.len();
    let n = layout.symbols.len();
    let x = &chain.values;
    let cum: Vec<Vec<f64>> = chain
        .transition
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let draw = |cdf: &[f64], u: f64| cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
    let stat_cdf: Vec<f64> = chain
        .stationary
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut states = Vec::with_capacity(n);
    let mut s = draw(&stat_cdf, rng.random::<f64>());
    for k in 0..n {
        if k > 0 {
            s = draw(&cum[s], rng.random::<f64>());
        }
        states.push(s);
    }

    // log-likelihood of each state value given the symbol's observations
    let mut loglik = vec![0.0; n * n_states];
    for (k, pieces) in layout.symbols.iter().enumerate() {
        let truth = x[states[k]];
        for &(e, snr) in pieces {
            let z = normal(rng);
            if e <= 0.0 {
                continue;
            }
            let gain = snr.sqrt() * e;
            let y = gain * truth + e.sqrt() * z;
            for j in 0..n_states {
                loglik[k * n_states + j] -= (y - gain * x[j]).powi(2) / (2.0 * e);
            }
        }
    }
    let lik = |k: usize, out: &mut [f64]| {
        let row = &loglik[k * n_states..(k + 1) * n_states];
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (o, l) in out.iter_mut().zip(row) {
            *o = (l - m).exp();
        }
    };

    let mut l = vec![0.0; n_states];
    let mut alpha = chain.stationary.clone();
    lik(0, &mut l);
    normalize_product(&mut alpha, &l);
    for k in 1..=layout.target {
        alpha = step_distribution(&alpha, &chain.transition);
        lik(k, &mut l);
        normalize_product(&mut alpha, &l);
    }
    let mut beta = vec![1.0; n_states];
    for k in (layout.target + 1..n).rev() {
        lik(k, &mut l);
        let weighted: Vec<f64> = beta.iter().zip(&l).map(|(b, v)| b * v).collect();
        for (i, b) in beta.iter_mut().enumerate() {
            *b = chain.transition[i].iter().zip(&weighted).map(|(p, w)| p * w).sum();
        }
        let s: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= s);
    }
    normalize_product(&mut alpha, &beta);
    let mean: f64 = alpha.iter().zip(x).map(|(p, v)| p * v).sum();
    match estimator {
        HmmEstimator::PosteriorVariance => alpha.iter().zip(x).map(|(p, v)| p * (v - mean).powi(2)).sum(),
        HmmEstimator::SquaredResidual => (x[states[layout.target]] - mean).powi(2),
    }
}

fn normalize_product(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
    let s: f64 = a.iter().sum();
    a.iter_mut().for_each(|x| *x /= s);
}

/// `h(g1, g2)`: error on the symbol at index 0 given the fully observed past, a
/// fraction `g1` of its own interval and a fraction `g2` of the next one.
pub fn hmm_window_variance(
    chain: &Dtmc,
    gamma1: f64,
    gamma2: f64,
    opts: &HmmOptions,
    mc: &McConfig,
) -> Result<McEstimate> {
    opts.validate()?;
    for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
        if !(0.0..=1.0).contains(&g) {
            return Err(invalid(name, format!("exposure must lie in [0, 1], got {g}")));
        }
    }
    let layout = HmmLayout::with_history(opts.hist_len, opts.snr, &[gamma1, gamma2], 0);
    layout_mc(chain, &layout, opts.estimator, mc)
}

/// Error on a symbol that carries no exposure, right after a symbol exposed for `e`.
fn unexposed_after(chain: &Dtmc, e: f64, opts: &HmmOptions, mc: &McConfig) -> Result<McEstimate> {
    let layout = HmmLayout::with_history(opts.hist_len, opts.snr, &[e, 0.0], 1);
    layout_mc(chain, &layout, opts.estimator, mc)
}

fn layout_mc(chain: &Dtmc, layout: &HmmLayout, estimator: HmmEstimator, mc: &McConfig) -> Result<McEstimate> {
    mc_mean(mc, |path| {
        let mut rng = path_rng(mc.seed, path as u64);
        hmm_path_statistic(chain, layout, estimator, &mut rng)
    })
}

/// Lookahead error of the shifted process for `d` in `[-1, 1]`.
///
/// With `u` the time left in the current symbol after 0 (uniform on `[0, 1]`):
/// for `d >= 0` the error is `int_0^d h(1, d - u) du + int_d^1 h(1 + d - u, 0) du`.
/// For `d < 0` with `a = 1 - u`: when `a > |d|` the current symbol is seen for
/// `a - |d|`; otherwise it is unseen and the previous symbol is seen for `1 - |d| + a`.
/// Each piece is integrated with 16-node Gauss-Legendre, every node on its own seed.
pub fn lmmse_shifted(chain: &Dtmc, d: f64, opts: &HmmOptions, mc: &McConfig) -> Result<McEstimate> {
    opts.validate()?;
    if !(-1.0..=1.0).contains(&d) {
        return Err(invalid("d", format!("must lie in [-1, 1], got {d}")));
    }
    let rule = GaussLegendre::new(16);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut node = 0u64;
    let mut add = |lo: f64, hi: f64, eval: &dyn Fn(f64, &McConfig) -> Result<McEstimate>| -> Result<()> {
        if hi <= lo {
            return Ok(());
        }
        for (u, w) in rule.on_interval(lo, hi) {
            let cfg = McConfig {
                seed: mix_seed(mc.seed, node),
                ..*mc
            };
            node += 1;
            let est = eval(u, &cfg)?;
            value += w * est.value;
            var += (w * est.stderr).powi(2);
        }
        Ok(())
    };
    if d >= 0.0 {
        add(0.0, d, &|u, cfg| hmm_window_variance(chain, 1.0, d - u, opts, cfg))?;
        add(d, 1.0, &|u, cfg| hmm_window_variance(chain, 1.0 + d - u, 0.0, opts, cfg))?;
    } else {
        let gap = -d;
        add(gap, 1.0, &|a, cfg| hmm_window_variance(chain, a - gap, 0.0, opts, cfg))?;
        add(0.0, gap, &|a, cfg| unexposed_after(chain, 1.0 - gap + a, opts, cfg))?;
    }
    Ok(McEstimate {
        value,
        stderr: var.sqrt(),
        paths: mc.paths,
    })
}

/// One row of the forward/reversed comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Row {
    pub d: f64,
    pub lmmse_fwd: f64,
    pub stderr_fwd: f64,
    pub lmmse_rev: f64,
    pub stderr_rev: f64,
    /// `|fwd - rev|` exceeds three combined standard errors.
    pub significant: bool,
    pub fwd_inf_snr: f64,
    pub rev_inf_snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub rows: Vec<Theorem2Row>,
    pub var_fwd: f64,
    pub var_rev: f64,
    pub prediction_variance_fwd: f64,
    pub prediction_variance_rev: f64,
}

/// Compares the shifted process built from `chain` with the one built from its reversal.
///
/// Both share the stationary law (hence variance); the report checks that before
/// estimating anything. The two chains use independent seeds.
pub fn theorem2_report(chain: &Dtmc, d_grid: &[f64], opts: &HmmOptions, mc: &McConfig) -> Result<Theorem2Report> {
    chain.validate()?;
    let rev = dtmc_reverse(chain)?;
    let (var_fwd, var_rev) = (chain.variance(), rev.variance());
    if (var_fwd - var_rev).abs() > 1e-12 * var_fwd.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "reversal changed the stationary variance: {var_fwd} vs {var_rev}"
        )));
    }
    let rows = d_grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let f_cfg = McConfig {
                seed: mix_seed(mc.seed, 2 * i as u64),
                ..*mc
            };
            let r_cfg = McConfig {
                seed: mix_seed(mc.seed, 2 * i as u64 + 1),
                ..*mc
            };
            let f = lmmse_shifted(chain, d, opts, &f_cfg)?;
            let r = lmmse_shifted(&rev, d, opts, &r_cfg)?;
            Ok(Theorem2Row {
                d,
                lmmse_fwd: f.value,
                stderr_fwd: f.stderr,
                lmmse_rev: r.value,
                stderr_rev: r.stderr,
                significant: (f.value - r.value).abs() > 3.0 * f.stderr.hypot(r.stderr),
                fwd_inf_snr: lmmse_infinite_snr(chain, d)?,
                rev_inf_snr: lmmse_infinite_snr(&rev, d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Theorem2Report {
        rows,
        var_fwd,
        var_rev,
        prediction_variance_fwd: prediction_variance(chain),
        prediction_variance_rev: prediction_variance(&rev),
    })
}
