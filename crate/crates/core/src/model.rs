//! Channel model, process specifications, and the shared curve type.
//!
//! The channel is `dY_t = sqrt(snr) X_t dt + dW_t` with `W` a standard Brownian
//! motion. `snr` is an intensity per unit time. Variances are in signal units
//! squared and lookahead is in time units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::markov::Dtmc;
use crate::mixture::MixingMeasure;
use crate::spectral::{RationalSpectrum, TabulatedSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub snr: f64,
}

impl ChannelSpec {
    pub fn new(snr: f64) -> Result<Self> {
        require_positive("snr", snr)?;
        Ok(Self { snr })
    }
}

/// Parameters of `dX = alpha (mu - X) dt + beta dB`; the mean is always zero here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub mu: f64,
}

fn one() -> f64 {
    1.0
}

impl OuParams {
    /// OU(alpha) with unit diffusion.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_beta(alpha, 1.0)
    }

    pub fn with_beta(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            mu: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("alpha", self.alpha)?;
        require_positive("beta", self.beta)?;
        if self.mu != 0.0 {
            return Err(invalid("mu", "only zero-mean processes are supported"));
        }
        Ok(())
    }

    /// `R_X(0) = beta^2 / (2 alpha)`.
    pub fn stationary_variance(&self) -> f64 {
        self.beta * self.beta / (2.0 * self.alpha)
    }

    /// `R_X(tau) = beta^2 / (2 alpha) exp(-alpha |tau|)`.
    pub fn autocorrelation(&self, lag: f64) -> f64 {
        self.stationary_variance() * (-self.alpha * lag.abs()).exp()
    }

    /// `sqrt(alpha^2 + gamma beta^2)`.
    pub fn tau(&self, gamma: f64) -> f64 {
        (self.alpha * self.alpha + gamma * self.beta * self.beta).sqrt()
    }
}

/// Any of the input processes the crate knows how to handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ProcessSpec {
    #[serde(alias = "ou")]
    Ou(OuParams),
    #[serde(alias = "ou_mixture")]
    OuMixture(MixingMeasure),
    #[serde(alias = "rational_gaussian")]
    RationalGaussian(RationalSpectrum),
    #[serde(alias = "tabulated_gaussian")]
    TabulatedGaussian(TabulatedSpectrum),
    #[serde(alias = "shifted_markov")]
    ShiftedMarkov(Dtmc),
}

/// A process spec together with an optional channel SNR, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    #[serde(flatten)]
    pub process: ProcessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

impl ProcessConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("process configs always serialize")
    }
}

/// A [`ProcessSpec`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec(ProcessSpec);

impl ValidatedSpec {
    pub fn spec(&self) -> &ProcessSpec {
        &self.0
    }

    pub fn into_inner(self) -> ProcessSpec {
        self.0
    }
}

impl std::ops::Deref for ValidatedSpec {
    type Target = ProcessSpec;
    fn deref(&self) -> &ProcessSpec {
        &self.0
    }
}

/// Checks every invariant of the populated variant.
pub fn validate(spec: ProcessSpec) -> Result<ValidatedSpec> {
    match &spec {
        ProcessSpec::Ou(p) => p.validate()?,
        ProcessSpec::OuMixture(m) => m.validate()?,
        ProcessSpec::RationalGaussian(s) => s.validate()?,
        ProcessSpec::TabulatedGaussian(s) => s.validate()?,
        ProcessSpec::ShiftedMarkov(c) => c.validate()?,
    }
    Ok(ValidatedSpec(spec))
}

/// `R_X(0)` of a validated process.
pub fn stationary_variance(spec: &ValidatedSpec) -> Result<f64> {
    match spec.spec() {
        ProcessSpec::Ou(p) => Ok(p.stationary_variance()),
        ProcessSpec::OuMixture(m) => Ok(m.stationary_variance()),
        ProcessSpec::RationalGaussian(s) => s.variance(),
        ProcessSpec::TabulatedGaussian(s) => Ok(s.variance()),
        ProcessSpec::ShiftedMarkov(c) => Ok(c.variance()),
    }
}

/// A lookahead on the extended real line. `-inf` and `+inf` are admitted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Lookahead(pub f64);

impl Lookahead {
    pub const PREDICTION_LIMIT: Lookahead = Lookahead(f64::NEG_INFINITY);
    pub const SMOOTHING_LIMIT: Lookahead = Lookahead(f64::INFINITY);

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl From<f64> for Lookahead {
    fn from(d: f64) -> Self {
        Lookahead(d)
    }
}

impl FromStr for Lookahead {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let v = match t.as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => f64::INFINITY,
            "-inf" | "-infinity" => f64::NEG_INFINITY,
            _ => t
                .parse::<f64>()
                .map_err(|e| invalid("lookahead", format!("`{s}`: {e}")))?,
        };
        if v.is_nan() {
            return Err(invalid("lookahead", "NaN is not a lookahead"));
        }
        Ok(Lookahead(v))
    }
}

impl fmt::Display for Lookahead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            v if v == f64::INFINITY => write!(f, "inf"),
            v if v == f64::NEG_INFINITY => write!(f, "-inf"),
            v => write!(f, "{v}"),
        }
    }
}

/// Sampled `lmmse(d)` with its three anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmseCurve {
    pub points: Vec<(f64, f64)>,
    pub cmmse: f64,
    pub mmse: f64,
    pub var0: f64,
}

impl LmmseCurve {
    /// Samples `f` on `grid` (sorted ascending first).
    pub fn sample<F>(grid: &[f64], cmmse: f64, mmse: f64, var0: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut ds = grid.to_vec();
        ds.sort_by(f64::total_cmp);
        let points = ds
            .into_iter()
            .map(|d| f(d).map(|v| (d, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points,
            cmmse,
            mmse,
            var0,
        })
    }

    pub fn lookaheads(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Checks monotone non-increase in `d`, the bracket `mmse <= value <= var0`,
    /// and `value(0) = cmmse`, all up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for w in self.points.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(invalid("points", "lookaheads must be sorted"));
            }
            if w[1].1 > w[0].1 + tol {
                return Err(Error::NumericalFailure(format!(
                    "curve increases between d = {} ({}) and d = {} ({})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        for &(d, v) in &self.points {
            if v < self.mmse - tol || v > self.var0 + tol {
                return Err(Error::NumericalFailure(format!(
                    "value {v} at d = {d} outside [{}, {}]",
                    self.mmse, self.var0
                )));
            }
            if d == 0.0 && (v - self.cmmse).abs() > tol {
                return Err(Error::NumericalFailure(format!(
                    "value at d = 0 is {v}, expected cmmse {}",
                    self.cmmse
                )));
            }
        }
        Ok(())
    }
}

/// `count` evenly spaced points on `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validate_accepts_and_rejects() {
        assert!(validate(ProcessSpec::Ou(OuParams::new(0.5).unwrap())).is_ok());
        let bad = ProcessSpec::Ou(OuParams {
            alpha: -1.0,
            beta: 1.0,
            mu: 0.0,
        });
        match validate(bad) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "alpha"),
            other => panic!("unexpected {other:?}"),
        }
        let mix = MixingMeasure::new(vec![0.75, 0.25], vec![0.5, 0.5]).unwrap();
        assert!(validate(ProcessSpec::OuMixture(mix)).is_ok());
        let empty = MixingMeasure {
            alphas: vec![],
            weights: vec![],
        };
        assert!(validate(ProcessSpec::OuMixture(empty)).is_err());
    }

    #[test]
    fn stationary_variances() {
        let ou = validate(ProcessSpec::Ou(OuParams::new(0.5).unwrap())).unwrap();
        assert_eq!(stationary_variance(&ou).unwrap(), 1.0);
        let mix = MixingMeasure::new(vec![0.75, 0.25], vec![0.5, 0.5]).unwrap();
        let mix = validate(ProcessSpec::OuMixture(mix)).unwrap();
        assert_abs_diff_eq!(stationary_variance(&mix).unwrap(), 1.333, epsilon = 5e-4);
        let chain = validate(ProcessSpec::ShiftedMarkov(Dtmc::example())).unwrap();
        // sum mu x^2 - (sum mu x)^2 with mu = (70, 35, 32)/137, x = (5, 0, -5)
        let expected = 25.0 * 102.0 / 137.0 - (5.0 * 38.0 / 137.0f64).powi(2);
        assert_abs_diff_eq!(stationary_variance(&chain).unwrap(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(expected, 16.6898, epsilon = 1e-4);
    }

    #[test]
    fn config_round_trip_uses_exact_field_names() {
        let text = r#"{"variant": "OuMixture", "alphas": [0.75, 0.25], "weights": [0.5, 0.5], "snr": 1.0}"#;
        let cfg = ProcessConfig::from_json(text).unwrap();
        assert_eq!(cfg.snr, Some(1.0));
        assert!(matches!(cfg.process, ProcessSpec::OuMixture(_)));
        let back = ProcessConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);

        let ou = ProcessConfig::from_json(r#"{"variant": "ou", "alpha": 0.5}"#).unwrap();
        assert_eq!(ou.process, ProcessSpec::Ou(OuParams::new(0.5).unwrap()));
        let chain = ProcessConfig::from_json(
            r#"{"variant": "ShiftedMarkov", "values": [1, -1], "transition": [[0.9, 0.1], [0.2, 0.8]]}"#,
        )
        .unwrap();
        assert!(validate(chain.process).is_ok());
    }

    #[test]
    fn lookahead_parsing() {
        assert_eq!("inf".parse::<Lookahead>().unwrap().0, f64::INFINITY);
        assert_eq!("-inf".parse::<Lookahead>().unwrap().0, f64::NEG_INFINITY);
        assert_eq!("-0.5".parse::<Lookahead>().unwrap().0, -0.5);
        assert!("nan".parse::<Lookahead>().is_err());
        assert_eq!(Lookahead(f64::INFINITY).to_string(), "inf");
    }

    #[test]
    fn curve_invariant_checks() {
        let ok = LmmseCurve {
            points: vec![(-1.0, 0.9), (0.0, 0.6), (1.0, 0.5)],
            cmmse: 0.6,
            mmse: 0.45,
            var0: 1.0,
        };
        assert!(ok.check_invariants(1e-12).is_ok());
        let mut bad = ok.clone();
        bad.points[2].1 = 0.7;
        assert!(bad.check_invariants(1e-12).is_err());
        let mut bad = ok;
        bad.points[1].1 = 0.59;
        assert!(bad.check_invariants(1e-12).is_err());
    }
}
