use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LmmseCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Exponential,
    Polynomial,
}

/// Which of `p_d ~ exp(-r d)` and `p_d ~ d^k` fits the curve better.
///
/// For the exponential fit `exponent` is the rate `r > 0`; for the polynomial fit it
/// is the log-log slope `k` (negative for a decaying curve).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub kind: DecayKind,
    pub exponent: f64,
    pub exponential_rate: f64,
    pub loglog_slope: f64,
    pub residual_exponential: f64,
    pub residual_polynomial: f64,
    pub points: usize,
}

/// Least-squares line; returns `(slope, intercept, sum of squared residuals)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, ssr)
}

/// Fits `log p_d` against `d` and against `log d` over the curve's points with `d > 0`
/// and reports the fit with the smaller residual.
pub fn decay_rate(curve: &LmmseCurve) -> Result<DecayFit> {
    let gap = curve.cmmse - curve.mmse;
    if !(gap > 0.0) {
        return Err(Error::DegenerateCase(format!(
            "cmmse ({}) does not exceed mmse ({})",
            curve.cmmse, curve.mmse
        )));
    }
    let (mut ds, mut logs) = (Vec::new(), Vec::new());
    for &(d, v) in &curve.points {
        if d > 0.0 && d.is_finite() && v > curve.mmse + 1e-12 {
            ds.push(d);
            logs.push(((v - curve.mmse) / gap).ln());
        }
    }
    if ds.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} usable points with d > 0 and value above mmse; need 8",
            ds.len()
        )));
    }
    let (exp_slope, _, exp_ssr) = fit_line(&ds, &logs);
    let log_d: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let (poly_slope, _, poly_ssr) = fit_line(&log_d, &logs);
    let (kind, exponent) = if exp_ssr <= poly_ssr {
        (DecayKind::Exponential, -exp_slope)
    } else {
        (DecayKind::Polynomial, poly_slope)
    };
    Ok(DecayFit {
        kind,
        exponent,
        exponential_rate: -exp_slope,
        loglog_slope: poly_slope,
        residual_exponential: exp_ssr,
        residual_polynomial: poly_ssr,
        points: ds.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linspace, OuParams};
    use crate::ou::{cmmse_ou, lmmse_ou, mmse_ou};
    use approx::assert_relative_eq;

    fn ou_curve(alpha: f64, snr: f64, grid: &[f64]) -> LmmseCurve {
        let p = OuParams::new(alpha).unwrap();
        LmmseCurve::sample(
            grid,
            cmmse_ou(&p, snr).unwrap(),
            mmse_ou(&p, snr).unwrap(),
            p.stationary_variance(),
            |d| lmmse_ou(&p, snr, d),
        )
        .unwrap()
    }

    #[test]
    fn ou_is_exponential_with_known_rate() {
        let c = ou_curve(0.5, 1.0, &linspace(0.0, 3.0, 31));
        let fit = decay_rate(&c).unwrap();
        assert_eq!(fit.kind, DecayKind::Exponential);
        assert_relative_eq!(fit.exponent, 2.0 * 1.25f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(fit.exponent, 1.0 / c.mmse, max_relative = 1e-9);
    }

    #[test]
    fn power_law_is_polynomial() {
        let grid = linspace(1.0, 5.0, 20);
        let c = LmmseCurve {
            points: grid.iter().map(|&d| (d, 0.5 + 0.1 * d.powi(-3))).collect(),
            cmmse: 0.6,
            mmse: 0.5,
            var0: 1.0,
        };
        let fit = decay_rate(&c).unwrap();
        assert_eq!(fit.kind, DecayKind::Polynomial);
        assert_relative_eq!(fit.exponent, -3.0, max_relative = 1e-9);
    }

    #[test]
    fn too_few_points() {
        let c = ou_curve(0.5, 1.0, &linspace(0.0, 3.0, 5));
        assert!(matches!(decay_rate(&c), Err(Error::InsufficientData(_))));
    }
}
