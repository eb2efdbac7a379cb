use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpectralDensity;
use crate::error::{invalid, require_positive, Error, Result};
use crate::model::OuParams;
use crate::quad::{integrate_half_line, QuadTol};
use crate::roots::{poly_eval, poly_roots, trim};

/// Tolerance for the spectral integrals: well below the 1e-9 agreement the
/// closed forms are checked against.
const SPECTRAL_TOL: QuadTol = QuadTol {
    abs: 1e-13,
    rel: 1e-13,
    max_segments: 20_000,
};

/// Distance from the imaginary axis below which a root is considered marginal.
const MARGINAL: f64 = 1e-9;

/// `S_X(omega) = gain N(s^2) / D(s^2)` at `s = j omega`, with ascending coefficients in `s^2`.
///
/// OU(alpha, beta) is `num = [beta^2]`, `den = [alpha^2, -1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalSpectrum {
    pub num_coeffs: Vec<f64>,
    pub den_coeffs: Vec<f64>,
    #[serde(default = "unit_gain")]
    pub gain: f64,
}

fn unit_gain() -> f64 {
    1.0
}

impl RationalSpectrum {
    pub fn new(num_coeffs: Vec<f64>, den_coeffs: Vec<f64>, gain: f64) -> Result<Self> {
        let s = Self {
            num_coeffs,
            den_coeffs,
            gain,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn ou(params: &OuParams) -> Self {
        Self {
            num_coeffs: vec![params.beta * params.beta],
            den_coeffs: vec![params.alpha * params.alpha, -1.0],
            gain: 1.0,
        }
    }

    fn num(&self) -> &[f64] {
        trim(&self.num_coeffs)
    }

    fn den(&self) -> &[f64] {
        trim(&self.den_coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("gain", self.gain)?;
        if self
            .num_coeffs
            .iter()
            .chain(&self.den_coeffs)
            .any(|c| !c.is_finite())
        {
            return Err(invalid("num_coeffs", "coefficients must be finite"));
        }
        let (num, den) = (self.num(), self.den());
        if num.is_empty() {
            return Err(invalid("num_coeffs", "numerator is identically zero"));
        }
        if den.len() <= num.len() {
            return Err(invalid(
                "den_coeffs",
                "denominator degree must exceed numerator degree",
            ));
        }
        // D(s^2) vanishes on the frequency axis iff D has a real root x <= 0.
        for r in poly_roots(den)? {
            if r.im.abs() <= 1e-12 * r.norm().max(1.0) && r.re <= 1e-12 {
                return Err(invalid(
                    "den_coeffs",
                    format!("denominator vanishes at omega = {}", (-r.re).max(0.0).sqrt()),
                ));
            }
        }
        let peak = self.density(0.0).abs().max(1e-300);
        let mut omega = 1e-4;
        while omega < 1e5 {
            let v = self.density(omega);
            if v < -1e-12 * peak {
                return Err(invalid(
                    "num_coeffs",
                    format!("spectrum is negative ({v}) at omega = {omega}"),
                ));
            }
            omega *= 1.05;
        }
        Ok(())
    }

    /// `S_X(s)` for complex `s` (the spectrum is `eval_s(j omega)`).
    pub fn eval_s(&self, s: Complex64) -> Complex64 {
        let x = s * s;
        poly_eval(self.num(), x) / poly_eval(self.den(), x) * self.gain
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.density(omega)
    }

    /// `R_X(0) = (1 / 2 pi) int S_X d omega`.
    pub fn variance(&self) -> Result<f64> {
        self.spectral_mean(|s| s)
    }

    fn leading_den(&self) -> f64 {
        *self.den().last().expect("validated denominator")
    }
}

fn real_poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl SpectralDensity for RationalSpectrum {
    fn density(&self, omega: f64) -> f64 {
        let x = -omega * omega;
        self.gain * real_poly_eval(self.num(), x) / real_poly_eval(self.den(), x)
    }

    fn spectral_mean<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        Ok(integrate_half_line(|w| g(self.density(w)), SPECTRAL_TOL)? / std::f64::consts::PI)
    }
}

/// `S_Y^+(s) = gain prod (s - z_i) / prod (s - p_i)` with every root in the open left half plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactoredSpectrum {
    pub plus_zeros: Vec<Complex64>,
    pub plus_poles: Vec<Complex64>,
    pub gain: f64,
    pub snr: f64,
}

impl FactoredSpectrum {
    pub fn plus(&self, s: Complex64) -> Complex64 {
        let num: Complex64 = self.plus_zeros.iter().map(|z| s - z).product();
        let den: Complex64 = self.plus_poles.iter().map(|p| s - p).product();
        num / den * self.gain
    }

    /// `S_Y^-(s) = S_Y^+(-s)`.
    pub fn minus(&self, s: Complex64) -> Complex64 {
        self.plus(-s)
    }

    /// Largest `| |S_Y^+(j omega)|^2 - S_Y(j omega) |` over `omega` in `grid`.
    pub fn max_reconstruction_error(&self, sx: &RationalSpectrum, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&w| {
                let sy = 1.0 + self.snr * sx.density(w);
                (self.plus(Complex64::new(0.0, w)).norm_sqr() - sy).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Left-half-plane square root of a root `x` of a polynomial in `s^2`.
fn stable_root(x: Complex64) -> Result<Complex64> {
    let s = -x.sqrt();
    if s.re > -MARGINAL {
        return Err(Error::MarginalRoot(format!("{s}")));
    }
    Ok(s)
}

/// Splits `S_Y = 1 + snr S_X` into its stable and anti-stable factors.
pub fn factorize_rational(sx: &RationalSpectrum, snr: f64) -> Result<FactoredSpectrum> {
    sx.validate()?;
    require_positive("snr", snr)?;
    let den = sx.den();
    let num = sx.num();
    // numerator of S_Y as a polynomial in s^2: D + snr gain N
    let mut out = den.to_vec();
    for (o, n) in out.iter_mut().zip(num) {
        *o += snr * sx.gain * n;
    }
    let plus_zeros = poly_roots(&out)?
        .into_iter()
        .map(stable_root)
        .collect::<Result<Vec<_>>>()?;
    let plus_poles = poly_roots(den)?
        .into_iter()
        .map(stable_root)
        .collect::<Result<Vec<_>>>()?;
    // D and D + snr N share their leading coefficient, so the factor is monic.
    Ok(FactoredSpectrum {
        plus_zeros,
        plus_poles,
        gain: 1.0,
        snr,
    })
}

/// `H(s)` as a sum of simple-pole terms `r / (s - q)`.
///
/// Causal terms (`Re q < 0`) contribute `r exp(q t)` for `t > 0`; anticausal terms
/// (`Re q > 0`) contribute `-r exp(q t)` for `t < 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialFractionExpansion {
    pub anticausal_terms: Vec<(Complex64, Complex64)>,
    pub causal_terms: Vec<(Complex64, Complex64)>,
    /// `int h^2` over the whole line, i.e. `R_X(0) - mmse`.
    pub constant_c: f64,
}

impl PartialFractionExpansion {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.anticausal_terms
            .iter()
            .chain(&self.causal_terms)
            .map(|(q, r)| r / (s - q))
            .sum()
    }

    pub fn impulse_response(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.causal_terms
                .iter()
                .map(|(q, r)| (r * (q * t).exp()).re)
                .sum()
        } else if t < 0.0 {
            -self
                .anticausal_terms
                .iter()
                .map(|(q, r)| (r * (q * t).exp()).re)
                .sum::<f64>()
        } else {
            0.5 * (self.impulse_response(f64::MIN_POSITIVE) + self.impulse_response(-f64::MIN_POSITIVE))
        }
    }

    /// `int_{-inf}^0 h^2`, equal to `cmmse - mmse`.
    pub fn anticausal_energy(&self) -> f64 {
        pair_sum(&self.anticausal_terms, |a, b| 1.0 / (a + b))
    }

    /// `int_0^inf h^2`.
    pub fn causal_energy(&self) -> f64 {
        pair_sum(&self.causal_terms, |a, b| -1.0 / (a + b))
    }
}

/// `Re sum_{i,j} r_i r_j k(q_i, q_j)`.
fn pair_sum<K: Fn(Complex64, Complex64) -> Complex64>(terms: &[(Complex64, Complex64)], k: K) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (qi, ri) in terms {
        for (qj, rj) in terms {
            acc += ri * rj * k(*qi, *qj);
        }
    }
    acc.re
}

/// Partial fractions of `H(s) = sqrt(snr) S_X(s) / S_Y^-(s)`.
///
/// `H = sqrt(snr) gain N(s^2) / (lead_D prod (s - p_i) prod (s + z_i))`, where `p_i`
/// and `z_i` are the stable poles and zeros of `S_Y^+`.
pub fn wiener_transfer(
    sx: &RationalSpectrum,
    fact: &FactoredSpectrum,
    snr: f64,
) -> Result<PartialFractionExpansion> {
    require_positive("snr", snr)?;
    let scale = snr.sqrt() * sx.gain / sx.leading_den();
    let causal: Vec<Complex64> = fact.plus_poles.clone();
    let anticausal: Vec<Complex64> = fact.plus_zeros.iter().map(|z| -z).collect();
    let poles: Vec<Complex64> = anticausal.iter().chain(&causal).copied().collect();
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if (a - b).norm() <= 1e-8 * a.norm().max(1.0) {
                return Err(Error::RepeatedPole(format!("{a}")));
            }
        }
    }
    let residue = |k: usize| {
        let q = poles[k];
        let num = poly_eval(sx.num(), q * q) * scale;
        let den: Complex64 = poles
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, p)| q - p)
            .product();
        num / den
    };
    let na = anticausal.len();
    let anticausal_terms: Vec<_> = (0..na).map(|k| (poles[k], residue(k))).collect();
    let causal_terms: Vec<_> = (na..poles.len()).map(|k| (poles[k], residue(k))).collect();
    let mut pfe = PartialFractionExpansion {
        anticausal_terms,
        causal_terms,
        constant_c: 0.0,
    };
    pfe.constant_c = pfe.anticausal_energy() + pfe.causal_energy();
    Ok(pfe)
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        z + z * z / 2.0 + z * z * z / 6.0
    } else {
        z.exp() - 1.0
    }
}

/// `mmse + int_{-inf}^{-d} h^2` from the residues.
///
/// For `d >= 0` only the anticausal terms reach below `-d`. For `d < 0` the causal
/// part over `(0, |d|)` is added to the full anticausal energy.
pub fn lmmse_rational(pfe: &PartialFractionExpansion, mmse: f64, d: f64) -> Result<f64> {
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    if d == f64::INFINITY {
        return Ok(mmse);
    }
    if d == f64::NEG_INFINITY {
        return Ok(mmse + pfe.constant_c);
    }
    if d >= 0.0 {
        Ok(mmse + pair_sum(&pfe.anticausal_terms, |a, b| (-(a + b) * d).exp() / (a + b)))
    } else {
        let gap = -d;
        let causal = pair_sum(&pfe.causal_terms, |a, b| expm1((a + b) * gap) / (a + b));
        Ok(mmse + pfe.anticausal_energy() + causal)
    }
}

/// Closed form for the Gaussian process with spectrum `(1/2)/(a1^2 + w^2) + (1/2)/(a2^2 + w^2)`.
///
/// Evaluated directly from the explicit quadratic for the stable zeros and the
/// explicit residues, independently of the generic pipeline. The smoothing error
/// comes from Parseval: `mmse = R_X(0) - int h^2`.
pub fn two_ou_closed_form(alpha1: f64, alpha2: f64, snr: f64, d: f64) -> Result<f64> {
    require_positive("alpha1", alpha1)?;
    require_positive("alpha2", alpha2)?;
    require_positive("snr", snr)?;
    if alpha1 == alpha2 {
        return Err(invalid("alpha2", "must differ from alpha1"));
    }
    if d.is_nan() {
        return Err(invalid("d", "must not be NaN"));
    }
    let (a1, a2) = (alpha1, alpha2);
    let s2 = a1 * a1 + a2 * a2;
    // k(x) = x^2 - (a1^2 + a2^2 + snr) x + (snr/2)(a1^2 + a2^2) + a1^2 a2^2
    let b = s2 + snr;
    let c = 0.5 * snr * s2 + a1 * a1 * a2 * a2;
    let disc = (b * b - 4.0 * c).sqrt();
    let x1 = 0.5 * (b + disc);
    let x2 = c / x1;
    let (p1, p2) = (x1.sqrt(), x2.sqrt());
    let num = |s: f64| 0.5 * snr.sqrt() * (s2 - 2.0 * s * s);
    let u1 = num(p1) / ((p1 - p2) * (a1 + p1) * (a2 + p1));
    let u2 = num(p2) / ((p2 - p1) * (a1 + p2) * (a2 + p2));
    let v1 = num(-a1) / ((-a1 - p1) * (-a1 - p2) * (a2 - a1));
    let v2 = num(-a2) / ((-a2 - p1) * (-a2 - p2) * (a1 - a2));
    let anti = |d: f64| {
        u1 * u1 / (2.0 * p1) * (-2.0 * p1 * d).exp()
            + u2 * u2 / (2.0 * p2) * (-2.0 * p2 * d).exp()
            + 2.0 * u1 * u2 / (p1 + p2) * (-(p1 + p2) * d).exp()
    };
    let causal = |d: f64| {
        v1 * v1 / (2.0 * a1) * (2.0 * a1 * d).exp()
            + v2 * v2 / (2.0 * a2) * (2.0 * a2 * d).exp()
            + 2.0 * v1 * v2 / (a1 + a2) * ((a1 + a2) * d).exp()
    };
    let var0 = 0.25 / a1 + 0.25 / a2;
    let total = anti(0.0) + causal(0.0);
    let mmse = var0 - total;
    Ok(if d == f64::INFINITY {
        mmse
    } else if d == f64::NEG_INFINITY {
        var0
    } else if d >= 0.0 {
        mmse + anti(d)
    } else {
        mmse + total - causal(d)
    })
}
