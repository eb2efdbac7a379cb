//! Quadrature kernels: Gauss-Legendre rules and adaptive Gauss-Kronrod (7/15).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let integral = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    (integral, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-12,
            max_segments: 4000,
        }
    }
}

impl QuadTol {
    pub fn abs(abs: f64) -> Self {
        Self {
            abs,
            ..Self::default()
        }
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    let mut count = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if count >= tol.max_segments {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_err:e} above tolerance after {count} segments"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        count += 1;
        // Re-sum to keep the running totals from drifting.
        if count % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// Integral of `f` over `[0, inf)` through the map `x = t / (1 - t)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, tol: QuadTol) -> Result<f64> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - t;
            let x = t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}
