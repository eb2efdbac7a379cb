use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lagmmse_bench::{chain, ou, pair_spectrum, triangle};
use lagmmse_core::jump::{theorem1_check, QuadConfig};
use lagmmse_core::markov::{hmm_window_variance, HmmOptions};
use lagmmse_core::model::linspace;
use lagmmse_core::ou::lmmse_ou;
use lagmmse_core::sim::{DiscreteKalmanModel, McConfig};
use lagmmse_core::spectral::{factorize_numeric, factorize_rational, lmmse_rational, wiener_mmse, wiener_transfer, NumericGrid};

fn closed_forms(c: &mut Criterion) {
    let p = ou();
    let grid = linspace(-5.0, 5.0, 1001);
    c.bench_function("ou curve 1001 points", |b| {
        b.iter(|| grid.iter().map(|&d| lmmse_ou(&p, black_box(1.0), d).unwrap()).sum::<f64>())
    });
    c.bench_function("jump identity 32x32", |b| {
        b.iter(|| theorem1_check(&p, black_box(1.0), 2.0, &QuadConfig::default()).unwrap())
    });
    let model = DiscreteKalmanModel::from_ou(&p, 1.0, 1e-3).unwrap();
    c.bench_function("discrete fixed-lag variance", |b| {
        b.iter(|| model.fixed_lag_variance(Some(black_box(500))))
    });
}

fn spectral(c: &mut Criterion) {
    let sx = pair_spectrum();
    c.bench_function("rational pipeline", |b| {
        b.iter(|| {
            let f = factorize_rational(&sx, black_box(1.0)).unwrap();
            let pfe = wiener_transfer(&sx, &f, 1.0).unwrap();
            let mmse = wiener_mmse(&sx, 1.0).unwrap();
            lmmse_rational(&pfe, mmse, 0.5).unwrap()
        })
    });
    let tri = triangle();
    let grid = NumericGrid {
        points: 1 << 14,
        omega_max: 32.0,
    };
    c.bench_function("numeric factorization 2^14", |b| {
        b.iter(|| factorize_numeric(&tri, black_box(4.0), grid).unwrap().mmse)
    });
}

fn simulation(c: &mut Criterion) {
    let ch = chain();
    let opts = HmmOptions {
        hist_len: 20,
        ..HmmOptions::default()
    };
    let mc = McConfig {
        paths: 1000,
        ..McConfig::with_seed(1)
    };
    let mut group = c.benchmark_group("hmm");
    group.sample_size(20);
    group.bench_function("window variance 1000 paths", |b| {
        b.iter(|| hmm_window_variance(&ch, black_box(0.5), 0.5, &opts, &mc).unwrap().value)
    });
    group.finish();
}

criterion_group!(benches, closed_forms, spectral, simulation);
criterion_main!(benches);
