use lagmmse_core::io::{emit_curve, read_curve_csv, OutputFormat};
use lagmmse_core::markov::{dtmc_reverse, prediction_variance};
use lagmmse_core::mixture::mixture_lmmse;
use lagmmse_core::model::{linspace, Lookahead, LmmseCurve};
use lagmmse_core::ou::{riccati_error, RiccatiSolution};
use lagmmse_core::{cmmse_ou, jump_f_ou, lmmse_ou, mmse_ou, Dtmc, JumpChannelSpec, MixingMeasure, OuParams};
use proptest::prelude::*;

fn ou_params() -> impl Strategy<Value = OuParams> {
    (0.02f64..5.0, 0.1f64..3.0).prop_map(|(a, b)| OuParams::with_beta(a, b).unwrap())
}

fn stochastic_row(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|r| {
        let s: f64 = r.iter().sum();
        let mut row: Vec<f64> = r.iter().map(|v| v / s).collect();
        let rest: f64 = row[1..].iter().sum();
        row[0] = 1.0 - rest;
        row
    })
}

proptest! {
    #[test]
    fn ou_curve_is_monotone_and_bounded(p in ou_params(), snr in 0.01f64..50.0) {
        let (c, m) = (cmmse_ou(&p, snr).unwrap(), mmse_ou(&p, snr).unwrap());
        let var0 = p.stationary_variance();
        prop_assert!(m <= c && c <= var0);
        let mut prev = f64::INFINITY;
        for d in linspace(-10.0, 10.0, 81) {
            let v = lmmse_ou(&p, snr, d).unwrap();
            prop_assert!(v <= prev * (1.0 + 1e-12));
            prop_assert!(v >= m * (1.0 - 1e-12) && v <= var0 * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn riccati_stays_between_start_and_steady_state(p in ou_params(), gamma in 0.0f64..20.0, e0 in 0.0f64..10.0, t in 0.0f64..10.0) {
        let sol = RiccatiSolution::new(&p, gamma, e0).unwrap();
        let ess = sol.steady_state();
        let e = riccati_error(&p, gamma, e0, t).unwrap();
        let (lo, hi) = if e0 < ess { (e0, ess) } else { (ess, e0) };
        prop_assert!(e >= lo * (1.0 - 1e-12) - 1e-15 && e <= hi * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn jump_error_improves_with_more_or_better_data(
        p in ou_params(), snr in 0.05f64..10.0, g in 0.0f64..10.0, d in 0.0f64..5.0, l in 0.0f64..5.0, extra in 0.0f64..2.0,
    ) {
        let j = JumpChannelSpec::new(snr, g, 1.0).unwrap();
        let better = JumpChannelSpec::new(snr, g + extra, 1.0).unwrap();
        let base = jump_f_ou(&p, &j, d, l).unwrap().value;
        prop_assert!(jump_f_ou(&p, &j, d, l + extra).unwrap().value <= base * (1.0 + 1e-12));
        prop_assert!(jump_f_ou(&p, &better, d, l).unwrap().value <= base * (1.0 + 1e-12));
        prop_assert!(base > 0.0 && base <= p.stationary_variance() * (1.0 + 1e-12));
    }

    #[test]
    fn mixture_lookahead_curve_is_monotone(a1 in 0.05f64..3.0, a2 in 0.05f64..3.0, w in 0.05f64..0.95, snr in 0.1f64..10.0) {
        prop_assume!((a1 - a2).abs() > 1e-3);
        let m = MixingMeasure::new(vec![a1, a2], vec![w, 1.0 - w]).unwrap();
        let mut prev = f64::INFINITY;
        for d in linspace(-5.0, 5.0, 41) {
            let v = mixture_lmmse(&m, snr, d).unwrap();
            prop_assert!(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn reversal_is_an_involution(rows in prop::collection::vec(stochastic_row(3), 3), values in prop::collection::vec(-5.0f64..5.0, 3)) {
        let c = Dtmc::new(values, rows).unwrap();
        let r = dtmc_reverse(&c).unwrap();
        let back = dtmc_reverse(&r).unwrap();
        for i in 0..3 {
            prop_assert!((r.stationary[i] - c.stationary[i]).abs() < 1e-12);
            for j in 0..3 {
                prop_assert!((back.transition[i][j] - c.transition[i][j]).abs() < 1e-10);
            }
        }
        prop_assert!((r.variance() - c.variance()).abs() < 1e-9);
        prop_assert!(prediction_variance(&c) <= c.variance() * (1.0 + 1e-12));
    }

    #[test]
    fn lookahead_text_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::INFINITE | prop::num::f64::ZERO) {
        let text = Lookahead(v).to_string();
        prop_assert_eq!(text.parse::<Lookahead>().unwrap().0, v);
    }

    #[test]
    fn csv_round_trip_is_exact(points in prop::collection::vec((-1e6f64..1e6, 0.0f64..1e3), 0..40)) {
        let curve = LmmseCurve { points, cmmse: 1.0, mmse: 0.5, var0: 2.0 };
        let mut buf = Vec::new();
        emit_curve(&curve, OutputFormat::Csv, &mut buf).unwrap();
        let back = read_curve_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, curve.points);
    }
}
