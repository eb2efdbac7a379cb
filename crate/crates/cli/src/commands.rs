use std::path::Path;

use lagmmse_core::io::json_number;
use lagmmse_core::jump::{jump_f_mc, jump_f_ou, theorem1_check, JumpChannelSpec, QuadConfig};
use lagmmse_core::markov::{dtmc_reverse, markov_mc, prediction_variance, theorem2_report, Dtmc, HmmOptions};
use lagmmse_core::mixture::{gaussian_upper_bound, mixture_lmmse, mixture_spectrum, MixingMeasure};
use lagmmse_core::model::{LmmseCurve, OuParams, ProcessConfig, ProcessSpec};
use lagmmse_core::ou::{cmmse_ou, d_star, gamma_inf, lmmse_ou, mmse_ou, tradeoff};
use lagmmse_core::sim::{simulate_fixed_lag, McConfig};
use lagmmse_core::spectral::{
    decay_rate, factorize_numeric, factorize_rational, lmmse_rational, wiener_mmse, wiener_transfer,
    NumericGrid, RationalSpectrum, TabulatedSpectrum,
};
use lagmmse_core::utility::{utility_curve, utility_limit_mmse, utility_ou};
use serde_json::{json, Value};

use crate::{csv_table, manifest, CliError, Command, McArgs, OuArgs, Output};

pub fn dispatch(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::OuCurve { ou, snr, d_grid } => ou_curve(ou, *snr, &d_grid.0),
        Command::Tradeoff { ou, snr, d_grid } => tradeoff_cmd(ou, *snr, &d_grid.0),
        Command::MixtureBounds {
            alphas,
            weights,
            snr,
            d_grid,
            beta_grid,
            no_upper,
            mc,
        } => mixture_bounds(
            &alphas.0,
            &weights.0,
            *snr,
            &d_grid.0,
            beta_grid.as_ref().map(|b| b.0.as_slice()),
            *no_upper,
            mc,
        ),
        Command::Spectral {
            spec,
            csv,
            snr,
            d_grid,
            grid_points,
            omega_max,
        } => spectral(
            spec.as_deref(),
            csv.as_deref(),
            *snr,
            &d_grid.0,
            NumericGrid {
                points: *grid_points,
                omega_max: *omega_max,
            },
        ),
        Command::Utility { ou, snr, tau_grid } => utility(ou, *snr, &tau_grid.0),
        Command::JumpIdentity { ou, snr, horizon, nodes } => jump_identity(ou, *snr, *horizon, *nodes),
        Command::Counterexample {
            chain,
            snr,
            d_grid,
            hist_len,
            analytic_only,
            mc,
        } => counterexample(chain.as_deref(), *snr, &d_grid.0, *hist_len, *analytic_only, mc),
        Command::Simulate {
            ou,
            snr,
            d,
            gamma_future,
            l,
            mc,
        } => simulate(ou, *snr, d.0, *gamma_future, *l, mc),
        Command::RunManifest { manifest } => manifest::run_named(manifest),
    }
}

fn ou_params(a: &OuArgs) -> Result<OuParams, CliError> {
    Ok(OuParams::with_beta(a.alpha, a.beta)?)
}

fn mc_config(a: &McArgs, default_paths: usize) -> McConfig {
    McConfig {
        seed: a.seed,
        paths: a.paths.unwrap_or(default_paths),
        step: a.step,
        window: a.window,
        target_stderr: a.target_stderr,
        ..McConfig::default()
    }
}

fn curve_output(curve: &LmmseCurve, extra: Value) -> Output {
    let mut json = lagmmse_core::io::curve_to_json(curve);
    if let (Value::Object(map), Value::Object(more)) = (&mut json, extra) {
        map.extend(more);
    }
    Output {
        csv: Some(csv_table("d,value", curve.points.iter().map(|&(d, v)| vec![d, v]))),
        json,
        failed: false,
    }
}

fn ou_curve(a: &OuArgs, snr: f64, grid: &[f64]) -> Result<Output, CliError> {
    let p = ou_params(a)?;
    let curve = LmmseCurve::sample(grid, cmmse_ou(&p, snr)?, mmse_ou(&p, snr)?, p.stationary_variance(), |d| {
        lmmse_ou(&p, snr, d)
    })?;
    Ok(curve_output(&curve, json!({ "alpha": p.alpha, "beta": p.beta, "snr": snr })))
}

fn tradeoff_cmd(a: &OuArgs, snr: f64, grid: &[f64]) -> Result<Output, CliError> {
    let p = ou_params(a)?;
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for &d in grid {
        // below the asymptote no finite SNR suffices; report that as null
        let g = match tradeoff(&p, snr, d) {
            Ok(t) => Some(t.gamma_star),
            Err(lagmmse_core::Error::NoSolution(_)) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push(json!({ "d": json_number(d), "gamma_star": g.map(json_number) }));
        csv_rows.push(vec![d, g.unwrap_or(f64::NAN)]);
    }
    Ok(Output {
        json: json!({
            "alpha": p.alpha,
            "beta": p.beta,
            "snr": snr,
            "cmmse": cmmse_ou(&p, snr)?,
            "gamma_inf": gamma_inf(&p, snr)?,
            "d_star": d_star(&p, snr)?,
            "rows": rows,
        }),
        csv: Some(csv_table("d,gamma_star", csv_rows)),
        failed: false,
    })
}

fn mixture_bounds(
    alphas: &[f64],
    weights: &[f64],
    snr: f64,
    grid: &[f64],
    beta_grid: Option<&[f64]>,
    no_upper: bool,
    mc: &McArgs,
) -> Result<Output, CliError> {
    let m = MixingMeasure::new(alphas.to_vec(), weights.to_vec())?;
    let sx = mixture_spectrum(&m)?;
    let f = factorize_rational(&sx, snr)?;
    let pfe = wiener_transfer(&sx, &f, snr)?;
    let g_mmse = wiener_mmse(&sx, snr)?;
    let betas = beta_grid.map(<[f64]>::to_vec).unwrap_or_else(|| m.default_beta_grid());
    let cfg = mc_config(mc, McConfig::default().paths);
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for &d in grid {
        let lower = mixture_lmmse(&m, snr, d)?;
        let gaussian = lmmse_rational(&pfe, g_mmse, d)?;
        let upper = if no_upper {
            None
        } else {
            Some(gaussian_upper_bound(&m, snr, d, &betas, &cfg)?)
        };
        rows.push(json!({
            "d": json_number(d),
            "mixture": lower,
            "gaussian": gaussian,
            "upper": upper.map(|b| b.upper),
            "upper_stderr": upper.map(|b| b.upper_stderr),
            "best_beta": upper.map(|b| b.best_beta),
        }));
        let (u, se) = upper.map_or((f64::NAN, f64::NAN), |b| (b.upper, b.upper_stderr));
        csv_rows.push(vec![d, lower, gaussian, u, se]);
    }
    Ok(Output {
        json: json!({
            "alphas": alphas,
            "weights": weights,
            "snr": snr,
            "beta_grid": betas,
            "seed": cfg.seed,
            "points": rows,
        }),
        csv: Some(csv_table("d,mixture,gaussian,upper,upper_stderr", csv_rows)),
        failed: false,
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn complex_list(values: impl IntoIterator<Item = lagmmse_core::spectral::Complex64>) -> Value {
    Value::Array(values.into_iter().map(|c| json!([c.re, c.im])).collect())
}

fn spectral(
    spec: Option<&Path>,
    csv: Option<&Path>,
    snr: Option<f64>,
    grid: &[f64],
    numeric_grid: NumericGrid,
) -> Result<Output, CliError> {
    let (process, config_snr) = match (spec, csv) {
        (Some(p), None) => {
            let cfg = ProcessConfig::from_json(&read(p)?)?;
            (cfg.process, cfg.snr)
        }
        (None, Some(p)) => (ProcessSpec::TabulatedGaussian(TabulatedSpectrum::from_csv(&read(p)?)?), None),
        _ => return Err(CliError::Input("give exactly one of --spec or --csv".into())),
    };
    let snr = snr
        .or(config_snr)
        .ok_or_else(|| CliError::Input("no snr: pass --snr or set it in the config".into()))?;
    let rational = match &process {
        ProcessSpec::Ou(p) => Some(RationalSpectrum::ou(p)),
        ProcessSpec::OuMixture(m) => Some(mixture_spectrum(m)?),
        ProcessSpec::RationalGaussian(r) => Some(r.clone()),
        ProcessSpec::TabulatedGaussian(_) => None,
        ProcessSpec::ShiftedMarkov(_) => {
            return Err(CliError::Input(
                "spectral analysis needs a Gaussian process; use the counterexample command for chains".into(),
            ))
        }
    };
    let (curve, mut extra) = match (&rational, &process) {
        (Some(sx), _) => {
            sx.validate()?;
            let f = factorize_rational(sx, snr)?;
            let pfe = wiener_transfer(sx, &f, snr)?;
            let mmse = wiener_mmse(sx, snr)?;
            let cmmse = lmmse_rational(&pfe, mmse, 0.0)?;
            let curve = LmmseCurve::sample(grid, cmmse, mmse, sx.variance()?, |d| lmmse_rational(&pfe, mmse, d))?;
            let residues = |terms: &[(lagmmse_core::spectral::Complex64, lagmmse_core::spectral::Complex64)]| {
                Value::Array(
                    terms
                        .iter()
                        .map(|(q, r)| json!({ "pole": [q.re, q.im], "residue": [r.re, r.im] }))
                        .collect(),
                )
            };
            let extra = json!({
                "pipeline": "rational",
                "poles": complex_list(f.plus_poles.iter().copied()),
                "zeros": complex_list(f.plus_zeros.iter().copied()),
                "residues": {
                    "anticausal": residues(&pfe.anticausal_terms),
                    "causal": residues(&pfe.causal_terms),
                },
            });
            (curve, extra)
        }
        (None, ProcessSpec::TabulatedGaussian(t)) => {
            let num = factorize_numeric(t, snr, numeric_grid)?;
            let curve = num.curve(grid)?;
            (curve, json!({ "pipeline": "numeric", "reconstruction_rms": num.recon_rms }))
        }
        _ => unreachable!("every other variant is rational or rejected above"),
    };
    let gap = curve.cmmse - curve.mmse;
    let fit = decay_rate(&curve);
    if let Value::Object(map) = &mut extra {
        map.insert("snr".into(), json!(snr));
        match &fit {
            Ok(fit) => {
                map.insert("decay_kind".into(), json!(fit.kind));
                map.insert("decay_exponent".into(), json!(fit.exponent));
            }
            Err(e) => {
                map.insert("decay_kind".into(), Value::Null);
                map.insert("decay_note".into(), json!(e.to_string()));
            }
        }
    }
    let mut out = curve_output(&curve, extra);
    out.csv = Some(csv_table(
        "d,lmmse,p_d",
        curve
            .points
            .iter()
            .map(|&(d, v)| vec![d, v, if gap > 0.0 { (v - curve.mmse) / gap } else { f64::NAN }]),
    ));
    Ok(out)
}

fn utility(a: &OuArgs, snr: f64, grid: &[f64]) -> Result<Output, CliError> {
    let p = ou_params(a)?;
    let curve = utility_curve(&p, snr, grid)?;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| vec![curve.tau_grid[i], curve.u_values[i], curve.u_prime[i]])
        .collect();
    Ok(Output {
        json: json!({
            "alpha": p.alpha,
            "beta": p.beta,
            "snr": snr,
            "tau": curve.tau_grid.iter().map(|&t| json_number(t)).collect::<Vec<_>>(),
            "utility": curve.u_values,
            "utility_prime": curve.u_prime,
            "utility_prime_at_zero": curve.u_prime0,
            "utility_limit": utility_ou(&p, snr, f64::INFINITY)?,
            "mmse_from_limit": utility_limit_mmse(&p, snr),
            "mutual_info_rate": curve.mutual_info_rate,
        }),
        csv: Some(csv_table("tau,utility,utility_prime", rows)),
        failed: false,
    })
}

fn jump_identity(a: &OuArgs, snr: f64, horizon: f64, nodes: usize) -> Result<Output, CliError> {
    let p = ou_params(a)?;
    let r = theorem1_check(&p, snr, horizon, &QuadConfig::with_nodes(nodes))?;
    Ok(Output::json(json!({
        "alpha": p.alpha,
        "beta": p.beta,
        "snr": snr,
        "T": horizon,
        "cmmse": r.lhs,
        "integral": r.rhs,
        "abs_err": r.abs_err,
        "nodes": r.nodes,
    })))
}

fn counterexample(
    chain_path: Option<&Path>,
    snr: f64,
    grid: &[f64],
    hist_len: usize,
    analytic_only: bool,
    mc: &McArgs,
) -> Result<Output, CliError> {
    let chain = match chain_path {
        Some(p) => serde_json::from_str::<Dtmc>(&read(p)?).map_err(|e| CliError::Input(e.to_string()))?,
        None => Dtmc::example(),
    };
    chain.validate()?;
    let rev = dtmc_reverse(&chain)?;
    let mut json = json!({
        "values": chain.values,
        "transition": chain.transition,
        "stationary": chain.stationary,
        "reversed_transition": rev.transition,
        "variance": chain.variance(),
        "prediction_variance_fwd": prediction_variance(&chain),
        "prediction_variance_rev": prediction_variance(&rev),
    });
    if analytic_only {
        let rows: Vec<Vec<f64>> = grid
            .iter()
            .map(|&d| {
                Ok(vec![
                    d,
                    lagmmse_core::lmmse_infinite_snr(&chain, d)?,
                    lagmmse_core::lmmse_infinite_snr(&rev, d)?,
                ])
            })
            .collect::<Result<_, lagmmse_core::Error>>()?;
        return Ok(Output {
            json,
            csv: Some(csv_table("d,fwd_inf_snr,rev_inf_snr", rows)),
            failed: false,
        });
    }
    let opts = HmmOptions {
        hist_len,
        snr,
        ..HmmOptions::default()
    };
    let cfg = McConfig {
        paths: mc.paths.unwrap_or(markov_mc(0).paths),
        ..McConfig::with_seed(mc.seed)
    };
    let report = theorem2_report(&chain, grid, &opts, &cfg)?;
    let csv = csv_table(
        "d,fwd,fwd_stderr,rev,rev_stderr,significant,fwd_inf_snr,rev_inf_snr",
        report.rows.iter().map(|r| {
            vec![
                r.d,
                r.lmmse_fwd,
                r.stderr_fwd,
                r.lmmse_rev,
                r.stderr_rev,
                if r.significant { 1.0 } else { 0.0 },
                r.fwd_inf_snr,
                r.rev_inf_snr,
            ]
        }),
    );
    if let Value::Object(map) = &mut json {
        map.insert("snr".into(), json!(snr));
        map.insert("paths".into(), json!(cfg.paths));
        map.insert("seed".into(), json!(cfg.seed));
        map.insert("rows".into(), serde_json::to_value(&report.rows).expect("rows serialize"));
    }
    Ok(Output {
        json,
        csv: Some(csv),
        failed: false,
    })
}

fn simulate(a: &OuArgs, snr: f64, d: f64, gamma_future: Option<f64>, l: f64, mc: &McArgs) -> Result<Output, CliError> {
    let p = ou_params(a)?;
    let cfg = mc_config(mc, McConfig::default().paths);
    let json = match gamma_future {
        None => {
            let rep = simulate_fixed_lag(&p, snr, d, &cfg)?;
            let exact = lmmse_ou(&p, snr, d)?;
            json!({
                "d": json_number(d),
                "estimate": rep.estimate,
                "stderr": rep.stderr,
                "discrete_exact": rep.discrete_exact,
                "continuous_exact": exact,
                "z_score": (rep.estimate - rep.discrete_exact) / rep.stderr,
                "steps_to_steady_state": rep.steps_to_steady_state,
            })
        }
        Some(g) => {
            let jump = JumpChannelSpec::new(snr, g, 1.0)?;
            let est = jump_f_mc(&ProcessSpec::Ou(p), &jump, d, l, &cfg)?;
            let exact = jump_f_ou(&p, &jump, d, l)?.value;
            json!({
                "d": d,
                "l": l,
                "gamma_future": g,
                "estimate": est.value,
                "stderr": est.stderr,
                "continuous_exact": exact,
                "z_score": (est.value - exact) / est.stderr,
            })
        }
    };
    Ok(Output::json(json))
}
