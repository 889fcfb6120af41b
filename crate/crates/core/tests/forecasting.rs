use gartfima::forecast::{compare_models, one_step_forecasts, pi_weights, Candidate, CompareOptions, ForecastOptions};
use gartfima::numerics::{ar_polynomial, convolve, ma_polynomial, series_divide, tempered_gegenbauer_coeffs};
use gartfima::simulate::{derive_stream_seed, simulate, SimulationConfig};
use gartfima::{ModelFamily, ModelSpec};

#[test]
fn forecasts_are_causal() {
    let spec = ModelSpec::core(0.3, 0.2, 0.4, 1.0).with_ar(vec![0.3]);
    let x = simulate(&spec, &SimulationConfig::new(400, 1)).unwrap();
    let opts = ForecastOptions::default();
    let a = one_step_forecasts(&spec, &x, &opts).unwrap();
    let cut = a.split_index + 50;
    let mut y = x.clone();
    for v in &mut y[cut..] {
        *v = -3.0 * *v + 10.0;
    }
    let b = one_step_forecasts(&spec, &y, &opts).unwrap();
    let k = cut - a.split_index;
    // the prediction of x_cut only uses x_0..x_{cut-1}
    assert_eq!(a.predictions[..=k], b.predictions[..=k]);
    assert_ne!(a.predictions[k + 1], b.predictions[k + 1]);
}

#[test]
fn pi_inverts_psi() {
    for spec in [
        ModelSpec::core(0.45, 0.0, 0.5, 1.0),
        ModelSpec::core(-0.3, 0.5, -0.6, 1.0).with_ma(vec![0.6]),
        ModelSpec::artfima(0.8, 0.05, 1.0).with_ar(vec![0.7, -0.2]),
    ] {
        let m = 600;
        let pi = pi_weights(&spec, m).unwrap().values;
        let core = tempered_gegenbauer_coeffs(spec.d, spec.u, spec.lambda, m).unwrap().values;
        let psi = series_divide(&convolve(&core, &ma_polynomial(&spec.ma), m + 1), &ar_polynomial(&spec.ar), m + 1);
        let prod = convolve(&pi, &psi, m + 1);
        assert!((prod[0] - 1.0).abs() < 1e-12);
        assert!(prod[1..].iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn residual_variance_matches_innovations() {
    let spec = ModelSpec::core(0.3, 0.2, 0.4, 2.0).with_ar(vec![0.5]);
    let x = simulate(&spec, &SimulationConfig::new(20_000, 0xF0)).unwrap();
    let r = one_step_forecasts(&spec, &x, &ForecastOptions::default()).unwrap();
    assert_eq!(r.predictions.len(), 5000);
    assert!((r.residual_variance / 2.0 - 1.0).abs() < 0.10, "{}", r.residual_variance);
    assert!((r.rmse * r.rmse - r.residuals.iter().map(|e| e * e).sum::<f64>() / 5000.0).abs() < 1e-12);
}

#[test]
fn white_noise_comparison_rmse_is_sigma() {
    let sigma = 1.5_f64;
    let cands = [Candidate::new(ModelFamily::Arma, 0, 0), Candidate::new(ModelFamily::Gartfima, 0, 0)];
    let opts = CompareOptions::default();
    for c in 0..2 {
        let mut total = 0.0;
        let reps = 20;
        for r in 0..reps {
            let x = simulate(&ModelSpec::core(0.0, 0.0, 1.0, sigma * sigma), &SimulationConfig::new(1000, derive_stream_seed(0xB, r))).unwrap();
            let rows = compare_models(&x, &cands, &opts).unwrap();
            total += rows.iter().find(|row| row.candidate == cands[c]).unwrap().rmse.unwrap();
        }
        let mean = total / reps as f64;
        assert!((mean / sigma - 1.0).abs() < 0.05, "{:?}: mean rmse {mean}", cands[c]);
    }
}

#[test]
fn comparison_does_not_depend_on_candidate_order() {
    let x = simulate(&ModelSpec::core(0.3, 0.2, 0.2, 1.0), &SimulationConfig::new(500, 8)).unwrap();
    let cands = vec![
        Candidate::new(ModelFamily::Arfima, 0, 0),
        Candidate::new(ModelFamily::Garma, 0, 0),
        Candidate::new(ModelFamily::Gartfima, 1, 0),
    ];
    let opts = CompareOptions::default();
    let a = compare_models(&x, &cands, &opts).unwrap();
    let rev: Vec<Candidate> = cands.iter().rev().cloned().collect();
    let b = compare_models(&x, &rev, &opts).unwrap();
    for row in &a {
        let other = b.iter().find(|r| r.candidate == row.candidate).unwrap();
        assert_eq!(row.rmse, other.rmse);
    }
    assert!(a.windows(2).all(|w| w[0].rmse.unwrap() <= w[1].rmse.unwrap()));
}
