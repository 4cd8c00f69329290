use std::f64::consts::PI;
use std::sync::Arc;

use fracwave::spectral::frac_norm_coeffs;
use fracwave::{
    homogeneous_state, make_operator, rate_fit, ForcingSpec, LinearProblem, Operator, OperatorSpecConfig, SpectralField,
};

const N: usize = 2000;

fn interval() -> Arc<Operator> {
    Arc::new(make_operator(&OperatorSpecConfig::DirichletLaplacianInterval { length: PI }).unwrap())
}

fn power_law(op: &Arc<Operator>, exponent: f64) -> SpectralField {
    SpectralField::new(op.clone(), (1..=N).map(|n| (n as f64).powf(-exponent)).collect()).unwrap()
}

fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Fitted exponent of `norm(t)` for the homogeneous problem with the given data.
fn fit(alpha: f64, u0: SpectralField, u1: SpectralField, window: (f64, f64), norm: impl Fn(&[f64], &[f64], &[f64]) -> f64) -> f64 {
    let op = u0.op().clone();
    let p = LinearProblem::new(alpha, u0, u1, ForcingSpec::Zero).unwrap();
    let lambdas = op.eigenvalues(N);
    let times = log_times(window.0 / 4.0, window.1, 40);
    let vals: Vec<f64> = times
        .iter()
        .map(|&t| {
            let (u, v) = homogeneous_state(&p, t).unwrap();
            norm(&u, &v, &lambdas)
        })
        .collect();
    rate_fit(&times, &vals, window).unwrap().exponent
}

#[test]
fn velocity_layer_exponent() {
    let op = interval();
    for alpha in [1.25, 1.5, 1.75] {
        let beta = 1.0 - 1.0 / alpha;
        // ‖u0‖²_{V_γ} = Σ n^{−2}: inside V_γ, as the estimate requires
        let u0 = power_law(&op, 1.0 + 2.0 / alpha);
        let u1 = SpectralField::zeros(op.clone(), N).unwrap();
        let p = fit(alpha, u0, u1, (1e-3, 1e-1), |_, v, _| frac_norm_coeffs(&op, v, -beta));
        println!("alpha={alpha}: velocity exponent {p:.4} (want {:.4})", alpha * beta);
        assert!((p - alpha * beta).abs() <= 0.1);
    }
}

#[test]
fn displacement_layer_exponent() {
    let op = interval();
    for alpha in [1.25, 1.5, 1.75] {
        let sigma = 0.5 / alpha;
        let u0 = SpectralField::zeros(op.clone(), N).unwrap();
        // borderline for L², so that the t^{1−ασ} envelope is attained
        let u1 = power_law(&op, 0.5);
        let p = fit(alpha, u0, u1, (1e-3, 1e-1), |u, _, _| frac_norm_coeffs(&op, u, sigma));
        println!("alpha={alpha}: displacement exponent {p:.4} (want {:.4})", 1.0 - alpha * sigma);
        assert!((p - (1.0 - alpha * sigma)).abs() <= 0.1);
    }
}

#[test]
fn strong_envelope_exponent() {
    let op = interval();
    for alpha in [1.25, 1.5, 1.75] {
        // borderline for V_γ, so that the t^{1−α} envelope is attained
        let u0 = power_law(&op, 0.5 + 2.0 / alpha);
        let u1 = SpectralField::zeros(op.clone(), N).unwrap();
        // D^α u = −λu without forcing
        let p = fit(alpha, u0, u1, (1e-3, 1e-1), |u, _, l| {
            let au: Vec<f64> = u.iter().zip(l).map(|(c, l)| c * l).collect();
            frac_norm_coeffs(&op, &au, 0.0)
        });
        println!("alpha={alpha}: strong exponent {p:.4} (want {:.4})", 1.0 - alpha);
        assert!((p - (1.0 - alpha)).abs() <= 0.1);
    }
}
