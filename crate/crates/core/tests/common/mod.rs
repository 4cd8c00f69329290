#![allow(dead_code)]

use rug::ops::Pow;
use rug::Float;

const PREC: u32 = 512;

/// `E_{α,β}(x)` from the Taylor series summed in 512-bit arithmetic with
/// Kahan compensation; the value is rounded to f64 only at the end.
pub fn ml_oracle(alpha: f64, beta: f64, x: f64) -> f64 {
    let a = Float::with_val(PREC, alpha);
    let b = Float::with_val(PREC, beta);
    let xf = Float::with_val(PREC, x);
    let mut sum = Float::with_val(PREC, 0);
    let mut comp = Float::with_val(PREC, 0);
    let mut pow = Float::with_val(PREC, 1);
    let mut quiet = 0;
    for n in 0..6000u32 {
        let arg = Float::with_val(PREC, &a * n) + &b;
        let term = if arg <= 0 && arg.is_integer() {
            Float::with_val(PREC, 0)
        } else {
            Float::with_val(PREC, &pow / arg.gamma())
        };
        let y = Float::with_val(PREC, &term - &comp);
        let t = Float::with_val(PREC, &sum + &y);
        comp = Float::with_val(PREC, &t - &sum) - y;
        sum = t;
        pow *= &xf;
        let small = term.clone().abs() < Float::with_val(PREC, sum.clone().abs() * Float::with_val(PREC, 2).pow(-200));
        if small && n as f64 > x.abs().powf(1.0 / alpha) {
            quiet += 1;
            if quiet > 5 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    sum.to_f64()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `∫₀^h s^k · s^{α−1} E_{α,α}(−λs^α) ds`, integrated term by term in 512-bit
/// arithmetic: `Σ (−λ)^n h^{αn+α+k} / ((αn+α+k) Γ(αn+α))`.
pub fn moment_oracle(alpha: f64, lambda: f64, h: f64, k: u32) -> f64 {
    let a = Float::with_val(PREC, alpha);
    let hf = Float::with_val(PREC, h);
    let ml = Float::with_val(PREC, -lambda);
    let mut sum = Float::with_val(PREC, 0);
    let mut pow = Float::with_val(PREC, 1);
    for n in 0..4000u32 {
        let e = Float::with_val(PREC, &a * n) + &a;
        let ek = Float::with_val(PREC, &e + k);
        let term = Float::with_val(PREC, &pow * Float::with_val(PREC, hf.clone().pow(&ek)))
            / Float::with_val(PREC, &ek * e.gamma());
        let tiny = term.clone().abs() < Float::with_val(PREC, sum.clone().abs() * Float::with_val(PREC, 2).pow(-200));
        sum += &term;
        if tiny && n > 10 && (n as f64) > (lambda * h.powf(alpha)).powf(1.0 / alpha) {
            break;
        }
        pow *= &ml;
    }
    sum.to_f64()
}
