//! Gamma-function helpers.
//!
//! `libm::tgamma`/`lgamma_r` (a Lanczos-type approximation with reflection for
//! negative arguments) back everything here; the wrappers add the reciprocal
//! form used by the Mittag-Leffler series, where poles of Γ contribute zero.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `sin(πx)` with exact argument reduction, so integer `x` gives exactly zero.
pub fn sin_pi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    // reduce to [-1, 1]; the subtraction is exact for |x| < 2^52
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.5 {
        1.0
    } else if r == -0.5 {
        -1.0
    } else {
        (PI * r).sin()
    }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// `1/Γ(x)`, an entire function: zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 171.0 {
        return (-ln_gamma(x)).exp();
    }
    if x < -170.0 {
        // 1/Γ(x) = sin(πx) Γ(1−x) / π, Γ(1−x) overflows: go through logs
        return sin_pi(x) / PI * ln_gamma(1.0 - x).exp();
    }
    1.0 / gamma(x)
}

/// `exp(log_mag) / Γ(x)` without intermediate overflow.
pub fn scaled_rgamma(x: f64, log_mag: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 0.0 {
        if x < 170.0 && log_mag.abs() < 600.0 {
            return log_mag.exp() / gamma(x);
        }
        return (log_mag - ln_gamma(x)).exp();
    }
    // reflection: 1/Γ(x) = sin(πx) Γ(1−x) / π
    let s = sin_pi(x) / PI;
    if 1.0 - x < 170.0 && log_mag.abs() < 600.0 {
        s * gamma(1.0 - x) * log_mag.exp()
    } else {
        s * (log_mag + ln_gamma(1.0 - x)).exp()
    }
}
