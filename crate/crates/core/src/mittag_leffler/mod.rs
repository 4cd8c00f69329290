//! Two-parameter Mittag-Leffler function on the real axis.
//!
//! `E_{α,β}(x) = Σ_{n≥0} x^n / Γ(αn + β)` is evaluated by one of three
//! regimes, selected from `|x|` and the thresholds in [`MLPrecision`]:
//!
//! * `|x| ≤ series_cutoff`: the Taylor series with compensated summation;
//! * `x ≤ −asym_cutoff`: the asymptotic expansion
//!   `E_{α,β}(−x) ≈ (2/α)·Re[s^{1−β} e^s] − Σ_k (−x)^{−k}/Γ(β−αk)`,
//!   `s = x^{1/α} e^{iπ/α}` (the exponential pair only exists for `α > 1`),
//!   truncated at the smallest term and only used when that term is below
//!   the tolerance;
//! * otherwise, for `1 < α ≤ 2`, the duplication identity
//!   `E_{α,β}(−x) = Re E_{α/2,β}(i√x)`, whose half-order value comes from a
//!   Laplace-inversion contour integral ([`contour`]).
//!
//! The elementary cases `α ∈ {1, 2}` with `β ∈ {1, 2, 3}` reduce to
//! `exp`, `cos`, `sin` and `cosh`/`sinh` and are evaluated in closed form.
//!
//! Every summation runs in a fixed ascending order, so results are bitwise
//! reproducible.

mod contour;

use crate::error::{Error, Result};
use crate::special::{rgamma, scaled_rgamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub(crate) use contour::ml_laplace_inversion;

/// Target accuracy of the contour integral.
const CONTOUR_LOG_EPS: f64 = -34.538_776_394_910_684; // ln(1e-15)

/// A point `(α, β, x)` at which `E_{α,β}(x)` is requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MLQuery {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
}

impl MLQuery {
    pub fn new(alpha: f64, beta: f64, x: f64) -> Result<Self> {
        let q = Self { alpha, beta, x };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Domain(format!("beta must be finite, got {}", self.beta)));
        }
        if !self.x.is_finite() {
            return Err(Error::Domain(format!("argument must be finite, got {}", self.x)));
        }
        Ok(())
    }
}

/// Accuracy policy and regime thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MLPrecision {
    pub rel_tol: f64,
    /// Largest `|x|` summed with the plain Taylor series.
    pub series_cutoff: f64,
    /// Smallest `-x` for which the asymptotic expansion is tried.
    pub asym_cutoff: f64,
    pub max_terms: usize,
}

impl Default for MLPrecision {
    fn default() -> Self {
        Self { rel_tol: 1e-12, series_cutoff: 5.0, asym_cutoff: 50.0, max_terms: 2000 }
    }
}

impl MLPrecision {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Domain(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.series_cutoff > 0.0 && self.series_cutoff < self.asym_cutoff) {
            return Err(Error::Domain(format!(
                "need 0 < series_cutoff < asym_cutoff, got {} and {}",
                self.series_cutoff, self.asym_cutoff
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// `E_{α,β}(x)` to the relative accuracy requested in `p`.
pub fn ml_e(q: &MLQuery, p: &MLPrecision) -> Result<f64> {
    q.validate()?;
    p.validate()?;
    eval(q.alpha, q.beta, q.x, p)
}

/// `E_{α,β}(x)` with the default precision policy.
pub fn mittag_leffler(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    ml_e(&MLQuery::new(alpha, beta, x)?, &MLPrecision::default())
}

/// Unchecked evaluation path shared by the solvers.
pub(crate) fn eval(alpha: f64, beta: f64, x: f64, p: &MLPrecision) -> Result<f64> {
    if x == 0.0 {
        return Ok(rgamma(beta));
    }
    if let Some(v) = elementary(alpha, beta, x, p) {
        return finite(v, alpha, beta, x);
    }
    if x.abs() <= p.series_cutoff {
        return taylor(alpha, beta, x, p);
    }
    if x > 0.0 {
        return if alpha >= 1.0 {
            taylor(alpha, beta, x, p)
        } else {
            let v = ml_laplace_inversion(alpha, beta, Complex64::new(x, 0.0), CONTOUR_LOG_EPS).re;
            finite(v, alpha, beta, x)
        };
    }

    let mag = -x;
    if mag >= p.asym_cutoff && alpha != 1.0 {
        if let Some(v) = asymptotic(alpha, beta, mag, p) {
            return finite(v, alpha, beta, x);
        }
    }
    let v = if alpha > 1.0 {
        let w = Complex64::new(0.0, mag.sqrt());
        ml_laplace_inversion(alpha / 2.0, beta, w, CONTOUR_LOG_EPS).re
    } else {
        ml_laplace_inversion(alpha, beta, Complex64::new(x, 0.0), CONTOUR_LOG_EPS).re
    };
    finite(v, alpha, beta, x)
}

fn finite(v: f64, alpha: f64, beta: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("E_{{{alpha},{beta}}}({x}) is not representable")))
    }
}

fn elementary(alpha: f64, beta: f64, x: f64, p: &MLPrecision) -> Option<f64> {
    if alpha == 1.0 {
        match beta {
            b if b == 1.0 => Some(x.exp()),
            b if b == 2.0 => Some(x.exp_m1() / x),
            b if b == 3.0 && x.abs() > 1.0 => Some((x.exp_m1() - x) / (x * x)),
            _ => None,
        }
    } else if alpha == 2.0 {
        let y = x.abs().sqrt();
        let neg = x < 0.0;
        match beta {
            b if b == 1.0 => Some(if neg { y.cos() } else { y.cosh() }),
            b if b == 2.0 => Some(if neg { y.sin() / y } else { y.sinh() / y }),
            b if b == 3.0 && x.abs() > p.series_cutoff.min(1.0) => {
                let half = if neg { (y / 2.0).sin() } else { (y / 2.0).sinh() };
                Some(2.0 * half * half / (y * y))
            }
            _ => None,
        }
    } else {
        None
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn taylor(alpha: f64, beta: f64, x: f64, p: &MLPrecision) -> Result<f64> {
    let log_abs = x.abs().ln();
    let negative = x < 0.0;
    let mut acc = CompensatedSum::default();
    let mut prev = f64::INFINITY;
    for n in 0..p.max_terms {
        let nf = n as f64;
        let mag = scaled_rgamma(alpha * nf + beta, nf * log_abs);
        let term = if negative && n % 2 == 1 { -mag } else { mag };
        acc.add(term);
        let total = acc.value();
        if !total.is_finite() {
            return Err(Error::Overflow(format!("Taylor series of E_{{{alpha},{beta}}}({x}) overflowed")));
        }
        // terms decrease monotonically once αn + β outgrows |x|^{1/α}
        if term != 0.0 && term.abs() <= prev && term.abs() <= 1e-17 * total.abs().max(1e-300) {
            return Ok(total);
        }
        if term != 0.0 {
            prev = term.abs();
        }
    }
    Err(Error::Accuracy(format!(
        "Taylor series of E_{{{alpha},{beta}}}({x}) did not converge in {} terms",
        p.max_terms
    )))
}

/// Large-argument expansion for `E_{α,β}(−x)`; `None` when the smallest
/// algebraic term is not below the tolerance.
fn asymptotic(alpha: f64, beta: f64, x: f64, p: &MLPrecision) -> Option<f64> {
    let mut exp_part = 0.0;
    if alpha > 1.0 {
        let s = Complex64::from_polar(x.powf(1.0 / alpha), std::f64::consts::PI / alpha);
        exp_part = 2.0 / alpha * (s.powf(1.0 - beta) * s.exp()).re;
    }

    let log_x = x.ln();
    let mut acc = CompensatedSum::default();
    let mut smallest = f64::INFINITY;
    let mut converged = false;
    for k in 1..p.max_terms {
        let kf = k as f64;
        let mag = scaled_rgamma(beta - alpha * kf, -kf * log_x);
        if mag == 0.0 {
            continue;
        }
        // −z^{−k}/Γ(β−αk) with z = −x
        let term = if k % 2 == 0 { -mag } else { mag };
        if term.abs() > smallest {
            break;
        }
        smallest = term.abs();
        acc.add(term);
        if term.abs() <= 1e-17 * (acc.value() + exp_part).abs() {
            converged = true;
            break;
        }
    }
    let value = acc.value() + exp_part;
    if !smallest.is_finite() {
        // every algebraic term vanishes: the exponential pair is exact
        return Some(exp_part);
    }
    if converged || smallest <= 0.1 * p.rel_tol * value.abs() {
        Some(value)
    } else {
        None
    }
}

/// Empirical lower estimate of the constant `C` in `|E_{α,β}(−x)| ≤ C/(1+x)`:
/// the supremum of `(1+x)|E_{α,β}(−x)|` over `x = 0` and a logarithmic grid
/// on `[10^{-3} min(1, x_max), x_max]`.
pub fn ml_bound_probe(alpha: f64, beta: f64, x_max: f64, n_grid: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !(x_max > 0.0 && x_max.is_finite()) || n_grid < 2 {
        return Err(Error::Domain("need x_max > 0 and n_grid >= 2".into()));
    }
    let p = MLPrecision::default();
    let lo = (1e-3 * x_max.min(1.0)).log10();
    let hi = x_max.log10();
    let mut sup = rgamma(beta).abs();
    let m = n_grid - 1;
    for i in 0..m {
        let x = if m == 1 { x_max } else { 10f64.powf(lo + (hi - lo) * i as f64 / (m - 1) as f64) };
        let v = (1.0 + x) * eval(alpha, beta, -x, &p)?.abs();
        sup = sup.max(v);
    }
    Ok(sup)
}

/// Absolute residuals of the three derivative identities, the left-hand
/// sides taken by central differences of step `h`:
///
/// 1. `d/dt E_{α,1}(−λt^α) = −λ t^{α−1} E_{α,α}(−λt^α)`
/// 2. `d/dt [t E_{α,2}(−λt^α)] = E_{α,1}(−λt^α)`
/// 3. `d/dt [t^{α−1} E_{α,α}(−λt^α)] = t^{α−2} E_{α,α−1}(−λt^α)`
pub fn ml_identity_residuals(alpha: f64, lambda: f64, t: f64, h: f64) -> Result<(f64, f64, f64)> {
    if !(alpha > 1.0 && alpha <= 2.0) || !(lambda > 0.0) {
        return Err(Error::Domain(format!("need 1 < alpha <= 2 and lambda > 0, got {alpha}, {lambda}")));
    }
    if !(h > 0.0 && t > h) {
        return Err(Error::Precondition(format!("step h = {h} too large for t = {t}")));
    }
    let p = MLPrecision::default();
    let e = |beta: f64, s: f64| eval(alpha, beta, -lambda * s.powf(alpha), &p);
    let (tp, tm) = (t + h, t - h);

    let d1 = (e(1.0, tp)? - e(1.0, tm)?) / (2.0 * h);
    let r1 = (d1 + lambda * t.powf(alpha - 1.0) * e(alpha, t)?).abs();

    let d2 = (tp * e(2.0, tp)? - tm * e(2.0, tm)?) / (2.0 * h);
    let r2 = (d2 - e(1.0, t)?).abs();

    let d3 = (tp.powf(alpha - 1.0) * e(alpha, tp)? - tm.powf(alpha - 1.0) * e(alpha, tm)?) / (2.0 * h);
    let r3 = (d3 - t.powf(alpha - 2.0) * e(alpha - 1.0, t)?).abs();

    Ok((r1, r2, r3))
}

/// `M_k = ∫₀^h s^k · s^{α−1} E_{α,α}(−λ s^α) ds` for `k ∈ {0, 1}`.
///
/// `M_0 = h^α E_{α,α+1}(−λh^α)`. `M_1` is summed term by term,
/// `Σ_n (−λ)^n h^{αn+α+1} / ((αn+α+1) Γ(αn+α))`, while `λh^α` is within the
/// Taylor range; beyond it the equivalent closed form
/// `h^{α+1} [E_{α,α+1} − E_{α,α+2}](−λh^α)` is used.
pub fn kernel_moment(alpha: f64, lambda: f64, h: f64, k: u8) -> Result<f64> {
    kernel_moment_with(alpha, lambda, h, k, &MLPrecision::default())
}

pub fn kernel_moment_with(alpha: f64, lambda: f64, h: f64, k: u8, p: &MLPrecision) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) || !(lambda >= 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!(
            "kernel_moment needs 1 < alpha <= 2, lambda >= 0, h > 0; got {alpha}, {lambda}, {h}"
        )));
    }
    let z = lambda * h.powf(alpha);
    match k {
        0 => Ok(h.powf(alpha) * eval(alpha, alpha + 1.0, -z, p)?),
        1 if z <= p.series_cutoff => first_moment_series(alpha, lambda, h, p),
        1 => {
            let (_, m1) = kernel_antiderivatives(alpha, alpha, lambda, h, p)?;
            Ok(m1)
        }
        _ => Err(Error::Domain(format!("moment order must be 0 or 1, got {k}"))),
    }
}

fn first_moment_series(alpha: f64, lambda: f64, h: f64, p: &MLPrecision) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    let mut pow = 1.0;
    let mut prev = f64::INFINITY;
    for n in 0..p.max_terms {
        let e = alpha * n as f64 + alpha;
        let term = pow * h.powf(e + 1.0) / (e + 1.0) * rgamma(e);
        acc.add(term);
        let total = acc.value();
        if term.abs() <= prev && term.abs() <= 0.01 * p.rel_tol * total.abs() {
            return Ok(total);
        }
        prev = term.abs();
        pow *= -lambda;
    }
    Err(Error::Accuracy(format!(
        "first kernel moment series did not reach rel_tol {} in {} terms",
        p.rel_tol, p.max_terms
    )))
}

/// Antiderivatives at `b` of the kernel `K_β(s) = s^{β−1} E_{α,β}(−λ s^α)`:
/// `(∫₀^b K_β, ∫₀^b s K_β) = (b^β E_{α,β+1}, b^{β+1} [E_{α,β+1} − E_{α,β+2}])`
/// evaluated at `−λ b^α`.
pub(crate) fn kernel_antiderivatives(alpha: f64, beta: f64, lambda: f64, b: f64, p: &MLPrecision) -> Result<(f64, f64)> {
    if b == 0.0 {
        return Ok((0.0, 0.0));
    }
    let z = -lambda * b.powf(alpha);
    let e1 = eval(alpha, beta + 1.0, z, p)?;
    let e2 = eval(alpha, beta + 2.0, z, p)?;
    let bb = b.powf(beta);
    Ok((bb * e1, bb * b * (e1 - e2)))
}
