//! Verification instruments: a discrete Caputo derivative, power-law fits
//! and self-convergence studies.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, rgamma};

/// Values below this are treated as round-off by [`rate_fit`] and [`self_convergence`].
pub const ROUND_OFF_FLOOR: f64 = 1e-13;

/// `D_t^α u` at the interior nodes `t_1..t_{M−1}` of a uniform series `u_0..u_M`.
///
/// `∂²u` is reconstructed from centred second differences `δ_j`, interpolated
/// linearly between nodes (`δ_0` extrapolated), and integrated exactly
/// against `(t−s)^{1−α}/Γ(2−α)`. Starting weights on `u_0..u_4` then make the
/// result exact for `1, t, t^α, t^{α+1}, t^{2α}`, the leading terms of
/// solutions with Mittag-Leffler behaviour at `t = 0`. Fewer nodes use a
/// shorter list.
pub fn discrete_caputo(series: &[f64], alpha: f64, dt: f64) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {}", series.len())));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let m = series.len() - 1;
    let weights = CaputoWeights::new(alpha, m);
    let raw = weights.apply(series, dt);

    let exps = [0.0, 1.0, alpha, alpha + 1.0, 2.0 * alpha];
    let s = exps.len().min(m + 1);
    let exps = &exps[..s];
    // G[p][j] = j^{ν_p}; the starting weights solve G w = h^{−ν} (exact − scheme)
    let g = DMatrix::from_fn(s, s, |p, j| if j == 0 { if exps[p] == 0.0 { 1.0 } else { 0.0 } } else { (j as f64).powf(exps[p]) });
    let lu = g.lu();
    let basis_raw: Vec<Vec<f64>> = exps
        .iter()
        .map(|&nu| {
            let b: Vec<f64> = (0..=m).map(|j| (j as f64 * dt).powf(nu)).collect();
            weights.apply(&b, dt)
        })
        .collect();

    let mut out = Vec::with_capacity(m - 1);
    for k in 1..m {
        let t = k as f64 * dt;
        let rhs = DVector::from_fn(s, |p, _| {
            let nu = exps[p];
            let exact = if nu == 0.0 || nu == 1.0 {
                0.0
            } else {
                gamma(nu + 1.0) * rgamma(nu + 1.0 - alpha) * t.powf(nu - alpha)
            };
            (exact - basis_raw[p][k - 1]) / dt.powf(nu)
        });
        let w = lu.solve(&rhs).ok_or_else(|| Error::Inconsistency("singular starting-weight system".into()))?;
        let corr: f64 = (0..s).map(|j| w[j] * series[j]).sum();
        out.push(raw[k - 1] + corr);
    }
    Ok(out)
}

/// Weights of the uncorrected scheme, which depend only on `m = k − j`.
struct CaputoWeights {
    /// `(P_m − Q_m, Q_m)` for `m = 1..=M`: an interval at distance `m` contributes
    /// `h^{2−α}/Γ(2−α) [δ_j (P_m − Q_m) + δ_{j+1} Q_m]`.
    near_far: Vec<(f64, f64)>,
    scale_mu: f64,
    mu: f64,
}

impl CaputoWeights {
    fn new(alpha: f64, m: usize) -> Self {
        let mu = 2.0 - alpha;
        let near_far = (1..=m)
            .map(|mm| {
                let (a, b) = (mm as f64, (mm - 1) as f64);
                let p = (a.powf(mu) - b.powf(mu)) / mu;
                let q = a * p - (a.powf(mu + 1.0) - b.powf(mu + 1.0)) / (mu + 1.0);
                (p - q, q)
            })
            .collect();
        Self { near_far, scale_mu: rgamma(mu), mu }
    }

    fn apply(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let m = u.len() - 1;
        let h2 = dt * dt;
        let mut delta = vec![0.0; m];
        for j in 1..m {
            delta[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
        }
        delta[0] = if m >= 3 { 2.0 * delta[1] - delta[2] } else { delta[1] };
        let scale = dt.powf(self.mu) * self.scale_mu;
        (1..m)
            .map(|k| {
                let mut acc = 0.0;
                for j in 0..k {
                    let (wa, wb) = self.near_far[k - j - 1];
                    acc += wa * delta[j] + wb * delta[j + 1];
                }
                acc * scale
            })
            .collect()
    }
}

/// Least-squares power law `values ≈ C t^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Slope of `log(values)` against `log(times)` over `window`. The first two
/// samples and samples below [`ROUND_OFF_FLOOR`] are skipped.
pub fn rate_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Domain("times and values differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .skip(2)
        .filter(|(t, v)| **t >= window.0 && **t <= window.1 && **t > 0.0 && v.is_finite() && **v >= ROUND_OFF_FLOOR)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Domain(format!("only {} usable points in window {window:?}, need 5", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all fit points share one time".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit { exponent: slope, intercept: my - slope * mx, r_squared: r2, window, points: pts.len() })
}

/// Observed order between consecutive refinement levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Order {
    /// Differences are at round-off: the method is exact for this problem.
    Exact,
    Observed(f64),
}

impl Order {
    /// Whether the order meets `min`; exact results always do.
    pub fn at_least(&self, min: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Observed(p) => *p >= min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// `max |x(dt_i) − x(dt_{i+1})|`
    pub differences: Vec<f64>,
    pub orders: Vec<Order>,
}

impl ConvergenceReport {
    /// The finest-level order.
    pub fn order(&self) -> Order {
        *self.orders.last().expect("at least one order")
    }
}

/// Runs `runner` at each step size and estimates the order from the final
/// states: `p = log2(d_i / d_{i+1})` with `d_i` the sup difference between
/// levels `i` and `i+1`.
pub fn self_convergence<F>(mut runner: F, dts: &[f64]) -> Result<ConvergenceReport>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if dts.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 step sizes, got {}", dts.len())));
    }
    for w in dts.windows(2) {
        if (w[1] * 2.0 - w[0]).abs() > 1e-12 * w[0] {
            return Err(Error::Domain(format!("step sizes must halve: {} -> {}", w[0], w[1])));
        }
    }
    let states: Vec<Vec<f64>> = dts.iter().map(|&dt| runner(dt)).collect::<Result<_>>()?;
    let scale = states.last().expect("non-empty").iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let differences: Vec<f64> = states
        .windows(2)
        .map(|w| {
            if w[0].len() != w[1].len() {
                return Err(Error::Inconsistency("runner returned states of different sizes".into()));
            }
            Ok(w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let floor = ROUND_OFF_FLOOR * scale;
    let orders = differences
        .windows(2)
        .map(|d| {
            if d[0] <= floor && d[1] <= floor {
                Order::Exact
            } else {
                Order::Observed((d[0] / d[1]).log2())
            }
        })
        .collect();
    Ok(ConvergenceReport { dts: dts.to_vec(), differences, orders })
}
