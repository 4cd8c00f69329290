//! Spectral mild solution of `D_t^α u + Au = f`, `u(0) = u0`, `∂_t u(0) = u1`.
//!
//! Mode by mode, with `K_β(s) = s^{β−1} E_{α,β}(−λ s^α)`:
//!
//! ```text
//! u(t)    = u0 E_{α,1}(−λt^α) + u1 t E_{α,2}(−λt^α)          + ∫₀ᵗ f(τ) K_α(t−τ) dτ
//! ∂_t u   = −u0 λ t^{α−1} E_{α,α}(−λt^α) + u1 E_{α,1}(−λt^α) + ∫₀ᵗ f(τ) K_{α−1}(t−τ) dτ
//! D_t^α u = −λ u + f
//! ```
//!
//! The convolutions use product integration: `f` is interpolated linearly
//! between grid nodes and integrated exactly against the kernel, whose first
//! two moments on each cell come from Mittag-Leffler antiderivatives.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mittag_leffler::{eval, kernel_antiderivatives, kernel_moment_with, MLPrecision};
use crate::spectral::{frac_norm_coeffs, Operator, SpectralField};

/// Uniform grid `t_i = i·dt`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::UnsupportedGrid(format!("need t_end > 0 and dt > 0, got {t_end} and {dt}")));
        }
        let steps = (t_end / dt).round();
        if (steps * dt - t_end).abs() > 1e-12 * t_end.max(1.0) || steps < 1.0 {
            return Err(Error::UnsupportedGrid(format!("dt = {dt} does not divide t_end = {t_end}")));
        }
        Ok(Self { dt, steps: steps as usize })
    }

    /// Accepts an explicit node list if it starts at 0 and is uniform.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::UnsupportedGrid("grid must start at 0 and have at least two nodes".into()));
        }
        let dt = times[1] - times[0];
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
                return Err(Error::UnsupportedGrid(format!("non-uniform step at node {}", i + 1)));
            }
        }
        if !(dt > 0.0) {
            return Err(Error::UnsupportedGrid("grid must be increasing".into()));
        }
        Ok(Self { dt, steps: times.len() - 1 })
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }
}

/// Named time profiles for separable forcing `f(x, t) = g(x) h(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFunction {
    Constant {
        value: f64,
    },
    /// `Σ_k coeffs[k] t^k`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `amplitude · sin(omega t + phase)`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · exp(−rate t)`
    ExponentialDecay {
        amplitude: f64,
        rate: f64,
    },
    /// Piecewise-linear interpolation of samples.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TimeFunction {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64], what: &str| -> Result<()> {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be finite")))
            }
        };
        match self {
            TimeFunction::Constant { value } => finite(&[*value], "constant value"),
            TimeFunction::Polynomial { coeffs } => finite(coeffs, "polynomial coefficients"),
            TimeFunction::Sinusoid { amplitude, omega, phase } => finite(&[*amplitude, *omega, *phase], "sinusoid parameters"),
            TimeFunction::ExponentialDecay { amplitude, rate } => finite(&[*amplitude, *rate], "decay parameters"),
            TimeFunction::Tabulated { times, values } => {
                finite(times, "sample times")?;
                finite(values, "sample values")?;
                check_samples(times, values.len())
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            TimeFunction::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            TimeFunction::ExponentialDecay { amplitude, rate } => amplitude * (-rate * t).exp(),
            TimeFunction::Tabulated { times, values } => {
                let (i, w) = locate(times, t)?;
                if w == 0.0 {
                    values[i]
                } else {
                    values[i] + w * (values[i + 1] - values[i])
                }
            }
        })
    }
}

fn check_samples(times: &[f64], n_values: usize) -> Result<()> {
    if times.len() < 2 || times.len() != n_values {
        return Err(Error::Config(format!(
            "tabulated series needs at least two samples and matching lengths, got {} times and {n_values} values",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// Interval index and interpolation weight of `t` in a sorted sample list.
fn locate(times: &[f64], t: f64) -> Result<(usize, f64)> {
    let (lo, hi) = (times[0], times[times.len() - 1]);
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if t < lo - slack || t > hi + slack {
        return Err(Error::Domain(format!("time {t} outside tabulated range [{lo}, {hi}]")));
    }
    let t = t.clamp(lo, hi);
    let i = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => return Ok((i, 0.0)),
        Err(i) => i - 1,
    };
    Ok((i, (t - times[i]) / (times[i + 1] - times[i])))
}

/// Right-hand side of the linear problem.
#[derive(Debug, Clone)]
pub enum ForcingSpec {
    Zero,
    Separable { g: SpectralField, h: TimeFunction },
    /// `values[i][k]` is the coefficient of mode `k` at `times[i]`.
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl ForcingSpec {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            ForcingSpec::Zero => Ok(()),
            ForcingSpec::Separable { g, h } => {
                if g.len() != n {
                    return Err(Error::Config(format!("forcing has {} modes, the data {n}", g.len())));
                }
                h.validate()
            }
            ForcingSpec::Tabulated { times, values } => {
                check_samples(times, values.len())?;
                if let Some(row) = values.iter().find(|r| r.len() != n) {
                    return Err(Error::Config(format!("forcing row has {} modes, the data {n}", row.len())));
                }
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config("tabulated forcing must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingSpec::Zero)
    }

    /// Forcing coefficients at each time, one row per time.
    pub fn sample(&self, times: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
        times
            .iter()
            .map(|&t| match self {
                ForcingSpec::Zero => Ok(vec![0.0; n]),
                ForcingSpec::Separable { g, h } => {
                    let ht = h.at(t)?;
                    Ok(g.coeffs().iter().map(|c| c * ht).collect())
                }
                ForcingSpec::Tabulated { times: ts, values } => {
                    let (i, w) = locate(ts, t)?;
                    Ok(if w == 0.0 {
                        values[i].clone()
                    } else {
                        values[i].iter().zip(&values[i + 1]).map(|(a, b)| a + w * (b - a)).collect()
                    })
                }
            })
            .collect()
    }
}

/// Data of the linear problem.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub op: Arc<Operator>,
    pub alpha: f64,
    pub u0: SpectralField,
    pub u1: SpectralField,
    pub forcing: ForcingSpec,
    pub precision: MLPrecision,
}

impl LinearProblem {
    pub fn new(alpha: f64, u0: SpectralField, u1: SpectralField, forcing: ForcingSpec) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        if u0.len() != u1.len() {
            return Err(Error::Config(format!("u0 has {} modes but u1 has {}", u0.len(), u1.len())));
        }
        if u0.op().config() != u1.op().config() {
            return Err(Error::Config("u0 and u1 are expanded against different operators".into()));
        }
        if let ForcingSpec::Separable { g, .. } = &forcing {
            if g.op().config() != u0.op().config() {
                return Err(Error::Config("forcing is expanded against a different operator".into()));
            }
        }
        forcing.validate(u0.len())?;
        let op = u0.op().clone();
        Ok(Self { op, alpha, u0, u1, forcing, precision: MLPrecision::default() })
    }

    pub fn with_precision(mut self, precision: MLPrecision) -> Result<Self> {
        precision.validate()?;
        self.precision = precision;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.u0.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.op.eigenvalues(self.n_modes())
    }

    pub fn gamma(&self) -> f64 {
        1.0 / self.alpha
    }
}

/// Homogeneous propagators of one mode at time `t`: `(u, ∂_t u, ∂_t² u)`;
/// the second derivative is `None` at `t = 0`, where it is singular for `α < 2`.
pub(crate) fn homogeneous_mode(
    alpha: f64,
    lambda: f64,
    u0: f64,
    u1: f64,
    t: f64,
    want_d2: bool,
    p: &MLPrecision,
) -> Result<(f64, f64, Option<f64>)> {
    if t == 0.0 {
        return Ok((u0, u1, None));
    }
    let z = -lambda * t.powf(alpha);
    let e1 = eval(alpha, 1.0, z, p)?;
    let e2 = if u1 != 0.0 { eval(alpha, 2.0, z, p)? } else { 0.0 };
    let ea = if u0 != 0.0 || (want_d2 && u1 != 0.0) { eval(alpha, alpha, z, p)? } else { 0.0 };
    let u = u0 * e1 + u1 * t * e2;
    let dtu = -u0 * lambda * t.powf(alpha - 1.0) * ea + u1 * e1;
    let d2u = if want_d2 {
        let eam1 = if u0 != 0.0 { eval(alpha, alpha - 1.0, z, p)? } else { 0.0 };
        Some(-u0 * lambda * t.powf(alpha - 2.0) * eam1 - u1 * lambda * t.powf(alpha - 1.0) * ea)
    } else {
        None
    };
    Ok((u, dtu, d2u))
}

/// `(u_n(t), ∂_t u_n(t))` of the homogeneous problem for every mode.
pub fn homogeneous_state(p: &LinearProblem, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let lambdas = p.lambdas();
    let pairs: Vec<(f64, f64)> = (0..p.n_modes())
        .into_par_iter()
        .map(|k| {
            let (u, v, _) =
                homogeneous_mode(p.alpha, lambdas[k], p.u0.coeffs()[k], p.u1.coeffs()[k], t, false, &p.precision)?;
            Ok((u, v))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Product-integration weights of one mode on cells `[ch, (c+1)h]`.
///
/// For the kernel `K`, `f` linear on the cell with value `f_far` at `s = (c+1)h`
/// and `f_near` at `s = ch` integrates to `a[c]·f_far + b[c]·f_near`.
#[derive(Debug, Clone)]
pub(crate) struct ModeKernel {
    pub alpha: f64,
    pub lambda: f64,
    pub h: f64,
    /// weights for `K_α` (the `u` kernel)
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// weights for `K_{α−1}` (the `∂_t u` kernel)
    pub ad: Vec<f64>,
    pub bd: Vec<f64>,
    /// `K_{α−1}(ch)` for `c ≥ 1` (index 0 unused), only when second derivatives are wanted
    pub kd: Vec<f64>,
    // antiderivatives at the last node, carried for extension
    last: Option<[f64; 4]>,
    with_kd: bool,
}

impl ModeKernel {
    pub fn new(alpha: f64, lambda: f64, h: f64, with_kd: bool) -> Self {
        Self {
            alpha,
            lambda,
            h,
            a: Vec::new(),
            b: Vec::new(),
            ad: Vec::new(),
            bd: Vec::new(),
            kd: vec![0.0],
            last: None,
            with_kd,
        }
    }

    /// `(I0, I1)` of `K_α` and `(I0, I1)` of `K_{α−1}` at `b`.
    fn antiderivatives(&self, b: f64, p: &MLPrecision) -> Result<[f64; 4]> {
        let (u0, u1) = kernel_antiderivatives(self.alpha, self.alpha, self.lambda, b, p)?;
        let (d0, d1) = kernel_antiderivatives(self.alpha, self.alpha - 1.0, self.lambda, b, p)?;
        Ok([u0, u1, d0, d1])
    }

    /// Extends the tables to at least `cells` cells.
    pub fn ensure(&mut self, cells: usize, p: &MLPrecision) -> Result<()> {
        let (alpha, lambda, h) = (self.alpha, self.lambda, self.h);
        while self.a.len() < cells {
            let c = self.a.len();
            let lo = match self.last {
                Some(v) => v,
                None => [0.0; 4],
            };
            let b = (c + 1) as f64 * h;
            let mut hi = self.antiderivatives(b, p)?;
            if c == 0 {
                hi[0] = kernel_moment_with(alpha, lambda, h, 0, p)?;
                hi[1] = kernel_moment_with(alpha, lambda, h, 1, p)?;
            }
            let start = c as f64 * h;
            let cell = hi[0] - lo[0];
            let a = (hi[1] - lo[1] - start * cell) / h;
            self.a.push(a);
            self.b.push(cell - a);
            let cell_d = hi[2] - lo[2];
            let ad = (hi[3] - lo[3] - start * cell_d) / h;
            self.ad.push(ad);
            self.bd.push(cell_d - ad);
            if self.with_kd {
                let z = -lambda * b.powf(alpha);
                self.kd.push(b.powf(alpha - 2.0) * eval(alpha, alpha - 1.0, z, p)?);
            }
            self.last = Some(hi);
        }
        Ok(())
    }

    /// Contribution of cells `τ ∈ [t_j, t_{j+1}]`, `j ∈ js`, to node `i`:
    /// `(∫ f K_α, ∫ f K_{α−1})`, with `f` given at nodes.
    pub fn convolve(&self, f: &[f64], i: usize, js: std::ops::Range<usize>) -> (f64, f64) {
        let (mut su, mut sd) = (0.0, 0.0);
        for j in js {
            let c = i - j - 1;
            su += self.a[c] * f[j] + self.b[c] * f[j + 1];
            sd += self.ad[c] * f[j] + self.bd[c] * f[j + 1];
        }
        (su, sd)
    }

    /// Forcing part of `∂_t² u` at node `i ≥ 1`.
    pub fn convolve_d2(&self, f: &[f64], i: usize) -> f64 {
        let mut s = f[0] * self.kd[i];
        for j in 0..i {
            let c = i - j - 1;
            s += (f[j + 1] - f[j]) / self.h * (self.ad[c] + self.bd[c]);
        }
        s
    }
}

/// Per-mode forcing convolutions `S3` (into `u`) and `S3′` (into `∂_t u`) at
/// every grid node, one row per time.
pub fn convolve_forcing(p: &LinearProblem, grid: &TimeGrid) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let times = grid.times();
    let n = p.n_modes();
    let forcing = p.forcing.sample(&times, n)?;
    let cols = forcing_columns(p, grid, &forcing, false)?;
    let s3 = rows_from_columns(cols.iter().map(|c| &c.0).collect(), times.len());
    let s3p = rows_from_columns(cols.iter().map(|c| &c.1).collect(), times.len());
    Ok((s3, s3p))
}

type ModeColumns = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn forcing_columns(p: &LinearProblem, grid: &TimeGrid, forcing: &[Vec<f64>], want_d2: bool) -> Result<Vec<ModeColumns>> {
    let m = grid.steps;
    let lambdas = p.lambdas();
    (0..p.n_modes())
        .into_par_iter()
        .map(|k| {
            let f: Vec<f64> = forcing.iter().map(|row| row[k]).collect();
            if f.iter().all(|v| *v == 0.0) {
                let d2 = want_d2.then(|| vec![0.0; m + 1]);
                return Ok((vec![0.0; m + 1], vec![0.0; m + 1], d2));
            }
            let mut kern = ModeKernel::new(p.alpha, lambdas[k], grid.dt, want_d2);
            kern.ensure(m, &p.precision)?;
            let mut su = vec![0.0; m + 1];
            let mut sd = vec![0.0; m + 1];
            let mut s2 = want_d2.then(|| vec![0.0; m + 1]);
            for i in 1..=m {
                let (a, b) = kern.convolve(&f, i, 0..i);
                su[i] = a;
                sd[i] = b;
                if let Some(s2) = s2.as_mut() {
                    s2[i] = kern.convolve_d2(&f, i);
                }
            }
            Ok((su, sd, s2))
        })
        .collect()
}

fn rows_from_columns(cols: Vec<&Vec<f64>>, len: usize) -> Vec<Vec<f64>> {
    (0..len).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// Norms recorded at each time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    /// `‖u‖_{V_γ}`
    pub u_vgamma: f64,
    /// `‖∂_t u‖_{L²}`
    pub dtu_l2: f64,
    /// `‖D_t^α u‖_{V_{−γ}}`
    pub dalpha_vminusgamma: f64,
}

/// Solution on a time grid, one coefficient row per time.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub dtu: Vec<Vec<f64>>,
    pub dalpha: Vec<Vec<f64>>,
    /// Rows for `times[1..]`; `∂_t² u` is singular at `t = 0`.
    pub d2u: Option<Vec<Vec<f64>>>,
    pub forcing: Vec<Vec<f64>>,
    pub norms: Vec<NormRecord>,
    pub warnings: Vec<String>,
}

impl SolutionTrace {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time series of coefficient `k` of `u`.
    pub fn u_mode(&self, k: usize) -> Vec<f64> {
        self.u.iter().map(|r| r[k]).collect()
    }

    pub fn forcing_mode(&self, k: usize) -> Vec<f64> {
        self.forcing.iter().map(|r| r[k]).collect()
    }

    pub(crate) fn assemble(
        op: &Operator,
        alpha: f64,
        times: Vec<f64>,
        u: Vec<Vec<f64>>,
        dtu: Vec<Vec<f64>>,
        forcing: Vec<Vec<f64>>,
        d2u: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = u.first().map_or(0, |r| r.len());
        let lambdas = op.eigenvalues(n);
        for (i, (ru, rv)) in u.iter().zip(&dtu).enumerate() {
            if ru.iter().chain(rv).any(|v| !v.is_finite()) {
                return Err(Error::Numeric { index: i, message: format!("non-finite coefficient at t = {}", times[i]) });
            }
        }
        let dalpha: Vec<Vec<f64>> = u
            .iter()
            .zip(&forcing)
            .map(|(ru, rf)| ru.iter().zip(rf).zip(&lambdas).map(|((u, f), l)| -l * u + f).collect())
            .collect();
        let gamma = 1.0 / alpha;
        let norms = times
            .iter()
            .enumerate()
            .map(|(i, &t)| NormRecord {
                t,
                u_vgamma: frac_norm_coeffs(op, &u[i], gamma),
                dtu_l2: frac_norm_coeffs(op, &dtu[i], 0.0),
                dalpha_vminusgamma: frac_norm_coeffs(op, &dalpha[i], -gamma),
            })
            .collect();
        Ok(Self { alpha, lambdas, times, u, dtu, dalpha, d2u, forcing, norms, warnings: Vec::new() })
    }
}

/// Solves the linear problem on the grid.
pub fn solve_linear(p: &LinearProblem, grid: &TimeGrid, want_d2: bool) -> Result<SolutionTrace> {
    let times = grid.times();
    let n = p.n_modes();
    let lambdas = p.lambdas();
    let forcing = p.forcing.sample(&times, n)?;
    let conv = forcing_columns(p, grid, &forcing, want_d2)?;

    let columns: Vec<ModeColumns> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (u0, u1) = (p.u0.coeffs()[k], p.u1.coeffs()[k]);
            let mut cu = Vec::with_capacity(times.len());
            let mut cv = Vec::with_capacity(times.len());
            let mut c2 = want_d2.then(|| Vec::with_capacity(times.len()));
            for (i, &t) in times.iter().enumerate() {
                let (u, v, d2) = homogeneous_mode(p.alpha, lambdas[k], u0, u1, t, want_d2, &p.precision)?;
                cu.push(u + conv[k].0[i]);
                cv.push(v + conv[k].1[i]);
                if let (Some(c2), Some(d2)) = (c2.as_mut(), d2) {
                    c2.push(d2 + conv[k].2.as_ref().map_or(0.0, |s| s[i]));
                }
            }
            Ok((cu, cv, c2))
        })
        .collect::<Result<_>>()?;

    let len = times.len();
    let u = rows_from_columns(columns.iter().map(|c| &c.0).collect(), len);
    let dtu = rows_from_columns(columns.iter().map(|c| &c.1).collect(), len);
    let d2u = want_d2.then(|| rows_from_columns(columns.iter().map(|c| c.2.as_ref().expect("requested")).collect(), len - 1));
    let mut trace = SolutionTrace::assemble(&p.op, p.alpha, times, u, dtu, forcing, d2u)?;
    if want_d2 {
        if let Some(w) = regularity_warning(p) {
            trace.warnings.push(w);
        }
    }
    Ok(trace)
}

/// Heuristic check that `u0 ∈ V_σ` for some `σ > 1/α`: warns when the upper
/// half of the modes carries more than 10% of `‖u0‖_{V_σ}` at `σ = 1/α`.
fn regularity_warning(p: &LinearProblem) -> Option<String> {
    let c = p.u0.coeffs();
    let n = c.len();
    if n < 4 {
        return None;
    }
    let sigma = 1.0 / p.alpha;
    let total = frac_norm_coeffs(&p.op, c, sigma);
    if total == 0.0 {
        return None;
    }
    let mut tail = c.to_vec();
    tail[..n / 2].iter_mut().for_each(|v| *v = 0.0);
    let ratio = frac_norm_coeffs(&p.op, &tail, sigma) / total;
    (ratio > 0.1).then(|| {
        format!(
            "second time derivative requested but u0 does not look like an element of V_sigma for sigma > 1/alpha \
             (upper half of the modes carries {:.0}% of its V_{{1/alpha}} norm)",
            100.0 * ratio
        )
    })
}

/// Quantities behind the strong-solution estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongNormRecord {
    pub times: Vec<f64>,
    /// `‖D_t^α u(t)‖_{L²} + ‖Au(t)‖_{L²}`
    pub dalpha_plus_au: Vec<f64>,
    /// `∫₀ᵀ ‖∂_t² u‖_{L²} dt`, `None` when the trace carries no second derivative.
    pub d2u_l1: Option<f64>,
}

pub fn strong_norm_probe(trace: &SolutionTrace, p: &LinearProblem) -> Result<StrongNormRecord> {
    if trace.n_modes() != p.n_modes() || trace.len() < 2 {
        return Err(Error::Precondition("trace does not match the problem or is too short".into()));
    }
    let dalpha_plus_au = trace
        .u
        .iter()
        .zip(&trace.dalpha)
        .map(|(u, d)| {
            let au: Vec<f64> = u.iter().zip(&trace.lambdas).map(|(c, l)| c * l).collect();
            frac_norm_coeffs(&p.op, d, 0.0) + frac_norm_coeffs(&p.op, &au, 0.0)
        })
        .collect();
    let d2u_l1 = trace.d2u.as_ref().map(|rows| {
        let vals: Vec<f64> = rows.iter().map(|r| frac_norm_coeffs(&p.op, r, 0.0)).collect();
        let t = &trace.times;
        // first cell: the norm behaves like C t^{α−2}, whose integral over (0, t1) is t1·v1/(α−1)
        let mut acc = t[1] * vals[0] / (p.alpha - 1.0);
        for i in 1..vals.len() {
            acc += 0.5 * (t[i + 1] - t[i]) * (vals[i - 1] + vals[i]);
        }
        acc
    });
    Ok(StrongNormRecord { times: trace.times.clone(), dalpha_plus_au, d2u_l1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_operator, OperatorSpecConfig};
    use approx::assert_relative_eq;

    fn setup(alpha: f64, u0: &[(usize, f64)], u1: &[(usize, f64)], n: usize) -> LinearProblem {
        let op = Arc::new(make_operator(&OperatorSpecConfig::DirichletLaplacianInterval { length: std::f64::consts::PI }).unwrap());
        let u0 = SpectralField::from_modes(op.clone(), n, u0).unwrap();
        let u1 = SpectralField::from_modes(op, n, u1).unwrap();
        LinearProblem::new(alpha, u0, u1, ForcingSpec::Zero).unwrap()
    }

    #[test]
    fn grid_construction() {
        assert_eq!(TimeGrid::new(1.0, 0.1).unwrap().steps, 10);
        assert!(matches!(TimeGrid::new(1.0, 0.3), Err(Error::UnsupportedGrid(_))));
        assert!(matches!(TimeGrid::from_times(&[0.0, 0.1, 0.3]), Err(Error::UnsupportedGrid(_))));
        assert_eq!(TimeGrid::from_times(&[0.0, 0.5, 1.0]).unwrap().dt, 0.5);
    }

    #[test]
    fn time_functions() {
        assert_eq!(TimeFunction::Polynomial { coeffs: vec![1.0, 2.0, 3.0] }.at(2.0).unwrap(), 17.0);
        let tab = TimeFunction::Tabulated { times: vec![0.0, 1.0], values: vec![0.0, 2.0] };
        assert_eq!(tab.at(0.25).unwrap(), 0.5);
        assert!(tab.at(1.5).is_err());
    }

    #[test]
    fn initial_values_are_exact() {
        let p = setup(1.5, &[(0, 0.3), (2, -1.0)], &[(1, 2.0)], 4);
        let (u, v) = homogeneous_state(&p, 0.0).unwrap();
        assert_eq!(u, p.u0.coeffs());
        assert_eq!(v, p.u1.coeffs());
    }

    #[test]
    fn classical_wave_limit() {
        let p = setup(2.0, &[(0, 1.0)], &[], 1);
        for &t in &[0.5, 3.0, 9.0] {
            let (u, v) = homogeneous_state(&p, t).unwrap();
            assert!((u[0] - t.cos()).abs() < 1e-12);
            assert!((v[0] + t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn free_kernel_weights_integrate_linear_functions() {
        // λ = 0: ∫₀ᵗ τ (t−τ)^{α−1}/Γ(α) dτ = t^{α+1}/Γ(α+2)
        let alpha = 1.4;
        let mut k = ModeKernel::new(alpha, 0.0, 0.1, false);
        k.ensure(10, &MLPrecision::default()).unwrap();
        let f: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let (su, sd) = k.convolve(&f, 10, 0..10);
        assert_relative_eq!(su, 1.0 / crate::special::gamma(alpha + 2.0), max_relative = 1e-12);
        assert_relative_eq!(sd, 1.0 / crate::special::gamma(alpha + 1.0), max_relative = 1e-12);
    }
}
