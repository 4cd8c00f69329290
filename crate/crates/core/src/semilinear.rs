//! Semilinear problem `D_t^α u + Au = f(u)` by Picard iteration on time windows.
//!
//! On a window `(t_a, t_b]` the iteration maps a guess `F` of the forcing
//! coefficients to `u = S1 u0 + S2 u1 + S3[F]` and back to `F = f(u)`. The
//! memory integral over `[0, t_a]` does not depend on the guess and is
//! computed once per window. Failed windows are halved, accepted ones grow.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{classify, Regime};
use crate::error::{Error, Result};
use crate::linear::{homogeneous_mode, ModeKernel, SolutionTrace, TimeGrid};
use crate::mittag_leffler::{ml_bound_probe, MLPrecision};
use crate::spectral::{frac_norm_coeffs, Collocation, Operator, SpectralField};

/// Pointwise nonlinearity `f(u)`; every entry has `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    /// `f(u) = κu`
    LinearShift { kappa: f64 },
    /// `f(u) = c|u|^{r−1}u`
    Power { r: f64, c: f64 },
    /// `f(u) = c sin u`
    Sine { c: f64 },
    /// Piecewise linear through `(s_i, values_i)`, extended linearly past the ends.
    Tabulated { s: Vec<f64>, values: Vec<f64> },
}

/// Which growth hypothesis a nonlinearity satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum HypothesisClass {
    /// `|f′(s)| ≤ C|s|^{r−1}`
    Hf1 { r: f64, c: f64 },
    /// Only `f ∈ C¹`, with envelopes from [`NonlinearitySpec::envelopes`].
    Hf2,
}

const ENVELOPE_EPS: f64 = 1e-12;

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            NonlinearitySpec::Zero => Ok(()),
            NonlinearitySpec::LinearShift { kappa } => finite("kappa", *kappa),
            NonlinearitySpec::Sine { c } => finite("c", *c),
            NonlinearitySpec::Power { r, c } => {
                finite("c", *c)?;
                if !(*r > 1.0 && r.is_finite()) {
                    return Err(Error::Config(format!("power exponent r must be finite and > 1, got {r}")));
                }
                Ok(())
            }
            NonlinearitySpec::Tabulated { s, values } => {
                if s.len() < 2 || s.len() != values.len() {
                    return Err(Error::Config("tabulated nonlinearity needs matching s and values, at least 2".into()));
                }
                if s.iter().chain(values).any(|v| !v.is_finite()) || s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("tabulated nodes must be finite and strictly increasing".into()));
                }
                match s.iter().position(|v| *v == 0.0) {
                    Some(i) if values[i] == 0.0 => Ok(()),
                    _ => Err(Error::Config("tabulated nonlinearity must contain the node s = 0 with f(0) = 0".into())),
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NonlinearitySpec::Zero)
    }

    /// For a power, `C = |c|·r` since `f′(s) = c·r|s|^{r−1}`. The zero map
    /// satisfies every bound and is reported with `C = 0`.
    pub fn hypothesis(&self) -> HypothesisClass {
        match self {
            NonlinearitySpec::Zero => HypothesisClass::Hf1 { r: 2.0, c: 0.0 },
            NonlinearitySpec::Power { r, c } => HypothesisClass::Hf1 { r: *r, c: c.abs() * r },
            _ => HypothesisClass::Hf2,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            NonlinearitySpec::Zero => 0.0,
            NonlinearitySpec::LinearShift { kappa } => kappa * u,
            NonlinearitySpec::Power { r, c } => c * u.abs().powf(r - 1.0) * u,
            NonlinearitySpec::Sine { c } => c * u.sin(),
            NonlinearitySpec::Tabulated { s, values } => {
                let n = s.len();
                let i = match s.binary_search_by(|x| x.total_cmp(&u)) {
                    Ok(i) => return values[i],
                    Err(0) => 0,
                    Err(i) if i >= n => n - 2,
                    Err(i) => i - 1,
                };
                values[i] + (u - s[i]) * (values[i + 1] - values[i]) / (s[i + 1] - s[i])
            }
        }
    }

    /// `(Q1(ξ), Q2(ξ))`: suprema of `|f′|` and `|f|` over `|s| ≤ ξ`, plus `εξ`.
    pub fn envelopes(&self, xi: f64) -> (f64, f64) {
        let xi = xi.abs();
        let (q1, q2) = match self {
            NonlinearitySpec::Zero => (0.0, 0.0),
            NonlinearitySpec::LinearShift { kappa } => (kappa.abs(), kappa.abs() * xi),
            NonlinearitySpec::Power { r, c } => (c.abs() * r * xi.powf(r - 1.0), c.abs() * xi.powf(*r)),
            NonlinearitySpec::Sine { c } => (c.abs(), c.abs() * xi.min(std::f64::consts::FRAC_PI_2).sin()),
            NonlinearitySpec::Tabulated { s, values } => {
                let mut q2 = self.eval(xi).abs().max(self.eval(-xi).abs());
                let mut q1 = 0.0f64;
                for i in 0..s.len() - 1 {
                    if s[i] <= xi && s[i] >= -xi {
                        q2 = q2.max(values[i].abs());
                    }
                    if s[i] < xi && s[i + 1] > -xi {
                        q1 = q1.max(((values[i + 1] - values[i]) / (s[i + 1] - s[i])).abs());
                    }
                }
                // linear extension past the ends
                if xi > s[s.len() - 1] || -xi < s[0] {
                    let n = s.len();
                    let end = ((values[n - 1] - values[n - 2]) / (s[n - 1] - s[n - 2])).abs();
                    let start = ((values[1] - values[0]) / (s[1] - s[0])).abs();
                    q1 = q1.max(if xi > s[n - 1] { end } else { 0.0 }).max(if -xi < s[0] { start } else { 0.0 });
                }
                (q1, q2)
            }
        };
        (q1 + ENVELOPE_EPS * xi, q2 + ENVELOPE_EPS * xi)
    }
}

/// Evaluates `f` on the coefficient vectors of one operator.
#[derive(Debug, Clone)]
struct NonlinearMap {
    spec: NonlinearitySpec,
    col: Option<Collocation>,
}

impl NonlinearMap {
    fn new(spec: &NonlinearitySpec, op: &Arc<Operator>, n: usize, quad_points: usize) -> Result<Self> {
        spec.validate()?;
        let col = match spec {
            NonlinearitySpec::Zero | NonlinearitySpec::LinearShift { .. } => None,
            _ => Some(Collocation::new(op.clone(), n, quad_points)?),
        };
        Ok(Self { spec: spec.clone(), col })
    }

    fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let out = match (&self.spec, &self.col) {
            (NonlinearitySpec::Zero, _) => vec![0.0; coeffs.len()],
            // linear maps commute with the projection
            (NonlinearitySpec::LinearShift { kappa }, _) => coeffs.iter().map(|c| kappa * c).collect(),
            (spec, Some(col)) => {
                let mut vals = col.synthesize(coeffs);
                for v in vals.iter_mut() {
                    *v = spec.eval(*v);
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Overflow("nonlinearity produced a non-finite value".into()));
                }
                col.analyze(&vals)
            }
            (_, None) => unreachable!("collocation exists for pointwise nonlinearities"),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow("nonlinearity coefficients are not finite".into()));
        }
        Ok(out)
    }
}

/// Coefficients of `f(u)` by collocation on `quad_points` nodes per axis.
pub fn apply_nonlinearity(f: &NonlinearitySpec, u: &SpectralField, quad_points: usize) -> Result<SpectralField> {
    let map = NonlinearMap::new(f, u.op(), u.len(), quad_points)?;
    SpectralField::new(u.op().clone(), map.apply(u.coeffs())?)
}

/// Fixed-point and window-control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Trust radius for `‖u‖_{V_γ} + ‖∂_t u‖_{L²}`; the effective radius of a
    /// window is at least twice the norm at its start and twice that of its
    /// first iterate.
    pub r_star: f64,
    /// Relative to `max(1, window norm)`.
    pub tol: f64,
    pub max_iter: usize,
    pub window_init: f64,
    pub window_min: f64,
    pub blowup_threshold: f64,
    /// Nodes per axis; `None` takes four times the largest mode index.
    pub nonlinearity_quadrature: Option<usize>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            r_star: 10.0,
            tol: 1e-10,
            max_iter: 50,
            window_init: 0.25,
            window_min: 1e-6,
            blowup_threshold: 1e8,
            nonlinearity_quadrature: None,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("r_star", self.r_star),
            ("tol", self.tol),
            ("window_init", self.window_init),
            ("window_min", self.window_min),
            ("blowup_threshold", self.blowup_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.max_iter == 0 {
            bad.push("max_iter must be positive".into());
        }
        if self.nonlinearity_quadrature == Some(0) {
            bad.push("nonlinearity_quadrature must be positive".into());
        }
        if !(self.window_min < self.window_init) {
            bad.push(format!("window_min ({}) must be below window_init ({})", self.window_min, self.window_init));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

/// Data of the semilinear problem.
#[derive(Debug, Clone)]
pub struct SemilinearProblem {
    pub op: Arc<Operator>,
    pub alpha: f64,
    pub u0: SpectralField,
    pub u1: SpectralField,
    pub nonlinearity: NonlinearitySpec,
    pub precision: MLPrecision,
}

impl SemilinearProblem {
    pub fn new(alpha: f64, u0: SpectralField, u1: SpectralField, nonlinearity: NonlinearitySpec) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        if u0.len() != u1.len() || u0.op().config() != u1.op().config() {
            return Err(Error::Config("u0 and u1 must share operator and mode count".into()));
        }
        nonlinearity.validate()?;
        Ok(Self { op: u0.op().clone(), alpha, u0, u1, nonlinearity, precision: MLPrecision::default() })
    }

    pub fn n_modes(&self) -> usize {
        self.u0.len()
    }

    fn quad_points(&self, cfg: &PicardConfig) -> usize {
        cfg.nonlinearity_quadrature.unwrap_or_else(|| 4 * self.op.max_axis_index(self.n_modes()).max(1))
    }

    /// Regime of the problem, after checking that the nonlinearity satisfies the
    /// hypothesis it requires. `None` in the classical limit `α = 2`.
    pub fn admission(&self) -> Result<Option<Regime>> {
        if self.alpha == 2.0 {
            return Ok(None);
        }
        let regime = classify(&self.op, self.alpha)?;
        if regime.subcritical {
            return Ok(Some(regime));
        }
        match self.nonlinearity.hypothesis() {
            HypothesisClass::Hf1 { c, .. } if c == 0.0 => Ok(Some(regime)),
            HypothesisClass::Hf1 { r, .. } => {
                if regime.growth.admits(r) {
                    Ok(Some(regime))
                } else {
                    Err(Error::Config(format!(
                        "growth exponent r = {r} exceeds r* = {} for alpha = {} and q_A = {}",
                        regime.growth.r_star().map_or("inf".into(), |v| format!("{v}")),
                        self.alpha,
                        regime.q_a
                    )))
                }
            }
            HypothesisClass::Hf2 => Err(Error::Config(format!(
                "alpha = {} is not below the critical order; the nonlinearity must satisfy a polynomial growth \
                 bound with r <= r* = {}",
                self.alpha,
                regime.growth.r_star().map_or("any finite value".into(), |v| format!("{v}"))
            ))),
        }
    }
}

/// One accepted window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
    /// Last ratio of successive iterate differences; 0 when the iteration
    /// reproduced its input exactly.
    pub contraction: f64,
}

/// Why a window was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowFailure {
    NoContraction { iterations: usize, last_ratio: f64 },
    TrustRadius { norm: f64, radius: f64 },
    Overflow(String),
}

/// Marches the fixed-point solution window by window on a uniform grid.
pub struct Marcher<'a> {
    p: &'a SemilinearProblem,
    cfg: PicardConfig,
    dt: f64,
    lambdas: Vec<f64>,
    gamma: f64,
    map: NonlinearMap,
    kernels: Vec<ModeKernel>,
    /// columns per mode
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    norms: Vec<f64>,
    windows: Vec<WindowRecord>,
}

impl<'a> Marcher<'a> {
    pub fn new(p: &'a SemilinearProblem, dt: f64, cfg: PicardConfig) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        let n = p.n_modes();
        let map = NonlinearMap::new(&p.nonlinearity, &p.op, n, p.quad_points(&cfg))?;
        let lambdas = p.op.eigenvalues(n);
        let f0 = map.apply(p.u0.coeffs())?;
        let gamma = 1.0 / p.alpha;
        let norm0 = state_norm(&p.op, p.u0.coeffs(), p.u1.coeffs(), gamma);
        Ok(Self {
            p,
            cfg,
            dt,
            kernels: lambdas.iter().map(|&l| ModeKernel::new(p.alpha, l, dt, false)).collect(),
            lambdas,
            gamma,
            map,
            u: p.u0.coeffs().iter().map(|c| vec![*c]).collect(),
            v: p.u1.coeffs().iter().map(|c| vec![*c]).collect(),
            f: f0.into_iter().map(|c| vec![c]).collect(),
            norms: vec![norm0],
            windows: Vec::new(),
        })
    }

    /// Index of the last solved node.
    pub fn last_index(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn last_time(&self) -> f64 {
        self.last_index() as f64 * self.dt
    }

    /// `‖u‖_{V_γ} + ‖∂_t u‖_{L²}` at every solved node.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn windows(&self) -> &[WindowRecord] {
        &self.windows
    }

    /// Solves the window up to node `b`. On failure the state is unchanged;
    /// hard errors (bad input, Mittag-Leffler failures) are the outer `Err`.
    pub fn advance(&mut self, b: usize) -> Result<std::result::Result<WindowRecord, WindowFailure>> {
        let a = self.last_index();
        if b <= a {
            return Err(Error::Precondition(format!("window end {b} must lie beyond the last node {a}")));
        }
        let n = self.p.n_modes();
        let w = b - a;
        let (alpha, dt, prec) = (self.p.alpha, self.dt, self.p.precision);
        let u0 = self.p.u0.coeffs();
        let u1 = self.p.u1.coeffs();

        // homogeneous part and memory term, per mode
        let needs_kernels = !self.p.nonlinearity.is_zero();
        let lambdas = &self.lambdas;
        let fcols = &self.f;
        let base: Vec<(Vec<f64>, Vec<f64>)> = self
            .kernels
            .par_iter_mut()
            .enumerate()
            .map(|(k, kern)| {
                if needs_kernels {
                    kern.ensure(b, &prec)?;
                }
                let hist_zero = fcols[k][..a].iter().all(|v| *v == 0.0);
                let mut hu = Vec::with_capacity(w);
                let mut hv = Vec::with_capacity(w);
                for i in a + 1..=b {
                    let t = i as f64 * dt;
                    let (mut x, mut y, _) = homogeneous_mode(alpha, lambdas[k], u0[k], u1[k], t, false, &prec)?;
                    if !hist_zero {
                        let (su, sv) = kern.convolve(&fcols[k], i, 0..a);
                        x += su;
                        y += sv;
                    }
                    hu.push(x);
                    hv.push(y);
                }
                Ok((hu, hv))
            })
            .collect::<Result<_>>()?;

        // widened after the first iterate, which uses f frozen at t_a: a breach
        // then signals diverging iterates rather than a fast initial layer
        let mut radius = self.cfg.r_star.max(2.0 * self.norms[a]);
        // guess: f frozen at its value at t_a; rows are window nodes
        let f_a: Vec<f64> = (0..n).map(|k| self.f[k][a]).collect();
        let mut guess: Vec<Vec<f64>> = vec![f_a.clone(); w];
        let mut prev: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
        let (mut d_prev, mut ratio, mut growing) = (f64::NAN, f64::NAN, 0usize);

        for iter in 1..=self.cfg.max_iter {
            let kernels = &self.kernels;
            let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut loc = Vec::with_capacity(w + 1);
                    loc.push(f_a[k]);
                    loc.extend(guess.iter().map(|r| r[k]));
                    let (mut cu, mut cv) = base[k].clone();
                    if loc.iter().any(|v| *v != 0.0) {
                        for l in 1..=w {
                            let (su, sv) = kernels[k].convolve(&loc, l, 0..l);
                            cu[l - 1] += su;
                            cv[l - 1] += sv;
                        }
                    }
                    (cu, cv)
                })
                .collect();
            let rows_u: Vec<Vec<f64>> = (0..w).map(|l| cols.iter().map(|c| c.0[l]).collect()).collect();
            let rows_v: Vec<Vec<f64>> = (0..w).map(|l| cols.iter().map(|c| c.1[l]).collect()).collect();
            if rows_u.iter().chain(&rows_v).flatten().any(|x| !x.is_finite()) {
                return Ok(Err(WindowFailure::Overflow("non-finite iterate".into())));
            }
            let norms: Vec<f64> =
                rows_u.iter().zip(&rows_v).map(|(ru, rv)| state_norm(&self.p.op, ru, rv, self.gamma)).collect();
            let peak = norms.iter().fold(0.0f64, |m, x| m.max(*x));
            if iter == 1 {
                radius = radius.max(2.0 * peak);
            }
            if peak > radius {
                return Ok(Err(WindowFailure::TrustRadius { norm: peak, radius }));
            }

            let new_f: Vec<Vec<f64>> = match rows_u.par_iter().map(|r| self.map.apply(r)).collect::<Result<_>>() {
                Ok(f) => f,
                Err(e @ Error::Overflow(_)) => return Ok(Err(WindowFailure::Overflow(e.to_string()))),
                Err(e) => return Err(e),
            };

            let mut converged = new_f == guess;
            if converged {
                ratio = 0.0;
            } else if let Some((pu, pv)) = &prev {
                let d = (0..w)
                    .map(|l| {
                        let du: Vec<f64> = rows_u[l].iter().zip(&pu[l]).map(|(x, y)| x - y).collect();
                        let dv: Vec<f64> = rows_v[l].iter().zip(&pv[l]).map(|(x, y)| x - y).collect();
                        state_norm(&self.p.op, &du, &dv, self.gamma)
                    })
                    .fold(0.0f64, f64::max);
                if d_prev.is_finite() {
                    ratio = if d_prev > 0.0 { d / d_prev } else { 0.0 };
                    growing = if ratio >= 1.0 { growing + 1 } else { 0 };
                }
                d_prev = d;
                converged = d <= self.cfg.tol * peak.max(1.0);
                if converged && ratio.is_nan() {
                    ratio = 0.0;
                }
            }

            if converged {
                for k in 0..n {
                    for l in 0..w {
                        self.u[k].push(rows_u[l][k]);
                        self.v[k].push(rows_v[l][k]);
                        self.f[k].push(new_f[l][k]);
                    }
                }
                self.norms.extend(norms);
                let rec = WindowRecord { start: a as f64 * dt, end: b as f64 * dt, iterations: iter, contraction: ratio };
                self.windows.push(rec);
                return Ok(Ok(rec));
            }
            if growing >= 3 {
                return Ok(Err(WindowFailure::NoContraction { iterations: iter, last_ratio: ratio }));
            }
            prev = Some((rows_u, rows_v));
            guess = new_f;
        }
        Ok(Err(WindowFailure::NoContraction { iterations: self.cfg.max_iter, last_ratio: ratio }))
    }

    /// Drops every node after `i` (and windows starting at or after it).
    fn truncate(&mut self, i: usize) {
        for col in self.u.iter_mut().chain(self.v.iter_mut()).chain(self.f.iter_mut()) {
            col.truncate(i + 1);
        }
        self.norms.truncate(i + 1);
        let t = i as f64 * self.dt;
        self.windows.retain(|w| w.start < t);
        if let Some(last) = self.windows.last_mut() {
            last.end = last.end.min(t);
        }
    }

    pub fn into_trace(self) -> Result<SolutionTrace> {
        let len = self.norms.len();
        let rows = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> { (0..len).map(|i| cols.iter().map(|c| c[i]).collect()).collect() };
        let times = (0..len).map(|i| i as f64 * self.dt).collect();
        SolutionTrace::assemble(&self.p.op, self.p.alpha, times, rows(&self.u), rows(&self.v), rows(&self.f), None)
    }
}

fn state_norm(op: &Operator, u: &[f64], v: &[f64], gamma: f64) -> f64 {
    frac_norm_coeffs(op, u, gamma) + frac_norm_coeffs(op, v, 0.0)
}

/// Terminal status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed { t_end: f64 },
    /// The norm exceeded the blow-up threshold or the window collapsed;
    /// `t_est` is the last time at which the solution was accepted.
    MaximalTimeDetected { t_est: f64, reason: BlowupReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    NormThreshold,
    WindowCollapse,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub windows: Vec<WindowRecord>,
    pub trace: SolutionTrace,
    pub regime: Option<Regime>,
    pub strong_check: Option<StrongCheck>,
}

impl RunOutcome {
    pub fn blew_up(&self) -> bool {
        matches!(self.status, RunStatus::MaximalTimeDetected { .. })
    }
}

/// Initial window length from `2 C T^{α−1} Q2(R) ≤ R`, capped at `window_init`.
pub fn initial_window(p: &SemilinearProblem, cfg: &PicardConfig) -> Result<f64> {
    let norm0 = state_norm(&p.op, p.u0.coeffs(), p.u1.coeffs(), 1.0 / p.alpha);
    let r = cfg.r_star.max(2.0 * norm0);
    let (_, q2) = p.nonlinearity.envelopes(r);
    if q2 == 0.0 || p.alpha == 2.0 {
        return Ok(cfg.window_init);
    }
    let c_est = ml_bound_probe(p.alpha, p.alpha, 1e4, 64)?;
    let t = (r / (2.0 * c_est * q2)).powf(1.0 / (p.alpha - 1.0));
    Ok(t.min(cfg.window_init))
}

/// Marches `[0, t_end]` with adaptive windows.
pub fn run(p: &SemilinearProblem, t_end: f64, dt: f64, cfg: &PicardConfig) -> Result<RunOutcome> {
    let regime = p.admission()?;
    let grid = TimeGrid::new(t_end, dt)?;
    let mut m = Marcher::new(p, grid.dt, *cfg)?;
    let mut window = initial_window(p, cfg)?;
    let mut status = RunStatus::Completed { t_end: grid.t_end() };
    while m.last_index() < grid.steps {
        let a = m.last_index();
        let steps = ((window / grid.dt + 1e-9).floor() as usize).clamp(1, grid.steps - a);
        match m.advance(a + steps)? {
            Ok(_) => {
                if let Some(off) = m.norms()[a + 1..].iter().position(|x| *x > cfg.blowup_threshold) {
                    m.truncate(a + off);
                    status = RunStatus::MaximalTimeDetected { t_est: m.last_time(), reason: BlowupReason::NormThreshold };
                    break;
                }
                window = (1.5 * window).min(cfg.window_init);
            }
            Err(_) => {
                window = steps as f64 * grid.dt / 2.0;
                if steps == 1 || window < cfg.window_min {
                    status = RunStatus::MaximalTimeDetected { t_est: m.last_time(), reason: BlowupReason::WindowCollapse };
                    break;
                }
            }
        }
    }
    let windows = m.windows().to_vec();
    let trace = m.into_trace()?;
    Ok(RunOutcome { status, windows, trace, regime, strong_check: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongVerdict {
    /// Subcritical regime: every weak solution is strong.
    StrongByTheorem,
    /// The space-time norm is finite.
    Strong,
    Undetermined,
    NotComputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongCheck {
    pub verdict: StrongVerdict,
    /// `q(r−1)`, infinite for `q = ∞`.
    pub exponent: Option<f64>,
    /// Discrete `‖u‖_{L^{q(r−1)}((0,T); L^∞)}`.
    pub norm: Option<f64>,
    pub horizon: f64,
}

/// Strong-solution diagnostic for a run. `q` is the time exponent dual to the
/// weak formulation's `p` and may be infinite; `r` is the growth exponent.
pub fn strong_solution_check(outcome: &RunOutcome, p: &SemilinearProblem, q: f64, r: f64, quad_points: usize) -> Result<StrongCheck> {
    let trace = &outcome.trace;
    let horizon = trace.times.last().copied().unwrap_or(0.0);
    if outcome.regime.as_ref().is_some_and(|reg| reg.subcritical) {
        return Ok(StrongCheck { verdict: StrongVerdict::StrongByTheorem, exponent: None, norm: None, horizon });
    }
    if trace.len() < 2 {
        return Ok(StrongCheck { verdict: StrongVerdict::NotComputed, exponent: None, norm: None, horizon });
    }
    if !(q > 1.0) || !(r > 1.0) {
        return Err(Error::Domain(format!("need q > 1 and r > 1, got q = {q}, r = {r}")));
    }
    let col = Collocation::new(p.op.clone(), p.n_modes(), quad_points)?;
    let sup: Vec<f64> = trace
        .u
        .par_iter()
        .map(|row| col.synthesize(row).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let exponent = q * (r - 1.0);
    let norm = if exponent.is_infinite() {
        sup.iter().fold(0.0f64, |m, v| m.max(*v))
    } else {
        let peak = sup.iter().fold(0.0f64, |m, v| m.max(*v));
        if peak == 0.0 {
            0.0
        } else {
            // scaled to avoid overflow for large exponents
            let pw: Vec<f64> = sup.iter().map(|s| (s / peak).powf(exponent)).collect();
            let integral: f64 =
                trace.times.windows(2).zip(pw.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum();
            peak * integral.powf(1.0 / exponent)
        }
    };
    let verdict = if norm.is_finite() { StrongVerdict::Strong } else { StrongVerdict::Undetermined };
    Ok(StrongCheck { verdict, exponent: Some(exponent), norm: Some(norm), horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_operator, OperatorSpecConfig};
    use std::f64::consts::PI;

    fn interval() -> Arc<Operator> {
        Arc::new(make_operator(&OperatorSpecConfig::DirichletLaplacianInterval { length: PI }).unwrap())
    }

    #[test]
    fn cube_of_first_mode() {
        // (2/π)² ∫₀^π sin⁴ = 3/(2π)
        let op = interval();
        let u = SpectralField::from_modes(op, 4, &[(0, 1.0)]).unwrap();
        let f = apply_nonlinearity(&NonlinearitySpec::Power { r: 3.0, c: 1.0 }, &u, 16).unwrap();
        assert!((f.coeffs()[0] - 1.5 / PI).abs() < 1e-14);
        assert!(f.coeffs()[1].abs() < 1e-14);
    }

    #[test]
    fn tabulated_requires_origin() {
        let f = NonlinearitySpec::Tabulated { s: vec![-1.0, 1.0], values: vec![-1.0, 1.0] };
        assert!(matches!(f.validate(), Err(Error::Config(_))));
        let f = NonlinearitySpec::Tabulated { s: vec![-1.0, 0.0, 2.0], values: vec![1.0, 0.0, 4.0] };
        f.validate().unwrap();
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(-2.0), 2.0);
        assert_eq!(f.envelopes(1.0).0, 2.0 + ENVELOPE_EPS);
    }

    #[test]
    fn config_checks() {
        let cfg = PicardConfig { window_min: 1.0, window_init: 0.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        PicardConfig::default().validate().unwrap();
    }
}
