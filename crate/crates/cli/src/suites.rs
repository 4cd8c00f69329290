//! Invariant suites behind `verify`. Oracles here are closed forms only.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use fracwave::diagnostics::ROUND_OFF_FLOOR;
use fracwave::spectral::frac_norm_coeffs;
use fracwave::special::gamma;
use fracwave::{
    discrete_caputo, homogeneous_state, make_operator, mittag_leffler, ml_bound_probe, ml_identity_residuals,
    rate_fit, run, self_convergence, solve_linear, ForcingSpec, LinearProblem, NonlinearitySpec, Operator,
    OperatorSpecConfig, PicardConfig, Result, RunStatus, SemilinearProblem, SpectralField, TimeFunction, TimeGrid,
};
use serde::Serialize;

use crate::Suite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let _ = writeln!(
                s,
                "{}  {:<48} {:>12.4e} {op} {:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            );
        }
        let _ = writeln!(s, "{}: {}/{} passed", self.suite, self.checks.len() - self.failures(), self.checks.len());
        s
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value <= threshold;
        self.0.push(Check { name: name.into(), passed, value, bound: Bound::AtMost, threshold });
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let passed = value >= threshold;
        self.0.push(Check { name: name.into(), passed, value, bound: Bound::AtLeast, threshold });
    }
}

pub fn run_suite(suite: Suite) -> Result<Report> {
    let mut c = Checks::default();
    let name = match suite {
        Suite::Ml => {
            ml_suite(&mut c)?;
            "ml"
        }
        Suite::Linear => {
            linear_suite(&mut c)?;
            "linear"
        }
        Suite::Semilinear => {
            semilinear_suite(&mut c)?;
            "semilinear"
        }
        Suite::Rates => {
            rates_suite(&mut c)?;
            "rates"
        }
        Suite::Convergence => {
            convergence_suite(&mut c)?;
            "convergence"
        }
    };
    let checks = c.0;
    Ok(Report { suite: name.into(), passed: checks.iter().all(|c| c.passed), checks })
}

fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn ml_suite(c: &mut Checks) -> Result<()> {
    let mut e = 0.0f64;
    for x in grid(-30.0, 5.0, 201) {
        e = e.max(rel(mittag_leffler(1.0, 1.0, x)?, x.exp()));
    }
    c.at_most("E_{1,1}(x) = exp(x) on [-30, 5]", e, 1e-10);
    let (mut ec, mut es) = (0.0f64, 0.0f64);
    for x in grid(0.0, 20.0, 201) {
        let cos = x.cos();
        // relative error is meaningless at the zeros; scale by max(|f|, 1e-3)
        ec = ec.max((mittag_leffler(2.0, 1.0, -x * x)? - cos).abs() / cos.abs().max(1e-3));
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        es = es.max((mittag_leffler(2.0, 2.0, -x * x)? - sinc).abs() / sinc.abs().max(1e-3));
    }
    c.at_most("E_{2,1}(-x^2) = cos x on [0, 20]", ec, 1e-10);
    c.at_most("E_{2,2}(-x^2) = sin(x)/x on [0, 20]", es, 1e-10);

    let hs = [1e-3, 5e-4, 2.5e-4];
    for alpha in [1.2, 1.5, 1.8] {
        for lambda in [0.5, 2.0, 10.0] {
            let r: Vec<(f64, f64, f64)> =
                hs.iter().map(|&h| ml_identity_residuals(alpha, lambda, 1.0, h)).collect::<Result<_>>()?;
            let order = |f: fn(&(f64, f64, f64)) -> f64| {
                r.windows(2).map(|w| (f(&w[0]) / f(&w[1])).log2()).fold(f64::INFINITY, f64::min)
            };
            let worst = order(|x| x.0).min(order(|x| x.1)).min(order(|x| x.2));
            c.at_least(format!("identity order alpha={alpha} lambda={lambda}"), worst, 1.9);
        }
    }

    for alpha in [1.2, 1.5, 1.8] {
        for beta in [1.0, alpha, alpha - 1.0, 2.0] {
            let coarse = ml_bound_probe(alpha, beta, 1e6, 400)?;
            let fine = ml_bound_probe(alpha, beta, 1e6, 800)?;
            c.at_most(format!("bound sup stable alpha={alpha} beta={beta:.2}"), rel(coarse, fine), 0.01);
        }
    }
    Ok(())
}

fn interval() -> Result<Arc<Operator>> {
    Ok(Arc::new(make_operator(&OperatorSpecConfig::DirichletLaplacianInterval { length: PI })?))
}

fn modes(op: &Arc<Operator>, n: usize, m: &[(usize, f64)]) -> Result<SpectralField> {
    SpectralField::from_modes(op.clone(), n, m)
}

fn linear_suite(c: &mut Checks) -> Result<()> {
    let op = interval()?;

    // classical limit: cos and sin are exact
    let p = LinearProblem::new(2.0, modes(&op, 2, &[(0, 1.0)])?, modes(&op, 2, &[(1, 1.0)])?, ForcingSpec::Zero)?;
    let tr = solve_linear(&p, &TimeGrid::new(10.0, 0.01)?, false)?;
    let mut e = 0.0f64;
    for (i, &t) in tr.times.iter().enumerate() {
        e = e
            .max((tr.u[i][0] - t.cos()).abs())
            .max((tr.dtu[i][0] + t.sin()).abs())
            .max((tr.u[i][1] - (2.0 * t).sin() / 2.0).abs())
            .max((tr.dtu[i][1] - (2.0 * t).cos()).abs());
    }
    c.at_most("alpha=2 matches cos/sin on [0, 10]", e, 1e-9);

    // with λ₁ ≈ 0, constant forcing gives t^α/Γ(α+1)
    let zero_op = Arc::new(make_operator(&OperatorSpecConfig::NeumannLaplacianShifted {
        lengths: vec![1.0],
        shift: 1e-300,
        embedding_q: 4.0,
    })?);
    let alpha = 1.4;
    let f = ForcingSpec::Separable { g: modes(&zero_op, 1, &[(0, 1.0)])?, h: TimeFunction::Constant { value: 1.0 } };
    let p = LinearProblem::new(alpha, modes(&zero_op, 1, &[])?, modes(&zero_op, 1, &[])?, f)?;
    let tr = solve_linear(&p, &TimeGrid::new(2.0, 0.05)?, false)?;
    let e = tr
        .times
        .iter()
        .zip(&tr.u)
        .map(|(&t, u)| (u[0] - t.powf(alpha) / gamma(alpha + 1.0)).abs())
        .fold(0.0, f64::max);
    c.at_most("lambda=0 constant forcing is t^a/Gamma(a+1)", e, 1e-10);

    // superposition
    let grid = TimeGrid::new(1.0, 0.02)?;
    let h = TimeFunction::Sinusoid { amplitude: 1.0, omega: 3.0, phase: 0.0 };
    let f = ForcingSpec::Separable { g: modes(&op, 3, &[(0, 1.0), (2, -1.0)])?, h };
    let all = LinearProblem::new(1.5, modes(&op, 3, &[(0, 1.0)])?, modes(&op, 3, &[(1, 2.0)])?, f.clone())?;
    let a = LinearProblem::new(1.5, modes(&op, 3, &[(0, 1.0)])?, modes(&op, 3, &[])?, ForcingSpec::Zero)?;
    let b = LinearProblem::new(1.5, modes(&op, 3, &[])?, modes(&op, 3, &[(1, 2.0)])?, f)?;
    let (ta, tb, tall) = (solve_linear(&a, &grid, false)?, solve_linear(&b, &grid, false)?, solve_linear(&all, &grid, false)?);
    let e = (0..tall.len())
        .flat_map(|i| (0..3).map(move |k| (i, k)))
        .map(|(i, k)| (tall.u[i][k] - ta.u[i][k] - tb.u[i][k]).abs())
        .fold(0.0, f64::max);
    c.at_most("superposition of data and forcing", e, 1e-12);

    // traces agree with the pointwise propagator
    let p = LinearProblem::new(1.6, modes(&op, 4, &[(0, 1.0), (3, 0.2)])?, modes(&op, 4, &[(1, -0.5)])?, ForcingSpec::Zero)?;
    let tr = solve_linear(&p, &TimeGrid::new(2.0, 0.05)?, false)?;
    let mut e = 0.0f64;
    for (i, &t) in tr.times.iter().enumerate() {
        let (u, v) = homogeneous_state(&p, t)?;
        for k in 0..4 {
            e = e.max((tr.u[i][k] - u[k]).abs()).max((tr.dtu[i][k] - v[k]).abs());
        }
    }
    c.at_most("trace equals pointwise homogeneous state", e, 1e-12);
    Ok(())
}

fn single(alpha: f64, f: NonlinearitySpec, n: usize, u0: f64) -> Result<SemilinearProblem> {
    let op = interval()?;
    SemilinearProblem::new(alpha, modes(&op, n, &[(0, u0)])?, SpectralField::zeros(op, n)?, f)
}

fn semilinear_suite(c: &mut Checks) -> Result<()> {
    let cfg = PicardConfig::default();

    let p = single(1.5, NonlinearitySpec::LinearShift { kappa: 1.0 }, 1, 1.0)?;
    let out = run(&p, 5.0, 0.01, &cfg)?;
    let e = out.trace.u.iter().map(|r| (r[0] - 1.0).abs()).fold(0.0, f64::max);
    c.at_most("f(u) = u keeps phi_1 constant on [0, 5]", e, 1e-8);

    // κ = 1/2 shifts λ₁ to 1/2: compare against the library propagator
    let p = single(1.5, NonlinearitySpec::LinearShift { kappa: 0.5 }, 1, 1.0)?;
    let out = run(&p, 3.0, 1e-3, &cfg)?;
    let mut e = 0.0f64;
    for (i, &t) in out.trace.times.iter().enumerate().step_by(50) {
        e = e.max((out.trace.u[i][0] - mittag_leffler(1.5, 1.0, -0.5 * t.powf(1.5))?).abs());
    }
    c.at_most("f(u) = u/2 follows E_{a,1}(-(1/2) t^a)", e, 1e-6);

    let p = single(1.5, NonlinearitySpec::Sine { c: 0.1 }, 8, 0.1)?;
    let wide = PicardConfig { window_init: 10.0, ..cfg };
    let mut one = fracwave::Marcher::new(&p, 0.01, wide)?;
    one.advance(200)?.map_err(|e| fracwave::Error::Accuracy(format!("{e:?}")))?;
    let mut two = fracwave::Marcher::new(&p, 0.01, wide)?;
    two.advance(100)?.map_err(|e| fracwave::Error::Accuracy(format!("{e:?}")))?;
    two.advance(200)?.map_err(|e| fracwave::Error::Accuracy(format!("{e:?}")))?;
    let (a, b) = (one.into_trace()?, two.into_trace()?);
    let e = a.u.iter().flatten().zip(b.u.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    c.at_most("one window vs two windows", e, 1e-8);

    let p = single(1.5, NonlinearitySpec::Zero, 8, 5.0)?;
    let out = run(&p, 50.0, 0.01, &cfg)?;
    let done = matches!(out.status, RunStatus::Completed { .. });
    c.at_least("f = 0 completes [0, 50]", done as u8 as f64, 1.0);
    Ok(())
}

fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn rates_suite(c: &mut Checks) -> Result<()> {
    const N: usize = 2000;
    let op = interval()?;
    let power = |e: f64| SpectralField::new(op.clone(), (1..=N).map(|n| (n as f64).powf(-e)).collect());
    let lambdas = op.eigenvalues(N);
    let window = (1e-3, 1e-1);
    let times = log_times(window.0 / 4.0, window.1, 40);
    let fit = |p: &LinearProblem, norm: &dyn Fn(&[f64], &[f64]) -> f64| -> Result<f64> {
        let vals: Vec<f64> = times
            .iter()
            .map(|&t| homogeneous_state(p, t).map(|(u, v)| norm(&u, &v)))
            .collect::<Result<_>>()?;
        Ok(rate_fit(&times, &vals, window)?.exponent)
    };
    for alpha in [1.25, 1.5, 1.75] {
        let beta = 1.0 - 1.0 / alpha;
        let zero = SpectralField::zeros(op.clone(), N)?;
        let p = LinearProblem::new(alpha, power(1.0 + 2.0 / alpha)?, zero.clone(), ForcingSpec::Zero)?;
        let got = fit(&p, &|_, v| frac_norm_coeffs(&op, v, -beta))?;
        c.at_most(format!("velocity layer exponent alpha={alpha}"), (got - alpha * beta).abs(), 0.1);

        let sigma = 0.5 / alpha;
        let p = LinearProblem::new(alpha, zero.clone(), power(0.5)?, ForcingSpec::Zero)?;
        let got = fit(&p, &|u, _| frac_norm_coeffs(&op, u, sigma))?;
        c.at_most(format!("displacement layer exponent alpha={alpha}"), (got - (1.0 - alpha * sigma)).abs(), 0.1);

        let p = LinearProblem::new(alpha, power(0.5 + 2.0 / alpha)?, zero, ForcingSpec::Zero)?;
        let got = fit(&p, &|u, _| {
            let au: Vec<f64> = u.iter().zip(&lambdas).map(|(c, l)| c * l).collect();
            frac_norm_coeffs(&op, &au, 0.0)
        })?;
        c.at_most(format!("strong envelope exponent alpha={alpha}"), (got - (1.0 - alpha)).abs(), 0.1);
    }
    Ok(())
}

fn convergence_suite(c: &mut Checks) -> Result<()> {
    let op = interval()?;
    let f = ForcingSpec::Separable {
        g: modes(&op, 2, &[(0, 1.0), (1, 1.0)])?,
        h: TimeFunction::Sinusoid { amplitude: 1.0, omega: 2.0, phase: 0.3 },
    };
    let p = LinearProblem::new(1.5, modes(&op, 2, &[])?, modes(&op, 2, &[])?, f)?;
    let rep = self_convergence(
        |dt| Ok(solve_linear(&p, &TimeGrid::new(1.0, dt)?, false)?.u.last().cloned().unwrap_or_default()),
        &[0.02, 0.01, 0.005, 0.0025],
    )?;
    let order = match rep.order() {
        fracwave::Order::Exact => f64::INFINITY,
        fracwave::Order::Observed(p) => p,
    };
    c.at_least("sinusoidal forcing observed order", order, 1.8);

    let alpha = 1.5;
    let exact = |t: f64| 24.0 / gamma(5.0 - alpha) * t.powf(4.0 - alpha);
    let res: Vec<f64> = [0.02f64, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let m = (1.0 / dt).round() as usize;
            let u: Vec<f64> = (0..=m).map(|i| (i as f64 * dt).powi(4)).collect();
            let d = discrete_caputo(&u, alpha, dt)?;
            Ok(d.iter().enumerate().map(|(i, v)| (v - exact((i + 1) as f64 * dt)).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let factor = res.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    c.at_least("Caputo residual factor on t^4 per halving", factor, 1.8);

    let f = ForcingSpec::Separable {
        g: modes(&op, 4, &[(0, 1.0), (3, 0.5)])?,
        h: TimeFunction::Sinusoid { amplitude: 1.0, omega: 2.0, phase: 0.0 },
    };
    let p = LinearProblem::new(1.5, modes(&op, 4, &[(0, 1.0), (1, 0.3)])?, modes(&op, 4, &[(2, 0.5)])?, f)?;
    let mut prev = [f64::INFINITY; 4];
    let mut worst = 0.0f64;
    for dt in [0.02, 0.01, 0.005] {
        let tr = solve_linear(&p, &TimeGrid::new(1.0, dt)?, false)?;
        for (k, prev) in prev.iter_mut().enumerate() {
            let d = discrete_caputo(&tr.u_mode(k), 1.5, dt)?;
            let r = d.iter().enumerate().map(|(i, v)| (v - tr.dalpha[i + 1][k]).abs()).fold(0.0, f64::max);
            if r >= ROUND_OFF_FLOOR && prev.is_finite() {
                worst = worst.max(r / *prev);
            }
            *prev = r;
        }
    }
    c.at_most("solver trace residual ratio under halving", worst, 1.1);
    Ok(())
}
