//! Command-line driver: scenario files in, CSV and JSON out.

pub mod output;
pub mod scenario;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracwave::criticality::{classify_q, exponent_table, GrowthExponent, Regime};
use fracwave::{
    ml_bound_probe, ml_e, q_a_of, run, self_convergence, solve_linear, strong_solution_check, ExtReal, MLPrecision,
    MLQuery, OperatorSpecConfig, RunStatus,
};

use crate::scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 2,
            CliError::VerifyFailed(_) => 3,
            _ => 1,
        }
    }
}

impl From<fracwave::Error> for CliError {
    fn from(e: fracwave::Error) -> Self {
        if e.is_domain_like() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracwave", version, about = "Fractional-in-time wave equations: kernels, solvers and checks")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "MLWAVE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mittag-Leffler evaluation and checks.
    #[command(subcommand)]
    Ml(MlCommand),
    /// Critical order, growth exponent and the exponent tables.
    Criticality(CriticalityArgs),
    /// Run a scenario.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run an invariant suite and write report.json.
    Verify(VerifyArgs),
    /// Self-convergence study of a scenario under dt halving.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Subcommand)]
pub enum MlCommand {
    /// Print E_{α,β}(x).
    Eval {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print sup (1+x)|E_{α,β}(−x)| over a logarithmic grid.
    Bound {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e6)]
        x_max: f64,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
    },
    /// Derivative identities and closed forms, as a pass/fail table.
    Verify,
}

#[derive(Debug, Args)]
pub struct CriticalityArgs {
    /// Embedding exponent q_A, `inf` allowed.
    #[arg(long, conflicts_with = "operator")]
    pub qa: Option<ExtReal>,
    /// TOML file holding one operator table.
    #[arg(long)]
    pub operator: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Print the exponent tables as CSV.
    #[arg(long)]
    pub table: bool,
    #[arg(long, default_value_t = 4)]
    pub max_d: usize,
    /// Fractional Laplacian orders listed in the table.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
    pub s: Vec<f64>,
    /// Exponent chosen in the borderline dimension.
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Print the regime as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum SolveCommand {
    Linear(SolveArgs),
    Semilinear(SolveArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the scenario's `output` entry.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Admit α = 2, the classical wave equation.
    #[arg(long)]
    pub allow_limit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Ml,
    Linear,
    Semilinear,
    Rates,
    Convergence,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Step sizes, each half the previous; default dt, dt/2, dt/4.
    #[arg(long, value_delimiter = ',')]
    pub dts: Option<Vec<f64>>,
    #[arg(long)]
    pub allow_limit: bool,
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second build in the same process is harmless: the first pool stays
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Ml(c) => ml(c),
        Command::Criticality(a) => criticality(a),
        Command::Solve(SolveCommand::Linear(a)) => solve(a, false),
        Command::Solve(SolveCommand::Semilinear(a)) => solve(a, true),
        Command::Verify(a) => verify(a),
        Command::Convergence(a) => convergence(a),
    }
}

fn ml(c: MlCommand) -> Result<(), CliError> {
    match c {
        MlCommand::Eval { alpha, beta, x, tol } => {
            let p = tol.map_or_else(MLPrecision::default, MLPrecision::with_tol);
            let v = ml_e(&MLQuery::new(alpha, beta, x)?, &p)?;
            println!("{v:.16e}");
        }
        MlCommand::Bound { alpha, beta, x_max, grid } => {
            println!("{:.16e}", ml_bound_probe(alpha, beta, x_max, grid)?);
        }
        MlCommand::Verify => {
            let report = suites::run_suite(Suite::Ml)?;
            print!("{}", report.table());
            if !report.passed {
                return Err(CliError::VerifyFailed("ml identity suite".into()));
            }
        }
    }
    Ok(())
}

/// `p/q` for small denominators, else the decimal.
fn pretty(x: f64) -> String {
    if x.fract() == 0.0 {
        return format!("{x}");
    }
    for q in 2..=12u32 {
        let p = (x * q as f64).round();
        if ((p / q as f64) - x).abs() <= 1e-12 * x.abs().max(1.0) {
            return format!("{p}/{q}");
        }
    }
    format!("{x}")
}

fn print_regime(r: &Regime, alpha: f64) {
    println!("case: {:?}", r.case);
    println!("q_A: {}", r.q_a);
    println!("theta_A: {}", pretty(r.theta_a));
    match r.alpha0 {
        Some(a0) => println!("alpha0: {}", pretty(a0)),
        None => println!("alpha0: none"),
    }
    println!("alpha: {alpha}");
    println!("subcritical: {}", r.subcritical);
    match r.growth {
        GrowthExponent::Unbounded => println!("r*: unbounded"),
        GrowthExponent::AnyFinite => println!("r*: any finite r"),
        GrowthExponent::Finite { r_star } => println!("r*: {}", pretty(r_star)),
    }
    if let Some(n) = &r.note {
        println!("note: {n}");
    }
}

fn criticality(a: CriticalityArgs) -> Result<(), CliError> {
    if a.table {
        let rows = exponent_table(a.max_d, &a.s, a.q)?;
        let mut w = csv::Writer::from_writer(std::io::stdout());
        w.write_record(["family", "d", "s", "q_A", "theta_A", "alpha0"]).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record([
                r.family.label().to_string(),
                r.d.to_string(),
                r.s.map_or(String::new(), |s| s.to_string()),
                r.q_a.to_string(),
                r.theta_a.to_string(),
                r.alpha0.map_or("none".into(), |v| v.to_string()),
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    let q_a = match (&a.qa, &a.operator) {
        (Some(q), _) => Some(*q),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg: OperatorSpecConfig =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid operator: {e}")))?;
            cfg.validate()?;
            Some(q_a_of(&cfg))
        }
        (None, None) => None,
    };
    match (q_a, a.alpha) {
        (Some(q), Some(alpha)) => {
            let r = classify_q(q, alpha)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.to_string()))?);
            } else {
                print_regime(&r, alpha);
            }
            Ok(())
        }
        (None, None) if a.table => Ok(()),
        _ => Err(CliError::Usage("criticality needs --alpha with --qa or --operator, or --table".into())),
    }
}

fn out_dir(s: &Scenario, out: Option<PathBuf>, config: &Path) -> Result<PathBuf, CliError> {
    match (out, &s.output) {
        (Some(o), _) => Ok(o),
        (None, Some(o)) => Ok(config.parent().unwrap_or(Path::new(".")).join(o)),
        (None, None) => Err(CliError::Usage("no output directory: pass --out or set `output`".into())),
    }
}

fn base_of(config: &Path) -> &Path {
    config.parent().unwrap_or(Path::new("."))
}

fn solve(a: SolveArgs, semilinear: bool) -> Result<(), CliError> {
    let s = Scenario::load(&a.config, a.allow_limit)?;
    if semilinear != s.is_semilinear() {
        return Err(CliError::Config(if semilinear {
            "scenario has no [nonlinearity]; use `solve linear`".into()
        } else {
            "scenario has a [nonlinearity]; use `solve semilinear`".into()
        }));
    }
    let dir = out_dir(&s, a.out, &a.config)?;
    std::fs::create_dir_all(&dir)?;
    let base = base_of(&a.config);
    output::write_atomic(&dir.join("config.echo.toml"), s.echo()?.as_bytes())?;
    if semilinear {
        let p = s.semilinear_problem(base)?;
        let outcome = run(&p, s.grid.t_end, s.grid.dt, &s.picard)?;
        let quad = s.picard.nonlinearity_quadrature.expect("resolved");
        let strong = match &s.strong_check {
            Some(c) if p.alpha < 2.0 => {
                let r = match p.nonlinearity.hypothesis() {
                    fracwave::HypothesisClass::Hf1 { r, .. } => r,
                    fracwave::HypothesisClass::Hf2 => 2.0,
                };
                Some(strong_solution_check(&outcome, &p, c.q, r, quad)?)
            }
            _ => None,
        };
        let outcome = fracwave::RunOutcome { strong_check: strong, ..outcome };
        output::write_trace(&dir, &outcome.trace)?;
        output::write_outcome(&dir, &outcome)?;
        output::write_summary(&dir, &s, &outcome.trace, Some(&outcome))?;
        match outcome.status {
            RunStatus::Completed { t_end } => println!("completed: t_end = {t_end}"),
            RunStatus::MaximalTimeDetected { t_est, reason } => {
                println!("maximal time detected: t_est = {t_est} ({reason:?})")
            }
        }
    } else {
        let p = s.linear_problem(base)?;
        let trace = solve_linear(&p, &s.grid()?, false)?;
        output::write_trace(&dir, &trace)?;
        output::write_summary(&dir, &s, &trace, None)?;
        for w in &trace.warnings {
            eprintln!("warning: {w}");
        }
        println!("completed: t_end = {}", s.grid.t_end);
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let report = suites::run_suite(a.suite)?;
    std::fs::create_dir_all(&a.out)?;
    output::write_json(&a.out.join("report.json"), &report)?;
    print!("{}", report.table());
    if report.passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(format!("{} of {} checks failed", report.failures(), report.checks.len())))
    }
}

fn convergence(a: ConvergenceArgs) -> Result<(), CliError> {
    let s = Scenario::load(&a.config, a.allow_limit)?;
    let dir = out_dir(&s, a.out, &a.config)?;
    std::fs::create_dir_all(&dir)?;
    let base = base_of(&a.config);
    let dts = a.dts.unwrap_or_else(|| vec![s.grid.dt, s.grid.dt / 2.0, s.grid.dt / 4.0]);
    let t_end = s.grid.t_end;
    let report = if s.is_semilinear() {
        let p = s.semilinear_problem(base)?;
        self_convergence(
            |dt| {
                let out = run(&p, t_end, dt, &s.picard)?;
                if out.blew_up() {
                    return Err(fracwave::Error::Numeric {
                        index: out.trace.len(),
                        message: format!("run with dt = {dt} stopped before t_end"),
                    });
                }
                Ok(out.trace.u.last().cloned().unwrap_or_default())
            },
            &dts,
        )?
    } else {
        let p = s.linear_problem(base)?;
        self_convergence(
            |dt| {
                let tr = solve_linear(&p, &fracwave::TimeGrid::new(t_end, dt)?, false)?;
                Ok(tr.u.last().cloned().unwrap_or_default())
            },
            &dts,
        )?
    };
    output::write_json(&dir.join("convergence.json"), &report)?;
    for (dt, d) in report.dts.iter().zip(&report.differences) {
        println!("dt = {dt}: difference to next level {d:.3e}");
    }
    println!("order: {:?}", report.order());
    Ok(())
}
