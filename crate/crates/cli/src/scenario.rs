//! Scenario documents: one TOML tree per linear or semilinear run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracwave::spectral::make_operator_with_capacity;
use fracwave::{
    ForcingSpec, LinearProblem, MLPrecision, NonlinearitySpec, Operator, OperatorSpecConfig, PicardConfig,
    SemilinearProblem, SpectralField, TimeFunction, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Initial data or a spatial forcing profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    #[default]
    Zero,
    /// `phi<k>`, the k-th eigenfunction counted from 1.
    Named { name: String },
    /// Leading coefficients; missing ones are zero.
    Coefficients { values: Vec<f64> },
    /// `c_n = amplitude · n^{−exponent}` for `n = 1..=N`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// One coefficient per line, relative paths taken from the scenario's directory.
    File { path: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    #[default]
    Zero,
    /// `f(x, t) = g(x) h(t)`
    Separable { g: InitialData, h: TimeFunction },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongCheckConfig {
    /// Time exponent of the strong-solution condition; must exceed `1/(α−1)`.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alpha: f64,
    #[serde(rename = "N_modes", alias = "n_modes")]
    pub n_modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub operator: OperatorSpecConfig,
    pub grid: GridConfig,
    pub u0: InitialData,
    #[serde(default)]
    pub u1: InitialData,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_check: Option<StrongCheckConfig>,
    #[serde(default)]
    pub precision: MLPrecision,
}

impl Scenario {
    /// Parses, validates and fills every derived default. `base` anchors
    /// relative file paths.
    pub fn parse(text: &str, base: &Path, allow_limit: bool) -> Result<Self, CliError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(format!("invalid scenario: {e}")))?;
        s.validate(base, allow_limit)?;
        s.resolve_defaults()?;
        Ok(s)
    }

    pub fn load(path: &Path, allow_limit: bool) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), allow_limit)
    }

    /// The scenario as a document that parses back to an equal value.
    pub fn echo(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise scenario: {e}")))
    }

    pub fn is_semilinear(&self) -> bool {
        self.nonlinearity.is_some()
    }

    fn validate(&self, base: &Path, allow_limit: bool) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            errs.push(format!("alpha must lie in (1, 2], got {}", self.alpha));
        } else if self.alpha == 2.0 && !allow_limit {
            errs.push("alpha = 2 is the classical wave limit; pass --allow-limit to run it".into());
        }
        if self.n_modes == 0 {
            errs.push("N_modes must be at least 1".into());
        }
        if let Err(e) = self.operator.validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = TimeGrid::new(self.grid.t_end, self.grid.dt) {
            errs.push(e.to_string());
        }
        for (name, data) in self.data_fields() {
            if let Err(e) = check_data(data, self.n_modes, base) {
                errs.push(format!("{name}: {e}"));
            }
        }
        if let ForcingConfig::Separable { h, .. } = &self.forcing {
            if let Err(e) = h.validate() {
                errs.push(format!("forcing.h: {e}"));
            }
        }
        if let Err(e) = self.picard.validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = self.precision.validate() {
            errs.push(e.to_string());
        }
        if let Some(f) = &self.nonlinearity {
            if self.forcing != ForcingConfig::Zero {
                errs.push("a semilinear scenario takes a nonlinearity and no forcing".into());
            }
            if let Err(e) = f.validate() {
                errs.push(e.to_string());
            } else if errs.is_empty() {
                // growth admission needs a consistent problem
                match self.semilinear_problem(base) {
                    Ok(p) => {
                        if let Err(e) = p.admission() {
                            errs.push(e.to_string());
                        }
                    }
                    Err(e) => errs.push(e.to_string()),
                }
            }
        }
        if let Some(sc) = &self.strong_check {
            if !(sc.q > 1.0 / (self.alpha - 1.0)) {
                errs.push(format!("strong_check.q must exceed 1/(alpha - 1) = {}, got {}", 1.0 / (self.alpha - 1.0), sc.q));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs.join("\n")))
        }
    }

    fn resolve_defaults(&mut self) -> Result<(), CliError> {
        if self.picard.nonlinearity_quadrature.is_none() {
            let m = self.operator()?.max_axis_index(self.n_modes);
            self.picard.nonlinearity_quadrature = Some(4 * m);
        }
        if self.is_semilinear() && self.strong_check.is_none() {
            let q = if self.alpha < 2.0 { 2.0 / (self.alpha - 1.0) } else { 2.0 };
            self.strong_check = Some(StrongCheckConfig { q });
        }
        Ok(())
    }

    fn data_fields(&self) -> Vec<(&'static str, &InitialData)> {
        let mut v = vec![("u0", &self.u0), ("u1", &self.u1)];
        if let ForcingConfig::Separable { g, .. } = &self.forcing {
            v.push(("forcing.g", g));
        }
        v
    }

    pub fn operator(&self) -> Result<Arc<Operator>, CliError> {
        Ok(Arc::new(make_operator_with_capacity(&self.operator, self.n_modes)?))
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.grid.t_end, self.grid.dt)?)
    }

    pub fn linear_problem(&self, base: &Path) -> Result<LinearProblem, CliError> {
        let op = self.operator()?;
        let forcing = match &self.forcing {
            ForcingConfig::Zero => ForcingSpec::Zero,
            ForcingConfig::Separable { g, h } => {
                ForcingSpec::Separable { g: field(&op, self.n_modes, g, base)?, h: h.clone() }
            }
        };
        let p = LinearProblem::new(
            self.alpha,
            field(&op, self.n_modes, &self.u0, base)?,
            field(&op, self.n_modes, &self.u1, base)?,
            forcing,
        )?;
        Ok(p.with_precision(self.precision)?)
    }

    pub fn semilinear_problem(&self, base: &Path) -> Result<SemilinearProblem, CliError> {
        let op = self.operator()?;
        let f = self.nonlinearity.clone().unwrap_or(NonlinearitySpec::Zero);
        let mut p = SemilinearProblem::new(
            self.alpha,
            field(&op, self.n_modes, &self.u0, base)?,
            field(&op, self.n_modes, &self.u1, base)?,
            f,
        )?;
        p.precision = self.precision;
        Ok(p)
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn check_data(data: &InitialData, n: usize, base: &Path) -> Result<(), String> {
    match data {
        InitialData::Zero => Ok(()),
        InitialData::Named { name } => named_index(name, n).map(|_| ()),
        InitialData::Coefficients { values } => {
            if values.len() > n {
                Err(format!("{} coefficients given for N_modes = {n}", values.len()))
            } else if values.iter().any(|v| !v.is_finite()) {
                Err("coefficients must be finite".into())
            } else {
                Ok(())
            }
        }
        InitialData::PowerLaw { amplitude, exponent } => {
            if amplitude.is_finite() && exponent.is_finite() {
                Ok(())
            } else {
                Err("power law parameters must be finite".into())
            }
        }
        InitialData::File { path } => {
            let p = resolve(base, path);
            if p.is_file() {
                read_coefficients(&p, n).map(|_| ())
            } else {
                Err(format!("file {} does not exist", p.display()))
            }
        }
    }
}

fn named_index(name: &str, n: usize) -> Result<usize, String> {
    let k: usize = name
        .strip_prefix("phi")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| format!("unknown named function '{name}', expected phi<k> with k >= 1"))?;
    if k == 0 || k > n {
        return Err(format!("{name} lies outside the {n} retained modes"));
    }
    Ok(k - 1)
}

/// Either `n,c_n` pairs (1-based `n`) or one coefficient per line; a
/// non-numeric first line is taken as a header.
fn read_coefficients(path: &Path, n: usize) -> Result<Vec<f64>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out = vec![0.0; n];
    let mut next = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let bad = || format!("{}: line {} is not a coefficient entry", path.display(), i + 1);
        let cells: Vec<&str> = rec.iter().filter(|c| !c.is_empty()).collect();
        let (k, v) = match cells.as_slice() {
            [] => continue,
            [v] => (Some(next), v.parse::<f64>().ok()),
            [k, v] => (k.parse::<usize>().ok().and_then(|k| k.checked_sub(1)), v.parse::<f64>().ok()),
            _ => return Err(bad()),
        };
        let (k, v) = match (k, v) {
            (Some(k), Some(v)) if v.is_finite() => (k, v),
            _ if i == 0 => continue,
            _ => return Err(bad()),
        };
        if k >= n {
            return Err(format!("{}: mode {} exceeds N_modes = {n}", path.display(), k + 1));
        }
        out[k] = v;
        next = k + 1;
    }
    Ok(out)
}

fn field(op: &Arc<Operator>, n: usize, data: &InitialData, base: &Path) -> Result<SpectralField, CliError> {
    let mut c = vec![0.0; n];
    match data {
        InitialData::Zero => {}
        InitialData::Named { name } => c[named_index(name, n).map_err(CliError::Config)?] = 1.0,
        InitialData::Coefficients { values } => c[..values.len()].copy_from_slice(values),
        InitialData::PowerLaw { amplitude, exponent } => {
            for (i, v) in c.iter_mut().enumerate() {
                *v = amplitude * ((i + 1) as f64).powf(-exponent);
            }
        }
        InitialData::File { path } => {
            c = read_coefficients(&resolve(base, path), n).map_err(CliError::Config)?;
        }
    }
    Ok(SpectralField::new(op.clone(), c)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
alpha = 1.5
N_modes = 8

[operator]
kind = "dirichlet_laplacian_interval"
length = 3.141592653589793

[grid]
t_end = 1.0
dt = 0.01

[u0]
kind = "named"
name = "phi1"
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::parse(MINIMAL, Path::new("."), false).unwrap();
        assert_eq!(s.u1, InitialData::Zero);
        assert_eq!(s.forcing, ForcingConfig::Zero);
        assert_eq!(s.picard.tol, 1e-10);
        assert_eq!(s.picard.nonlinearity_quadrature, Some(32));
        assert!(!s.is_semilinear());
    }

    #[test]
    fn echo_round_trips() {
        let s = Scenario::parse(MINIMAL, Path::new("."), false).unwrap();
        let back = Scenario::parse(&s.echo().unwrap(), Path::new("."), false).unwrap();
        assert_eq!(s, back);
        let semi = format!("{MINIMAL}\n[nonlinearity]\nkind = \"sine\"\nc = 0.1\n");
        let s = Scenario::parse(&semi, Path::new("."), false).unwrap();
        assert!(s.strong_check.is_some());
        assert_eq!(Scenario::parse(&s.echo().unwrap(), Path::new("."), false).unwrap(), s);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\ncolour = 3\n");
        assert!(matches!(Scenario::parse(&bad, Path::new("."), false), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("dt = 0.01", "dt = 0.01\nsteps = 4");
        assert!(Scenario::parse(&bad, Path::new("."), false).is_err());
    }

    #[test]
    fn classical_limit_needs_the_flag() {
        let text = MINIMAL.replace("alpha = 1.5", "alpha = 2.0");
        let err = Scenario::parse(&text, Path::new("."), false).unwrap_err();
        assert!(err.to_string().contains("--allow-limit"), "{err}");
        Scenario::parse(&text, Path::new("."), true).unwrap();
    }

    #[test]
    fn violations_are_itemised() {
        let text = MINIMAL.replace("dt = 0.01", "dt = 0.3").replace("phi1", "phi9");
        let msg = Scenario::parse(&text, Path::new("."), false).unwrap_err().to_string();
        assert!(msg.contains("does not divide") && msg.contains("phi9"), "{msg}");
    }

    #[test]
    fn growth_beyond_the_critical_exponent_is_rejected() {
        let text = MINIMAL
            .replace(
                "kind = \"dirichlet_laplacian_interval\"\nlength = 3.141592653589793",
                "kind = \"dirichlet_laplacian_box\"\nlengths = [1.0, 1.0, 1.0]",
            )
            + "\n[nonlinearity]\nkind = \"power\"\nr = 10.0\nc = 1.0\n";
        let msg = Scenario::parse(&text, Path::new("."), false).unwrap_err().to_string();
        assert!(msg.contains("r* = 9"), "{msg}");
    }
}
