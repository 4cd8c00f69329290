//! Critical time order, embedding exponent and admissible growth of the
//! nonlinearity, from the Sobolev exponent `q_A` of the operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ExtReal, Operator};

/// `θ_A = q_A / (2(q_A − 1))`, equal to `1/2` when `q_A = ∞`.
pub fn theta_a(q_a: ExtReal) -> Result<f64> {
    match q_a {
        ExtReal::Infinity => Ok(0.5),
        ExtReal::Finite(q) if q > 1.0 => Ok(q / (2.0 * (q - 1.0))),
        ExtReal::Finite(q) => Err(Error::Domain(format!("q_A must exceed 1, got {q}"))),
    }
}

/// `α₀ = 2(q_A − 1)/q_A` when `q_A > 2`; `None` means there is no critical value.
pub fn alpha_0(q_a: ExtReal) -> Result<Option<f64>> {
    theta_a(q_a)?;
    Ok(match q_a {
        ExtReal::Infinity => Some(2.0),
        ExtReal::Finite(q) if q > 2.0 => Some(2.0 * (q - 1.0) / q),
        ExtReal::Finite(_) => None,
    })
}

/// Admissible polynomial growth of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthExponent {
    /// Below the critical order: no growth restriction.
    Unbounded,
    /// Exactly at the critical order: every finite `r > 1` is admissible.
    AnyFinite,
    Finite { r_star: f64 },
}

impl GrowthExponent {
    /// Whether a power nonlinearity of exponent `r` is admissible.
    pub fn admits(&self, r: f64) -> bool {
        match self {
            GrowthExponent::Unbounded | GrowthExponent::AnyFinite => r.is_finite(),
            GrowthExponent::Finite { r_star } => r <= *r_star,
        }
    }

    pub fn r_star(&self) -> Option<f64> {
        match self {
            GrowthExponent::Finite { r_star } => Some(*r_star),
            _ => None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    Ok(())
}

pub fn growth_exponent(alpha: f64, q_a: ExtReal) -> Result<GrowthExponent> {
    check_alpha(alpha)?;
    let theta = theta_a(q_a)?;
    if let Some(a0) = alpha_0(q_a)? {
        if alpha < a0 {
            return Ok(GrowthExponent::Unbounded);
        }
        if alpha == a0 {
            return Ok(GrowthExponent::AnyFinite);
        }
    }
    let ta = theta * alpha;
    if ta <= 1.0 {
        return Err(Error::Inconsistency(format!(
            "theta_A * alpha = {ta} <= 1 although alpha is above the critical order"
        )));
    }
    Ok(GrowthExponent::Finite { r_star: ta / (ta - 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
}

/// Regime of the semilinear problem for a given operator and time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub case: Case,
    pub subcritical: bool,
    pub alpha0: Option<f64>,
    pub theta_a: f64,
    pub q_a: ExtReal,
    pub growth: GrowthExponent,
    pub gamma: f64,
    pub p_range_sup: f64,
    /// Set when the supercritical interval `[α₀, 2)` is empty.
    pub note: Option<String>,
}

pub fn classify(op: &Operator, alpha: f64) -> Result<Regime> {
    classify_q(op.q_a(), alpha)
}

pub fn classify_q(q_a: ExtReal, alpha: f64) -> Result<Regime> {
    check_alpha(alpha)?;
    let theta = theta_a(q_a)?;
    let alpha0 = alpha_0(q_a)?;
    let growth = growth_exponent(alpha, q_a)?;
    let case = if alpha0.is_some() { Case::I } else { Case::II };
    let subcritical = matches!(alpha0, Some(a0) if alpha < a0);
    let note = (alpha0 == Some(2.0)).then(|| "alpha0 = 2: every alpha in (1, 2) is subcritical".to_string());
    Ok(Regime {
        case,
        subcritical,
        alpha0,
        theta_a: theta,
        q_a,
        growth,
        gamma: 1.0 / alpha,
        p_range_sup: 1.0 / (2.0 - alpha),
        note,
    })
}

/// Operator families whose embedding exponents are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DirichletLaplacian,
    /// Spectral or restricted fractional Laplacian of order `s`.
    FractionalLaplacian,
    /// Wentzell operator with `δ = 0`, posed on the closure with surface measure.
    WentzellDelta0,
    /// Wentzell operator with `δ = 1`.
    WentzellDelta1,
    DirichletToNeumann,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::DirichletLaplacian,
        Family::FractionalLaplacian,
        Family::WentzellDelta0,
        Family::WentzellDelta1,
        Family::DirichletToNeumann,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Family::DirichletLaplacian => "dirichlet_laplacian",
            Family::FractionalLaplacian => "fractional_laplacian",
            Family::WentzellDelta0 => "wentzell_delta0",
            Family::WentzellDelta1 => "wentzell_delta1",
            Family::DirichletToNeumann => "dirichlet_to_neumann",
        }
    }
}

/// `q_A` of a family in dimension `d`; `s` is only read by the fractional
/// Laplacian and `q` is the user's choice in the borderline dimension.
pub fn table_q_a(family: Family, d: usize, s: f64, q: f64) -> Result<ExtReal> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Domain(format!("borderline exponent q must be finite and > 1, got {q}")));
    }
    let df = d as f64;
    Ok(match family {
        Family::DirichletLaplacian | Family::WentzellDelta1 => match d {
            1 => ExtReal::Infinity,
            2 => ExtReal::Finite(q),
            _ => ExtReal::Finite(df / (df - 2.0)),
        },
        Family::FractionalLaplacian => {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Domain(format!("s must lie in (0, 1), got {s}")));
            }
            if df < 2.0 * s {
                ExtReal::Infinity
            } else if df == 2.0 * s {
                ExtReal::Finite(q)
            } else {
                ExtReal::Finite(df / (df - 2.0 * s))
            }
        }
        Family::WentzellDelta0 | Family::DirichletToNeumann => match d {
            1 => ExtReal::Infinity,
            2 => ExtReal::Finite(q),
            _ => ExtReal::Finite((df - 1.0) / (df - 2.0)),
        },
    })
}

/// One row of the exponent table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub family: Family,
    pub d: usize,
    pub s: Option<f64>,
    pub q_a: ExtReal,
    pub theta_a: f64,
    pub alpha0: Option<f64>,
}

pub fn table_row(family: Family, d: usize, s: f64, q: f64) -> Result<TableRow> {
    let q_a = table_q_a(family, d, s, q)?;
    Ok(TableRow {
        family,
        d,
        s: (family == Family::FractionalLaplacian).then_some(s),
        q_a,
        theta_a: theta_a(q_a)?,
        alpha0: alpha_0(q_a)?,
    })
}

/// Rows for `d = 1..=max_d` of every family, the fractional Laplacian at each listed `s`.
pub fn exponent_table(max_d: usize, s_values: &[f64], q: f64) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for family in Family::ALL {
        let ss: Vec<f64> = if family == Family::FractionalLaplacian { s_values.to_vec() } else { vec![1.0] };
        for &s in &ss {
            for d in 1..=max_d {
                rows.push(table_row(family, d, s, q)?);
            }
        }
    }
    Ok(rows)
}
