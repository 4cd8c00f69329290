//! Operators with closed-form eigenpairs, fields in coefficient space, and the
//! quadrature that moves between physical and coefficient space.
//!
//! Modes are indexed from 0 throughout: mode `k` is `φ_{k+1}` in one-based notation.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_EMBEDDING_Q: f64 = 4.0;
/// Number of modes precomputed by [`make_operator`].
pub const DEFAULT_CAPACITY: usize = 4096;

/// Each Gauss-Legendre panel covers this many oscillations of the highest
/// mode and carries at least four nodes per mode index.
const MODES_PER_PANEL: usize = 8;

fn default_q() -> f64 {
    DEFAULT_EMBEDDING_Q
}

/// A real number or `+∞`, used for the embedding exponent `q_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(ExtReal::Infinity),
            t => t
                .parse::<f64>()
                .map(ExtReal::from)
                .map_err(|_| Error::Domain(format!("cannot read '{s}' as a number or 'inf'"))),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::from(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Catalog entry describing an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpecConfig {
    /// `−d²/dx²` on `(0, length)` with zero boundary values.
    DirichletLaplacianInterval { length: f64 },
    /// `−Δ` on `Π (0, L_i)` with zero boundary values.
    DirichletLaplacianBox {
        lengths: Vec<f64>,
        #[serde(default = "default_q")]
        embedding_q: f64,
    },
    /// `−Δ + ε` on a box with zero normal derivative.
    NeumannLaplacianShifted {
        lengths: Vec<f64>,
        shift: f64,
        #[serde(default = "default_q")]
        embedding_q: f64,
    },
    /// Spectral power `L^s` of a Laplacian entry.
    SpectralFractionalPower {
        s: f64,
        base: Box<OperatorSpecConfig>,
        #[serde(default = "default_q")]
        embedding_q: f64,
    },
}

impl OperatorSpecConfig {
    pub fn validate(&self) -> Result<()> {
        let check_lengths = |ls: &[f64]| -> Result<()> {
            if ls.is_empty() {
                return Err(Error::Config("box needs at least one side length".into()));
            }
            if let Some(l) = ls.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                return Err(Error::Config(format!("side lengths must be positive, got {l}")));
            }
            Ok(())
        };
        let check_q = |q: f64| -> Result<()> {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::Config(format!("embedding_q must be a finite number > 1, got {q}")));
            }
            Ok(())
        };
        match self {
            Self::DirichletLaplacianInterval { length } => check_lengths(&[*length]),
            Self::DirichletLaplacianBox { lengths, embedding_q } => {
                check_lengths(lengths)?;
                check_q(*embedding_q)
            }
            Self::NeumannLaplacianShifted { lengths, shift, embedding_q } => {
                check_lengths(lengths)?;
                check_q(*embedding_q)?;
                if !(*shift > 0.0 && shift.is_finite()) {
                    return Err(Error::Config(format!("shift must be positive, got {shift}")));
                }
                Ok(())
            }
            Self::SpectralFractionalPower { s, base, embedding_q } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(Error::Config(format!("power s must lie in (0, 1), got {s}")));
                }
                check_q(*embedding_q)?;
                if matches!(**base, Self::SpectralFractionalPower { .. }) {
                    return Err(Error::Config("the base of a fractional power must be a Laplacian".into()));
                }
                base.validate()
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::DirichletLaplacianInterval { .. } => 1,
            Self::DirichletLaplacianBox { lengths, .. } | Self::NeumannLaplacianShifted { lengths, .. } => {
                lengths.len()
            }
            Self::SpectralFractionalPower { base, .. } => base.dim(),
        }
    }
}

/// Embedding exponent of `V_{1/2} ↪ L^{2 q_A}` for a catalog operator.
pub fn q_a_of(cfg: &OperatorSpecConfig) -> ExtReal {
    let laplacian = |d: usize, q: f64| match d {
        1 => ExtReal::Infinity,
        2 => ExtReal::Finite(q),
        _ => ExtReal::Finite(d as f64 / (d as f64 - 2.0)),
    };
    match cfg {
        OperatorSpecConfig::DirichletLaplacianInterval { .. } => ExtReal::Infinity,
        OperatorSpecConfig::DirichletLaplacianBox { lengths, embedding_q } => laplacian(lengths.len(), *embedding_q),
        OperatorSpecConfig::NeumannLaplacianShifted { lengths, embedding_q, .. } => {
            laplacian(lengths.len(), *embedding_q)
        }
        OperatorSpecConfig::SpectralFractionalPower { s, base, embedding_q } => {
            let d = base.dim() as f64;
            if d < 2.0 * s {
                ExtReal::Infinity
            } else if d == 2.0 * s {
                ExtReal::Finite(*embedding_q)
            } else {
                ExtReal::Finite(d / (d - 2.0 * s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone)]
struct Mode {
    index: Vec<u32>,
    lambda: f64,
}

/// Self-adjoint operator given by its first `capacity` eigenpairs.
#[derive(Debug, Clone)]
pub struct Operator {
    name: String,
    config: OperatorSpecConfig,
    boundary: Boundary,
    lengths: Vec<f64>,
    q_a: ExtReal,
    modes: Vec<Mode>,
}

pub fn make_operator(cfg: &OperatorSpecConfig) -> Result<Operator> {
    make_operator_with_capacity(cfg, DEFAULT_CAPACITY)
}

pub fn make_operator_with_capacity(cfg: &OperatorSpecConfig, capacity: usize) -> Result<Operator> {
    cfg.validate()?;
    if capacity == 0 {
        return Err(Error::Config("operator capacity must be at least 1".into()));
    }
    let (base, power) = match cfg {
        OperatorSpecConfig::SpectralFractionalPower { s, base, .. } => (&**base, *s),
        other => (other, 1.0),
    };
    let (boundary, lengths, shift) = match base {
        OperatorSpecConfig::DirichletLaplacianInterval { length } => (Boundary::Dirichlet, vec![*length], 0.0),
        OperatorSpecConfig::DirichletLaplacianBox { lengths, .. } => (Boundary::Dirichlet, lengths.clone(), 0.0),
        OperatorSpecConfig::NeumannLaplacianShifted { lengths, shift, .. } => {
            (Boundary::Neumann, lengths.clone(), *shift)
        }
        OperatorSpecConfig::SpectralFractionalPower { .. } => unreachable!("rejected by validate"),
    };
    let mut modes = enumerate_modes(boundary, &lengths, shift, capacity);
    if power != 1.0 {
        for m in &mut modes {
            m.lambda = m.lambda.powf(power);
        }
    }
    let name = match cfg {
        OperatorSpecConfig::DirichletLaplacianInterval { .. } => "dirichlet_laplacian_interval".to_string(),
        OperatorSpecConfig::DirichletLaplacianBox { .. } => "dirichlet_laplacian_box".to_string(),
        OperatorSpecConfig::NeumannLaplacianShifted { .. } => "neumann_laplacian_shifted".to_string(),
        OperatorSpecConfig::SpectralFractionalPower { s, .. } => format!("spectral_fractional_power_{s}"),
    };
    Ok(Operator { name, config: cfg.clone(), boundary, lengths, q_a: q_a_of(cfg), modes })
}

/// The `capacity` smallest eigenvalues of the box Laplacian, ties broken by
/// the lexicographic order of the multi-index.
fn enumerate_modes(boundary: Boundary, lengths: &[f64], shift: f64, capacity: usize) -> Vec<Mode> {
    let d = lengths.len();
    let first: u32 = match boundary {
        Boundary::Dirichlet => 1,
        Boundary::Neumann => 0,
    };
    let scale: Vec<f64> = lengths.iter().map(|l| (std::f64::consts::PI / l).powi(2)).collect();
    let lambda = |idx: &[u32]| -> f64 {
        let mut acc = shift;
        for (i, &n) in idx.iter().enumerate() {
            acc += (n as f64) * (n as f64) * scale[i];
        }
        acc
    };

    let mut per_axis = (capacity as f64).powf(1.0 / d as f64).ceil() as u32 + 1;
    loop {
        // any index with a component ≥ first + per_axis lies above this bound
        let bound = scale.iter().map(|s| ((first + per_axis) as f64).powi(2) * s).fold(f64::INFINITY, f64::min)
            + shift;
        let mut modes = Vec::new();
        let mut idx = vec![first; d];
        'outer: loop {
            let l = lambda(&idx);
            if l < bound {
                modes.push(Mode { index: idx.clone(), lambda: l });
            }
            for axis in (0..d).rev() {
                if idx[axis] + 1 < first + per_axis {
                    idx[axis] += 1;
                    continue 'outer;
                }
                idx[axis] = first;
            }
            break;
        }
        if modes.len() >= capacity {
            modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then_with(|| a.index.cmp(&b.index)));
            modes.truncate(capacity);
            return modes;
        }
        per_axis *= 2;
    }
}

impl Operator {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &OperatorSpecConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    /// Number of precomputed modes.
    pub fn capacity(&self) -> usize {
        self.modes.len()
    }

    pub fn q_a(&self) -> ExtReal {
        self.q_a
    }

    /// Coordinate bounds `[0, L_i]` of the domain.
    pub fn domain_box(&self) -> Vec<(f64, f64)> {
        self.lengths.iter().map(|&l| (0.0, l)).collect()
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.modes[k].lambda
    }

    pub fn eigenvalues(&self, n: usize) -> Vec<f64> {
        self.modes[..n].iter().map(|m| m.lambda).collect()
    }

    /// Multi-index of mode `k` (starting at 1 per axis for Dirichlet, 0 for Neumann).
    pub fn multi_index(&self, k: usize) -> &[u32] {
        &self.modes[k].index
    }

    pub fn eigenfunction(&self, k: usize, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (axis, &n) in self.modes[k].index.iter().enumerate() {
            v *= self.axis_factor(axis, n, x[axis]);
        }
        v
    }

    fn axis_factor(&self, axis: usize, n: u32, x: f64) -> f64 {
        let l = self.lengths[axis];
        let arg = n as f64 * std::f64::consts::PI * x / l;
        match self.boundary {
            Boundary::Dirichlet => (2.0 / l).sqrt() * arg.sin(),
            Boundary::Neumann if n == 0 => (1.0 / l).sqrt(),
            Boundary::Neumann => (2.0 / l).sqrt() * arg.cos(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lengths).all(|(&xi, &l)| (0.0..=l).contains(&xi))
    }

    fn check_modes(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.capacity() {
            return Err(Error::Domain(format!(
                "truncation order must lie in 1..={}, got {n}",
                self.capacity()
            )));
        }
        Ok(())
    }

    /// Largest per-axis index among the first `n` modes.
    pub fn max_axis_index(&self, n: usize) -> usize {
        self.modes[..n].iter().flat_map(|m| m.index.iter()).map(|&i| i as usize).max().unwrap_or(1).max(1)
    }
}

/// A function expanded in the first `N` eigenfunctions of an operator.
#[derive(Debug, Clone)]
pub struct SpectralField {
    op: Arc<Operator>,
    coeffs: Vec<f64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.op, &other.op) || self.op.config == other.op.config) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn new(op: Arc<Operator>, coeffs: Vec<f64>) -> Result<Self> {
        op.check_modes(coeffs.len())?;
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient {} is not finite", i + 1)));
        }
        Ok(Self { op, coeffs })
    }

    pub fn zeros(op: Arc<Operator>, n: usize) -> Result<Self> {
        Self::new(op, vec![0.0; n])
    }

    /// Exact combination `Σ c φ_k` of the listed modes.
    pub fn from_modes(op: Arc<Operator>, n: usize, modes: &[(usize, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; n];
        for &(k, c) in modes {
            if k >= n {
                return Err(Error::Domain(format!("mode {k} outside truncation {n}")));
            }
            coeffs[k] += c;
        }
        Self::new(op, coeffs)
    }

    pub fn op(&self) -> &Arc<Operator> {
        &self.op
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        evaluate(self, x)
    }

    pub fn frac_norm(&self, theta: f64) -> f64 {
        frac_norm(self, theta)
    }
}

/// `Σ_k c_k φ_k(x)`, summed in ascending `k`.
pub fn evaluate(field: &SpectralField, x: &[f64]) -> Result<f64> {
    if !field.op.contains(x) {
        return Err(Error::Domain(format!("point {x:?} lies outside the domain {:?}", field.op.domain_box())));
    }
    Ok(field.coeffs.iter().enumerate().map(|(k, c)| c * field.op.eigenfunction(k, x)).sum())
}

/// `(Σ λ_k^{2θ} c_k²)^{1/2}`; negative `θ` gives the dual norm.
pub fn frac_norm(field: &SpectralField, theta: f64) -> f64 {
    coeff_norm(&field.op.modes[..field.coeffs.len()], &field.coeffs, theta)
}

/// Fractional norm of a raw coefficient vector against the first modes of `op`.
pub fn frac_norm_coeffs(op: &Operator, coeffs: &[f64], theta: f64) -> f64 {
    coeff_norm(&op.modes[..coeffs.len()], coeffs, theta)
}

fn coeff_norm(modes: &[Mode], coeffs: &[f64], theta: f64) -> f64 {
    let mut acc = 0.0;
    for (m, c) in modes.iter().zip(coeffs) {
        let w = if theta == 0.0 { 1.0 } else { m.lambda.powf(theta) };
        acc += (w * c) * (w * c);
    }
    acc.sqrt()
}

/// Tensor composite Gauss-Legendre grid on the operator's domain together
/// with the first `N` eigenfunctions sampled at its nodes.
#[derive(Debug, Clone)]
pub struct Collocation {
    op: Arc<Operator>,
    n_modes: usize,
    per_axis: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// `basis[q * n_modes + k] = φ_k(x_q)`
    basis: Vec<f64>,
}

impl Collocation {
    /// `quad_points` is the node count per axis; it must be at least four
    /// times the largest per-axis mode index among the first `n_modes`.
    /// Small requests are rounded up to one full panel.
    pub fn new(op: Arc<Operator>, n_modes: usize, quad_points: usize) -> Result<Self> {
        op.check_modes(n_modes)?;
        let m = op.max_axis_index(n_modes);
        if quad_points < 4 * m {
            return Err(Error::Precondition(format!(
                "{quad_points} quadrature points per axis cannot resolve mode index {m} (need at least {})",
                4 * m
            )));
        }
        let panels = m.div_ceil(MODES_PER_PANEL);
        let per_panel = quad_points.div_ceil(panels).max(4 * MODES_PER_PANEL);
        let rule = GaussLegendre::new(NonZeroUsize::new(per_panel).expect("nonzero"));
        let axes: Vec<(Vec<f64>, Vec<f64>)> = op
            .lengths
            .iter()
            .map(|&l| {
                let h = l / panels as f64;
                let mut xs = Vec::with_capacity(panels * per_panel);
                let mut ws = Vec::with_capacity(panels * per_panel);
                for p in 0..panels {
                    let a = p as f64 * h;
                    for &(node, weight) in rule.as_node_weight_pairs() {
                        xs.push(a + 0.5 * h * (node + 1.0));
                        ws.push(0.5 * h * weight);
                    }
                }
                (xs, ws)
            })
            .collect();

        let d = op.dim();
        let total: usize = axes.iter().map(|a| a.0.len()).product();
        let mut points = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        'outer: loop {
            let mut w = 1.0;
            for axis in 0..d {
                points.push(axes[axis].0[idx[axis]]);
                w *= axes[axis].1[idx[axis]];
            }
            weights.push(w);
            for axis in (0..d).rev() {
                if idx[axis] + 1 < axes[axis].0.len() {
                    idx[axis] += 1;
                    continue 'outer;
                }
                idx[axis] = 0;
            }
            break;
        }

        let mut basis = Vec::with_capacity(total * n_modes);
        for q in 0..total {
            let x = &points[q * d..(q + 1) * d];
            for k in 0..n_modes {
                basis.push(op.eigenfunction(k, x));
            }
        }
        Ok(Self { op, n_modes, per_axis: panels * per_panel, points, weights, basis })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Nodes actually used per axis (at least the requested count).
    pub fn nodes_per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        let d = self.op.dim();
        &self.points[q * d..(q + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Values at the nodes of the expansion with the given coefficients.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_modes;
        (0..self.n_points())
            .map(|q| {
                let row = &self.basis[q * n..(q + 1) * n];
                row.iter().zip(coeffs).map(|(p, c)| p * c).sum()
            })
            .collect()
    }

    /// `c_k = Σ_q w_q g(x_q) φ_k(x_q)`.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n_modes;
        let mut out = vec![0.0; n];
        for (q, (&g, &w)) in values.iter().zip(&self.weights).enumerate() {
            let gw = g * w;
            if gw == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&self.basis[q * n..(q + 1) * n]) {
                *o += gw * p;
            }
        }
        out
    }

    /// Gram matrix `∫ φ_j φ_k` under the grid, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n_modes;
        let mut g = vec![0.0; n * n];
        for (q, &w) in self.weights.iter().enumerate() {
            let row = &self.basis[q * n..(q + 1) * n];
            for j in 0..n {
                let wj = w * row[j];
                for k in 0..n {
                    g[j * n + k] += wj * row[k];
                }
            }
        }
        g
    }
}

/// Result of projecting a function onto the eigenbasis.
#[derive(Debug, Clone)]
pub struct Projection {
    pub field: SpectralField,
    /// Largest coefficient change when the quadrature is doubled.
    pub aliasing_estimate: f64,
    pub warning: Option<String>,
}

/// Coefficients `c_k = ∫ g φ_k` for `k < n`, by composite Gauss-Legendre
/// quadrature with `quad_points` nodes per axis. The same projection on a
/// doubled grid gives the aliasing estimate.
pub fn project<G>(op: Arc<Operator>, g: G, n: usize, quad_points: usize) -> Result<Projection>
where
    G: Fn(&[f64]) -> f64,
{
    let tol = 1e-10;
    let coarse = Collocation::new(op.clone(), n, quad_points)?;
    let fine = Collocation::new(op.clone(), n, 2 * coarse.nodes_per_axis())?;
    let sample = |c: &Collocation| -> Vec<f64> { (0..c.n_points()).map(|q| g(c.point(q))).collect() };
    let c1 = coarse.analyze(&sample(&coarse));
    let c2 = fine.analyze(&sample(&fine));
    let aliasing = c1.iter().zip(&c2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = c2.iter().map(|c| c.abs()).fold(1.0, f64::max);
    let warning = (aliasing > tol * scale).then(|| {
        format!("projection under-resolved: coefficients move by {aliasing:.3e} when the quadrature is doubled")
    });
    Ok(Projection { field: SpectralField::new(op, c1)?, aliasing_estimate: aliasing, warning })
}
