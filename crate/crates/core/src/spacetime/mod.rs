//! Spacetime models: a Lorentzian metric and a potential on a single chart.

mod builtins;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::{parse_expr, BinOp, Expression, Func, Node};

pub use builtins::{build_spacetime, Base, Builtin, CustomTable, SpacetimeSpec};

/// Index into the packed upper triangle of an n x n symmetric array.
pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

/// Synthetic dimension N of the Bakry-Emery tensor. `N = n` cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticDimension {
    value: Option<f64>,
    n: usize,
}

impl SyntheticDimension {
    pub fn finite(value: f64, n: usize) -> Result<Self> {
        if !value.is_finite() {
            return Err(GeometryError::Invalid(format!("finite N must be a real number, got {value}")));
        }
        if value == n as f64 {
            return Err(GeometryError::ExcludedDimension(value));
        }
        Ok(Self { value: Some(value), n })
    }

    pub fn infinite(n: usize) -> Self {
        Self { value: None, n }
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn chart_dim(&self) -> usize {
        self.n
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_none()
    }

    /// Coefficient of df⊗df in Ric_f^N, i.e. -1/(N-n), zero at infinity.
    pub fn df_coefficient(&self) -> f64 {
        match self.value {
            Some(v) => -1.0 / (v - self.n as f64),
            None => 0.0,
        }
    }

    /// (N-a)/(N-n), with limit 1 at infinity. Exactly zero when N = a.
    pub fn shifted_ratio(&self, a: f64) -> f64 {
        match self.value {
            Some(v) => (v - a) / (v - self.n as f64),
            None => 1.0,
        }
    }

    /// N in [-inf, a] (the infinite point included) or N in (n, inf).
    pub fn in_focusing_range(&self, a: f64) -> bool {
        match self.value {
            None => true,
            Some(v) => v <= a || v > self.n as f64,
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(GeometryError::CoordinateCount { expected: n, got: self.n });
        }
        Ok(())
    }
}

impl std::fmt::Display for SyntheticDimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.value {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, components: Vec<f64>) -> Result<Self> {
        if base.len() != components.len() {
            return Err(GeometryError::CoordinateCount { expected: base.len(), got: components.len() });
        }
        Ok(Self { base, components })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalCharacter {
    Timelike,
    Null,
    Spacelike,
}

impl CausalCharacter {
    pub fn name(self) -> &'static str {
        match self {
            CausalCharacter::Timelike => "timelike",
            CausalCharacter::Null => "null",
            CausalCharacter::Spacelike => "spacelike",
        }
    }
}

pub fn classify_vector(g: &DMatrix<f64>, v: &[f64], tol: f64) -> Result<CausalCharacter> {
    if v.iter().all(|x| *x == 0.0) {
        return Err(GeometryError::ZeroVector);
    }
    let q = inner(g, v, v);
    Ok(if q < -tol {
        CausalCharacter::Timelike
    } else if q.abs() <= tol {
        CausalCharacter::Null
    } else {
        CausalCharacter::Spacelike
    })
}

pub(crate) fn inner(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            s += u[i] * g[(i, j)] * v[j];
        }
    }
    s
}

/// Twisted product -dt^2 + e^{2f/(n-1)} ĥ with ĥ independent of t; warped when f depends on t only.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductStructure {
    /// Packed upper triangle of ĥ over the spatial coordinates 1..n, as chart expressions.
    pub base: Vec<Expression>,
    pub twist: Expression,
}

impl ProductStructure {
    pub fn is_warped(&self) -> bool {
        (1..self.twist.dim()).all(|k| !self.twist.depends_on(k))
    }

    pub fn base_component(&self, a: usize, b: usize) -> &Expression {
        let m = self.twist.dim() - 1;
        &self.base[packed(m, a, b)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeModel {
    pub name: String,
    coords: Vec<String>,
    metric: Vec<Expression>,
    potential: Expression,
    domain: Vec<(f64, f64)>,
    product: Option<ProductStructure>,
}

/// Metric, inverse and coordinate derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `dg[k]` = ∂_k g.
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[k * n + l]` = ∂_k ∂_l g.
    pub ddg: Vec<DMatrix<f64>>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        inner(&self.g, u, v)
    }

    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.g_inv[(i, j)] * w[j]).sum()).collect()
    }

    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.g[(i, j)] * v[j]).sum()).collect()
    }
}

impl SpacetimeModel {
    /// Assemble and validate a model. `metric` is the packed upper triangle.
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        metric: Vec<Expression>,
        potential: Expression,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall { what: "a spacetime chart", min: 2, n });
        }
        if metric.len() != n * (n + 1) / 2 {
            return Err(GeometryError::CoordinateCount { expected: n * (n + 1) / 2, got: metric.len() });
        }
        if domain.len() != n {
            return Err(GeometryError::CoordinateCount { expected: n, got: domain.len() });
        }
        if let Some((lo, hi)) = domain.iter().find(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less)) {
            return Err(GeometryError::Invalid(format!("empty domain interval ({lo}, {hi})")));
        }
        let model = Self { name: name.into(), coords, metric, potential, domain, product: None };
        model.validate_signature(100, 0x5157_4e41)?;
        Ok(model)
    }

    pub(crate) fn with_product(mut self, product: ProductStructure) -> Self {
        self.product = Some(product);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn potential(&self) -> &Expression {
        &self.potential
    }

    pub fn product(&self) -> Option<&ProductStructure> {
        self.product.as_ref()
    }

    pub fn component(&self, i: usize, j: usize) -> &Expression {
        &self.metric[packed(self.dim(), i, j)]
    }

    /// Replace the potential. A product structure is kept only if the new potential is its twist.
    pub fn with_potential(mut self, source: &str) -> Result<Self> {
        let f = parse_expr(source, &self.coords)?;
        if self.product.as_ref().is_some_and(|p| p.twist != f) {
            self.product = None;
        }
        self.potential = f;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.dim() {
            return Err(GeometryError::CoordinateCount { expected: self.dim(), got: domain.len() });
        }
        self.domain = domain;
        self.validate_signature(100, 0x5157_4e41)?;
        Ok(self)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.domain).all(|(x, (lo, hi))| x > lo && x < hi)
    }

    /// Uniform random interior point of the domain hint.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect()
    }

    pub fn metric_matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.component(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(GeometryError::CoordinateCount { expected: self.dim(), got: p.len() });
        }
        Ok(())
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<MetricJet> {
        self.check_point(p)?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        let mut ddg = vec![DMatrix::zeros(n, n); n * n];
        for i in 0..n {
            for j in i..n {
                let expr = self.component(i, j);
                if expr.is_zero_literal() {
                    continue;
                }
                let jet = expr.jet(p)?;
                g[(i, j)] = jet.value;
                g[(j, i)] = jet.value;
                for k in 0..n {
                    dg[k][(i, j)] = jet.gradient[k];
                    dg[k][(j, i)] = jet.gradient[k];
                    for l in 0..n {
                        let h = jet.hessian(k, l);
                        ddg[k * n + l][(i, j)] = h;
                        ddg[k * n + l][(j, i)] = h;
                    }
                }
            }
        }
        let g_inv = g.clone().try_inverse().ok_or_else(|| GeometryError::Degenerate(p.to_vec()))?;
        Ok(MetricJet { g, g_inv, dg, ddg })
    }

    /// Check signature (-,+,...,+) at `count` seeded sample points of the domain hint.
    pub fn validate_signature(&self, count: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let p = self.sample_point(&mut rng);
            self.check_signature_at(&p)?;
        }
        Ok(())
    }

    pub fn check_signature_at(&self, p: &[f64]) -> Result<()> {
        let g = self.metric_matrix(p)?;
        let eig = SymmetricEigen::new(g).eigenvalues;
        // Signature is scale invariant; conformal factors can shrink the whole metric.
        let tol = 1e-10 * eig.amax();
        let negative = eig.iter().filter(|l| **l < -tol).count();
        let degenerate = !tol.is_finite() || eig.iter().any(|l| l.abs() <= tol);
        if negative != 1 || degenerate {
            return Err(GeometryError::Signature { point: p.to_vec(), eigenvalues: eig.iter().copied().collect() });
        }
        Ok(())
    }
}

/// Rescale the metric to e^{-2f/(n-2)} g and zero the potential.
pub fn conformal_rescale(model: &SpacetimeModel) -> Result<SpacetimeModel> {
    let n = model.dim();
    if n < 3 {
        return Err(GeometryError::DimensionTooSmall { what: "conformal rescaling", min: 3, n });
    }
    let coords = model.coords().to_vec();
    let f = model.potential();
    let metric = if f.is_zero_literal() {
        model.metric.clone()
    } else {
        let exponent = Node::binary(
            BinOp::Div,
            Node::binary(BinOp::Mul, Node::Num(-2.0), f.root().clone()),
            Node::Num((n - 2) as f64),
        );
        let factor = Expression::from_node(Node::call(Func::Exp, exponent), &coords);
        model
            .metric
            .iter()
            .map(|c| if c.is_zero_literal() { c.clone() } else { factor.times(c) })
            .collect()
    };
    SpacetimeModel::new(
        format!("conformal({})", model.name),
        coords.clone(),
        metric,
        Expression::constant(0.0, &coords),
        model.domain.clone(),
    )
}
