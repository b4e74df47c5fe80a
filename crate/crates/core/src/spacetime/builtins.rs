//! Catalog of test spacetimes and the custom component-table constructor.

use std::f64::consts::PI;

use super::{packed, ProductStructure, SpacetimeModel};
use crate::error::{GeometryError, Result};
use crate::expr::{parse_expr, Expression};

const POLAR: (f64, f64) = (0.1, PI - 0.1);
const AZIMUTH: (f64, f64) = (-3.0, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Flat,
    Round,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Minkowski { n: usize },
    MinkowskiWithF { n: usize, f: String },
    DeSitter { n: usize },
    AntiDeSitter { n: usize },
    EinsteinStatic { n: usize },
    /// -dt^2 + e^{2F(t)/(n-1)} h
    WarpedProduct { n: usize, warp: String, base: Base },
    /// -dt^2 + e^{2f/(n-1)} ĥ
    TwistedProduct { n: usize, twist: String, base: Base },
}

impl Builtin {
    pub const CATALOG: [(&'static str, &'static str); 7] = [
        ("minkowski", "minkowski(n): flat, f = 0"),
        ("minkowski_with_f", "minkowski_with_f(n, f): flat metric with potential f"),
        ("de_sitter", "de_sitter(n): -dt^2 + cosh(t)^2 dOmega_{n-1}^2, Ric = (n-1) g"),
        ("anti_de_sitter", "anti_de_sitter(n): -cosh(r)^2 dt^2 + dr^2 + sinh(r)^2 dOmega_{n-2}^2, Ric = -(n-1) g"),
        ("einstein_static", "einstein_static(n): -dt^2 + dOmega_{n-1}^2"),
        ("warped_product", "warped_product(n, F, flat|round): -dt^2 + exp(2F(t)/(n-1)) h, f = F"),
        ("twisted_product", "twisted_product(n, f, flat|round): -dt^2 + exp(2f/(n-1)) h, f = f(t, y)"),
    ];

    pub fn dim(&self) -> usize {
        match self {
            Builtin::Minkowski { n }
            | Builtin::MinkowskiWithF { n, .. }
            | Builtin::DeSitter { n }
            | Builtin::AntiDeSitter { n }
            | Builtin::EinsteinStatic { n }
            | Builtin::WarpedProduct { n, .. }
            | Builtin::TwistedProduct { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable {
    pub name: String,
    pub coords: Vec<String>,
    /// Components (i, j, expression); unlisted components are zero, (j, i) mirrors (i, j).
    pub components: Vec<(usize, usize, String)>,
    pub potential: String,
    pub domain: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpacetimeSpec {
    Builtin(Builtin),
    Custom(CustomTable),
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn cartesian_coords(n: usize) -> Vec<String> {
    if n == 4 {
        return names(&["t", "x", "y", "z"]);
    }
    std::iter::once("t".to_string()).chain((1..n).map(|k| format!("x{k}"))).collect()
}

fn angle_names(m: usize) -> Vec<String> {
    match m {
        1 => names(&["phi"]),
        2 => names(&["theta", "phi"]),
        3 => names(&["chi", "theta", "phi"]),
        _ => (1..=m).map(|k| format!("a{k}")).collect(),
    }
}

/// Diagonal coefficients of the unit round metric on S^m in hyperspherical angles.
fn sphere_factors(angles: &[String]) -> Vec<String> {
    (0..angles.len())
        .map(|k| {
            if k == 0 {
                "1".to_string()
            } else {
                angles[..k].iter().map(|a| format!("sin({a})^2")).collect::<Vec<_>>().join("*")
            }
        })
        .collect()
}

fn sphere_domain(m: usize) -> Vec<(f64, f64)> {
    (0..m).map(|k| if k + 1 == m { AZIMUTH } else { POLAR }).collect()
}

fn scaled(factor: &str, base: &str) -> String {
    match (factor, base) {
        ("1", b) => b.to_string(),
        (f, "1") => f.to_string(),
        (f, b) => format!("{f}*{b}"),
    }
}

/// Build a model from diagonal component strings.
fn diagonal(
    name: String,
    coords: Vec<String>,
    diag: &[String],
    potential: &str,
    domain: Vec<(f64, f64)>,
) -> Result<SpacetimeModel> {
    let n = coords.len();
    let mut metric = vec![Expression::constant(0.0, &coords); n * (n + 1) / 2];
    for (i, src) in diag.iter().enumerate() {
        metric[packed(n, i, i)] = parse_expr(src, &coords)?;
    }
    let f = parse_expr(potential, &coords)?;
    SpacetimeModel::new(name, coords, metric, f, domain)
}

fn require(n: usize, min: usize, what: &'static str) -> Result<()> {
    if n < min {
        return Err(GeometryError::DimensionTooSmall { what, min, n });
    }
    Ok(())
}

fn flat(n: usize, f: &str, name: String) -> Result<SpacetimeModel> {
    require(n, 2, "minkowski")?;
    let coords = cartesian_coords(n);
    let diag: Vec<String> = (0..n).map(|i| if i == 0 { "-1".into() } else { "1".into() }).collect();
    diagonal(name, coords, &diag, f, vec![(-10.0, 10.0); n])
}

fn product(n: usize, twist: &str, base: Base, warped: bool) -> Result<SpacetimeModel> {
    require(n, 2, "a product spacetime")?;
    let coords: Vec<String> = std::iter::once("t".to_string()).chain((1..n).map(|k| format!("y{k}"))).collect();
    let m = n - 1;
    let base_diag: Vec<String> = match base {
        Base::Flat => vec!["1".to_string(); m],
        Base::Round => sphere_factors(&coords[1..]),
    };
    let f = parse_expr(twist, &coords)?;
    if warped && (1..n).any(|k| f.depends_on(k)) {
        return Err(GeometryError::Invalid(format!("warp function '{twist}' must depend on t only")));
    }
    let warp = format!("exp(2*({twist})/{m})");
    let mut diag = vec!["-1".to_string()];
    diag.extend(base_diag.iter().map(|b| scaled(&warp, b)));
    let mut domain = vec![(-2.0, 2.0)];
    domain.extend(match base {
        Base::Flat => vec![(-2.0, 2.0); m],
        Base::Round => sphere_domain(m),
    });
    let kind = if warped { "warped_product" } else { "twisted_product" };
    let base_name = if base == Base::Flat { "flat" } else { "round" };
    let model = diagonal(format!("{kind}({n}, {twist}, {base_name})"), coords.clone(), &diag, twist, domain)?;
    let mut packed_base = vec![Expression::constant(0.0, &coords); m * (m + 1) / 2];
    for (a, src) in base_diag.iter().enumerate() {
        packed_base[packed(m, a, a)] = parse_expr(src, &coords)?;
    }
    Ok(model.with_product(ProductStructure { base: packed_base, twist: f }))
}

pub fn build_spacetime(spec: &SpacetimeSpec) -> Result<SpacetimeModel> {
    match spec {
        SpacetimeSpec::Builtin(b) => build_builtin(b),
        SpacetimeSpec::Custom(table) => build_custom(table),
    }
}

fn build_builtin(b: &Builtin) -> Result<SpacetimeModel> {
    match b {
        Builtin::Minkowski { n } => flat(*n, "0", format!("minkowski({n})")),
        Builtin::MinkowskiWithF { n, f } => flat(*n, f, format!("minkowski_with_f({n}, {f})")),
        Builtin::DeSitter { n } => {
            require(*n, 2, "de_sitter")?;
            let angles = angle_names(n - 1);
            let mut coords = names(&["t"]);
            coords.extend(angles.iter().cloned());
            let mut diag = vec!["-1".to_string()];
            diag.extend(sphere_factors(&angles).iter().map(|s| scaled("cosh(t)^2", s)));
            let mut domain = vec![(-4.0, 4.0)];
            domain.extend(sphere_domain(n - 1));
            diagonal(format!("de_sitter({n})"), coords, &diag, "0", domain)
        }
        Builtin::AntiDeSitter { n } => {
            require(*n, 2, "anti_de_sitter")?;
            let angles = angle_names(n - 2);
            let mut coords = names(&["t", "r"]);
            coords.extend(angles.iter().cloned());
            let mut diag = vec!["-cosh(r)^2".to_string(), "1".to_string()];
            diag.extend(sphere_factors(&angles).iter().map(|s| scaled("sinh(r)^2", s)));
            let mut domain = vec![(-3.0, 3.0), (0.1, 2.0)];
            domain.extend(sphere_domain(n - 2));
            diagonal(format!("anti_de_sitter({n})"), coords, &diag, "0", domain)
        }
        Builtin::EinsteinStatic { n } => {
            require(*n, 2, "einstein_static")?;
            let angles = angle_names(n - 1);
            let mut coords = names(&["t"]);
            coords.extend(angles.iter().cloned());
            let mut diag = vec!["-1".to_string()];
            diag.extend(sphere_factors(&angles));
            let mut domain = vec![(-5.0, 5.0)];
            domain.extend(sphere_domain(n - 1));
            diagonal(format!("einstein_static({n})"), coords, &diag, "0", domain)
        }
        Builtin::WarpedProduct { n, warp, base } => product(*n, warp, *base, true),
        Builtin::TwistedProduct { n, twist, base } => product(*n, twist, *base, false),
    }
}

fn build_custom(table: &CustomTable) -> Result<SpacetimeModel> {
    let coords = table.coords.clone();
    let n = coords.len();
    let mut metric = vec![Expression::constant(0.0, &coords); n * (n + 1) / 2];
    let mut seen = vec![false; metric.len()];
    for (i, j, src) in &table.components {
        if *i >= n || *j >= n {
            return Err(GeometryError::CoordinateCount { expected: n, got: (*i).max(*j) + 1 });
        }
        let k = packed(n, *i, *j);
        if seen[k] {
            return Err(GeometryError::Invalid(format!("component ({i},{j}) given twice")));
        }
        seen[k] = true;
        metric[k] = parse_expr(src, &coords)?;
    }
    let f = parse_expr(&table.potential, &coords)?;
    let domain = table.domain.clone().unwrap_or_else(|| vec![(-1.0, 1.0); n]);
    SpacetimeModel::new(table.name.clone(), coords, metric, f, domain)
}
