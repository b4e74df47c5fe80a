//! Scenario files: JSON descriptions of a spacetime, a potential, N and an ordered list of checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bakry_emery::congruence::CongruenceMode;
use bakry_emery::geodesic::LiftSystem;
use bakry_emery::spacetime::{classify_vector, Base, CausalCharacter, CustomTable};
use bakry_emery::{
    build_spacetime, parse_expr, Builtin, ConnectionKind, IntegrationControl, SpacetimeModel, SpacetimeSpec,
    SyntheticDimension,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("{file}:{line}:{column}: at `{path}`: {message}")]
    Parse { file: String, line: usize, column: usize, path: String, message: String },
    #[error("{file}: at `{path}`: {message}")]
    Invalid { file: String, path: String, message: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub spacetime: SpacetimeEntry,
    /// Overrides the model's potential; not allowed on warped or twisted products.
    #[serde(default)]
    pub potential: Option<String>,
    #[serde(rename = "N", default)]
    pub synthetic_dimension: DimensionEntry,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseEntry {
    Flat,
    Round,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpacetimeEntry {
    Minkowski { n: usize },
    MinkowskiWithF { n: usize, f: String },
    DeSitter { n: usize },
    AntiDeSitter { n: usize },
    EinsteinStatic { n: usize },
    WarpedProduct { n: usize, warp: String, base: BaseEntry },
    TwistedProduct { n: usize, twist: String, base: BaseEntry },
    /// Metric as a map "i,j" -> expression; unlisted entries are zero.
    Custom {
        name: String,
        coords: Vec<String>,
        metric: BTreeMap<String, String>,
        #[serde(default)]
        domain: Option<Vec<(f64, f64)>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DimensionEntry {
    Finite(f64),
    Named(String),
}

impl Default for DimensionEntry {
    fn default() -> Self {
        DimensionEntry::Named("infinite".into())
    }
}

/// Per-scenario replacements for the default tolerances. Overrides are not affected by `--tol-scale`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub cd: Option<f64>,
    pub geodesic: Option<f64>,
    pub norm_drift: Option<f64>,
    pub reparam: Option<f64>,
    pub limit: Option<f64>,
    pub jacobi: Option<f64>,
    pub raychaudhuri: Option<f64>,
    pub conjugate: Option<f64>,
    pub transform_jacobi: Option<f64>,
    pub transform_scalar: Option<f64>,
    pub splitting: Option<f64>,
    pub mixed_partial: Option<f64>,
    pub laplacian: Option<f64>,
    pub index_form: Option<f64>,
    pub lift: Option<f64>,
    pub transport: Option<f64>,
}

/// The tolerance set a run actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub cd: f64,
    pub geodesic: f64,
    pub norm_drift: f64,
    pub reparam: f64,
    pub limit: f64,
    pub jacobi: f64,
    pub raychaudhuri: f64,
    pub conjugate: f64,
    pub transform_jacobi: f64,
    pub transform_scalar: f64,
    pub splitting: f64,
    pub mixed_partial: f64,
    pub laplacian: f64,
    pub index_form: f64,
    pub lift: f64,
    pub transport: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cd: 1e-9,
            geodesic: 1e-6,
            norm_drift: 1e-6,
            reparam: 1e-6,
            limit: 1e-9,
            jacobi: 1e-6,
            raychaudhuri: 1e-6,
            conjugate: 1e-5,
            transform_jacobi: 1e-6,
            transform_scalar: 1e-7,
            splitting: 1e-7,
            mixed_partial: 1e-9,
            laplacian: 1e-7,
            index_form: 1e-6,
            lift: 1e-6,
            transport: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn resolve(scale: f64, o: &ToleranceOverrides) -> Self {
        let d = Self::default();
        let pick = |v: Option<f64>, def: f64| v.unwrap_or(def * scale);
        Self {
            cd: pick(o.cd, d.cd),
            geodesic: pick(o.geodesic, d.geodesic),
            norm_drift: pick(o.norm_drift, d.norm_drift),
            reparam: pick(o.reparam, d.reparam),
            limit: pick(o.limit, d.limit),
            jacobi: pick(o.jacobi, d.jacobi),
            raychaudhuri: pick(o.raychaudhuri, d.raychaudhuri),
            conjugate: pick(o.conjugate, d.conjugate),
            transform_jacobi: pick(o.transform_jacobi, d.transform_jacobi),
            transform_scalar: pick(o.transform_scalar, d.transform_scalar),
            splitting: pick(o.splitting, d.splitting),
            mixed_partial: pick(o.mixed_partial, d.mixed_partial),
            laplacian: pick(o.laplacian, d.laplacian),
            index_form: pick(o.index_form, d.index_form),
            lift: pick(o.lift, d.lift),
            transport: pick(o.transport, d.transport),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdKind {
    Timelike,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    Holds,
    Violated,
}

/// Initial Jacobi data (A(t0), A′(t0)) in frame components. Absent means the point congruence
/// A(t0) = 0, A′(t0) = id.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub a0: Vec<Vec<f64>>,
    pub a0_prime: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ConjugateExpectation {
    At(f64),
    /// The string "none": no zero of A on the span.
    Absent(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    CdCheck(CdCheck),
    Geodesic(GeodesicCheck),
    Jacobi(JacobiCheck),
    Focusing(FocusingCheck),
    Transform(TransformCheck),
    Splitting(SplittingCheck),
    LaplacianComparison(LaplacianCheck),
    IndexForm(IndexFormCheck),
    Lift(LiftCheck),
    Transport(TransportCheck),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub condition: CdKind,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_rapidity")]
    pub rapidity_max: f64,
    #[serde(default = "default_verdict")]
    pub expect: ExpectedVerdict,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicCheck {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default = "default_connection")]
    pub connection: ConnectionKind,
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
    pub span: (f64, f64),
    #[serde(default)]
    pub control: Option<IntegrationControl>,
    /// Target connections whose geodesic equation the reparametrized path must satisfy.
    #[serde(default)]
    pub verify_reparam: Vec<ConnectionKind>,
    /// Expected f-completeness verdict from the s-limit along the path.
    #[serde(default)]
    pub expect_f_complete: Option<bool>,
    #[serde(default)]
    pub expect_limit: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub geodesic: String,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub expect_conjugate: Option<ConjugateExpectation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocusingCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub geodesic: String,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub expect_focal: Option<f64>,
    #[serde(default)]
    pub expect_saturated: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub geodesic: String,
    #[serde(default)]
    pub initial: Option<InitialData>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub slice: f64,
    #[serde(default = "default_split_points")]
    pub points: usize,
    #[serde(default)]
    pub expect_split: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplacianCheck {
    #[serde(default)]
    pub id: Option<String>,
    /// Closed-form Lorentzian distance to `base`, in chart coordinates.
    pub distance: String,
    pub base: Vec<f64>,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexFormCheck {
    #[serde(default)]
    pub id: Option<String>,
    pub geodesic: String,
    /// Frame components of the variation field as expressions in t.
    pub field: Vec<String>,
    #[serde(default)]
    pub expect_value: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftCheck {
    #[serde(default)]
    pub id: Option<String>,
    /// Chart point where the lift starts.
    pub start: Vec<f64>,
    /// Initial dt/dλ.
    pub w0: f64,
    /// Initial velocity of the base curve in the spatial factor.
    pub base_velocity: Vec<f64>,
    pub span: (f64, f64),
    #[serde(default)]
    pub system: LiftSystem,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportCheck {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default = "default_connection")]
    pub connection: ConnectionKind,
    pub vector: Vec<f64>,
    /// Transport along an earlier geodesic...
    #[serde(default)]
    pub geodesic: Option<String>,
    /// ...or along coordinate polygons sharing both endpoints.
    #[serde(default)]
    pub polygons: Vec<Vec<Vec<f64>>>,
    /// Closed-form components of the expected field, in chart coordinates.
    #[serde(default)]
    pub expected: Option<Vec<String>>,
}

fn default_points() -> usize {
    50
}
fn default_directions() -> usize {
    40
}
fn default_rapidity() -> f64 {
    5.0
}
fn default_verdict() -> ExpectedVerdict {
    ExpectedVerdict::Holds
}
fn default_connection() -> ConnectionKind {
    ConnectionKind::LeviCivita
}
fn default_split_points() -> usize {
    20
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::CdCheck(_) => "cd_check",
            Check::Geodesic(_) => "geodesic",
            Check::Jacobi(_) => "jacobi",
            Check::Focusing(_) => "focusing",
            Check::Transform(_) => "transform",
            Check::Splitting(_) => "splitting",
            Check::LaplacianComparison(_) => "laplacian_comparison",
            Check::IndexForm(_) => "index_form",
            Check::Lift(_) => "lift",
            Check::Transport(_) => "transport",
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            Check::CdCheck(c) => c.id.as_deref(),
            Check::Geodesic(c) => c.id.as_deref(),
            Check::Jacobi(c) => c.id.as_deref(),
            Check::Focusing(c) => c.id.as_deref(),
            Check::Transform(c) => c.id.as_deref(),
            Check::Splitting(c) => c.id.as_deref(),
            Check::LaplacianComparison(c) => c.id.as_deref(),
            Check::IndexForm(c) => c.id.as_deref(),
            Check::Lift(c) => c.id.as_deref(),
            Check::Transport(c) => c.id.as_deref(),
        }
    }

    /// The geodesic this check consumes, if any.
    fn geodesic_ref(&self) -> Option<&str> {
        match self {
            Check::Jacobi(c) => Some(&c.geodesic),
            Check::Focusing(c) => Some(&c.geodesic),
            Check::Transform(c) => Some(&c.geodesic),
            Check::IndexForm(c) => Some(&c.geodesic),
            Check::Transport(c) => c.geodesic.as_deref(),
            _ => None,
        }
    }

    fn initial(&self) -> Option<&InitialData> {
        match self {
            Check::Jacobi(c) => c.initial.as_ref(),
            Check::Focusing(c) => c.initial.as_ref(),
            Check::Transform(c) => c.initial.as_ref(),
            _ => None,
        }
    }
}

/// A scenario checked against its model: every reference resolved, every expression parsed.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: String,
    pub scenario: Scenario,
    pub model: SpacetimeModel,
    pub synthetic: SyntheticDimension,
    /// Display names, unique within the scenario.
    pub names: Vec<String>,
    /// Congruence mode of every geodesic check, by check index.
    pub modes: BTreeMap<usize, CongruenceMode>,
}

pub fn load(path: &Path) -> Result<LoadedScenario, ScenarioError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { file: file.clone(), source })?;
    parse(&file, &text)
}

pub fn parse(file: &str, text: &str) -> Result<LoadedScenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            file: file.to_string(),
            line: inner.line(),
            column: inner.column(),
            path,
            message: inner.to_string(),
        }
    })?;
    validate(file, scenario)
}

fn base(b: BaseEntry) -> Base {
    match b {
        BaseEntry::Flat => Base::Flat,
        BaseEntry::Round => Base::Round,
    }
}

fn spec_of(entry: &SpacetimeEntry, potential: Option<&str>) -> Result<SpacetimeSpec, String> {
    let builtin = match entry.clone() {
        SpacetimeEntry::Minkowski { n } => Builtin::Minkowski { n },
        SpacetimeEntry::MinkowskiWithF { n, f } => Builtin::MinkowskiWithF { n, f },
        SpacetimeEntry::DeSitter { n } => Builtin::DeSitter { n },
        SpacetimeEntry::AntiDeSitter { n } => Builtin::AntiDeSitter { n },
        SpacetimeEntry::EinsteinStatic { n } => Builtin::EinsteinStatic { n },
        SpacetimeEntry::WarpedProduct { n, warp, base: b } => Builtin::WarpedProduct { n, warp, base: base(b) },
        SpacetimeEntry::TwistedProduct { n, twist, base: b } => Builtin::TwistedProduct { n, twist, base: base(b) },
        SpacetimeEntry::Custom { name, coords, metric, domain } => {
            let mut components = Vec::with_capacity(metric.len());
            for (key, src) in metric {
                let parsed = key
                    .split_once(',')
                    .and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)));
                let (i, j) = parsed.ok_or_else(|| format!("metric key '{key}' is not of the form \"i,j\""))?;
                components.push((i, j, src));
            }
            return Ok(SpacetimeSpec::Custom(CustomTable {
                name,
                coords,
                components,
                potential: potential.unwrap_or("0").to_string(),
                domain,
            }));
        }
    };
    Ok(SpacetimeSpec::Builtin(builtin))
}

fn invalid(file: &str, path: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid { file: file.to_string(), path: path.into(), message: message.to_string() }
}

fn check_len(file: &str, path: String, v: &[f64], n: usize) -> Result<(), ScenarioError> {
    if v.len() != n {
        return Err(invalid(file, path, format!("expected {n} components, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(file, path, "components must be finite"));
    }
    Ok(())
}

fn check_span(file: &str, path: String, span: (f64, f64)) -> Result<(), ScenarioError> {
    if !(span.0.is_finite() && span.1.is_finite()) || span.0 == span.1 {
        return Err(invalid(file, path, format!("span {span:?} must have two distinct finite ends")));
    }
    Ok(())
}

fn validate(file: &str, scenario: Scenario) -> Result<LoadedScenario, ScenarioError> {
    let product = matches!(scenario.spacetime, SpacetimeEntry::WarpedProduct { .. } | SpacetimeEntry::TwistedProduct { .. });
    if product && scenario.potential.is_some() {
        return Err(invalid(file, "potential", "the potential of a warped or twisted product is its warp function"));
    }
    let custom = matches!(scenario.spacetime, SpacetimeEntry::Custom { .. });
    let spec = spec_of(&scenario.spacetime, scenario.potential.as_deref()).map_err(|m| invalid(file, "spacetime.metric", m))?;
    let mut model = build_spacetime(&spec).map_err(|e| invalid(file, "spacetime", e))?;
    if let (false, Some(f)) = (custom, &scenario.potential) {
        model = model.with_potential(f).map_err(|e| invalid(file, "potential", e))?;
    }
    let n = model.dim();
    let synthetic = match &scenario.synthetic_dimension {
        DimensionEntry::Finite(v) => SyntheticDimension::finite(*v, n).map_err(|e| invalid(file, "N", e))?,
        DimensionEntry::Named(s) if s == "infinite" => SyntheticDimension::infinite(n),
        DimensionEntry::Named(s) => return Err(invalid(file, "N", format!("expected a number or \"infinite\", got \"{s}\""))),
    };

    let mut names = Vec::with_capacity(scenario.checks.len());
    let mut geodesics: BTreeMap<String, (usize, ConnectionKind)> = BTreeMap::new();
    let mut modes: BTreeMap<usize, CongruenceMode> = BTreeMap::new();
    for (k, check) in scenario.checks.iter().enumerate() {
        let at = |field: &str| format!("checks[{k}].{field}");
        let name = match check.id() {
            Some(id) => {
                if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(invalid(file, at("id"), format!("'{id}' must be non-empty ASCII letters, digits, '_' or '-'")));
                }
                id.to_string()
            }
            None => format!("{:02}_{}", k + 1, check.kind()),
        };
        if names.contains(&name) {
            return Err(invalid(file, at("id"), format!("'{name}' is used by an earlier check")));
        }
        let mut rank = None;
        if let Some(target) = check.geodesic_ref() {
            let Some((index, connection)) = geodesics.get(target) else {
                return Err(invalid(file, at("geodesic"), format!("no earlier geodesic check has id '{target}'")));
            };
            let levi_civita_only = !matches!(check, Check::Transport(_));
            if levi_civita_only && *connection != ConnectionKind::LeviCivita {
                return Err(invalid(file, at("geodesic"), format!("'{target}' must use the levi_civita connection")));
            }
            rank = Some(modes[index]);
        }
        if let (Some(init), Some(mode)) = (check.initial(), rank) {
            let d = mode.rank(n);
            for (field, m) in [("initial.a0", &init.a0), ("initial.a0_prime", &init.a0_prime)] {
                if m.len() != d || m.iter().any(|row| row.len() != d) {
                    return Err(invalid(file, at(field), format!("expected a {d}x{d} matrix for a {mode:?} congruence")));
                }
            }
        }
        match check {
            Check::CdCheck(c) => {
                if c.points == 0 {
                    return Err(invalid(file, at("points"), "must be positive"));
                }
                if !(c.rapidity_max.is_finite() && c.rapidity_max >= 0.0) {
                    return Err(invalid(file, at("rapidity_max"), "must be finite and non-negative"));
                }
            }
            Check::Geodesic(c) => {
                check_len(file, at("start"), &c.start, n)?;
                check_len(file, at("velocity"), &c.velocity, n)?;
                check_span(file, at("span"), c.span)?;
                c.connection.check_dim(n).map_err(|e| invalid(file, at("connection"), e))?;
                if !model.contains(&c.start) {
                    return Err(invalid(file, at("start"), "initial point lies outside the model's domain"));
                }
                let g = model.metric_matrix(&c.start).map_err(|e| invalid(file, at("start"), e))?;
                let scale: f64 = c.velocity.iter().map(|x| x * x).sum();
                let character =
                    classify_vector(&g, &c.velocity, 1e-9 * scale.max(1.0)).map_err(|e| invalid(file, at("velocity"), e))?;
                let mode = match character {
                    CausalCharacter::Timelike => CongruenceMode::Timelike,
                    CausalCharacter::Null => CongruenceMode::Null,
                    CausalCharacter::Spacelike => {
                        return Err(invalid(file, at("velocity"), "velocity must be timelike or null"));
                    }
                };
                if c.verify_reparam.contains(&ConnectionKind::LeviCivita) {
                    return Err(invalid(file, at("verify_reparam"), "targets must be weighted or conformal"));
                }
                if !c.verify_reparam.is_empty() && c.connection != ConnectionKind::LeviCivita {
                    return Err(invalid(file, at("verify_reparam"), "reparametrization starts from a levi_civita geodesic"));
                }
                modes.insert(k, mode);
                geodesics.insert(name.clone(), (k, c.connection));
            }
            Check::Jacobi(c) => {
                if let Some(ConjugateExpectation::Absent(word)) = &c.expect_conjugate {
                    if word != "none" {
                        return Err(invalid(file, at("expect_conjugate"), format!("expected a number or \"none\", got \"{word}\"")));
                    }
                }
            }
            Check::Focusing(_) | Check::Transform(_) => {}
            Check::Splitting(c) => {
                if model.product().is_none() {
                    return Err(invalid(file, at("check"), "splitting diagnostics need a warped or twisted product"));
                }
                if c.points == 0 {
                    return Err(invalid(file, at("points"), "must be positive"));
                }
            }
            Check::LaplacianComparison(c) => {
                parse_expr(&c.distance, model.coords()).map_err(|e| invalid(file, at("distance"), e))?;
                check_len(file, at("base"), &c.base, n)?;
                check_len(file, at("point"), &c.point, n)?;
            }
            Check::IndexForm(c) => {
                if rank != Some(CongruenceMode::Timelike) {
                    return Err(invalid(file, at("geodesic"), "the index form needs a timelike geodesic"));
                }
                if c.field.len() != n - 1 {
                    return Err(invalid(file, at("field"), format!("expected {} frame components", n - 1)));
                }
                for (i, src) in c.field.iter().enumerate() {
                    parse_expr(src, &["t".to_string()]).map_err(|e| invalid(file, at(&format!("field[{i}]")), e))?;
                }
            }
            Check::Lift(c) => {
                if model.product().is_none() {
                    return Err(invalid(file, at("check"), "lifting needs a warped or twisted product"));
                }
                check_len(file, at("start"), &c.start, n)?;
                check_len(file, at("base_velocity"), &c.base_velocity, n - 1)?;
                check_span(file, at("span"), c.span)?;
            }
            Check::Transport(c) => {
                check_len(file, at("vector"), &c.vector, n)?;
                c.connection.check_dim(n).map_err(|e| invalid(file, at("connection"), e))?;
                match (&c.geodesic, c.polygons.is_empty()) {
                    (Some(_), false) | (None, true) => {
                        return Err(invalid(file, at("polygons"), "give exactly one of `geodesic` and `polygons`"));
                    }
                    _ => {}
                }
                for (p, poly) in c.polygons.iter().enumerate() {
                    if poly.len() < 2 {
                        return Err(invalid(file, at(&format!("polygons[{p}]")), "needs at least two vertices"));
                    }
                    for (v, vertex) in poly.iter().enumerate() {
                        check_len(file, at(&format!("polygons[{p}][{v}]")), vertex, n)?;
                    }
                    if poly[0] != c.polygons[0][0] || poly.last() != c.polygons[0].last() {
                        return Err(invalid(file, at(&format!("polygons[{p}]")), "polygons must share both endpoints"));
                    }
                }
                if let Some(expected) = &c.expected {
                    if expected.len() != n {
                        return Err(invalid(file, at("expected"), format!("expected {n} components")));
                    }
                    for (i, src) in expected.iter().enumerate() {
                        parse_expr(src, model.coords()).map_err(|e| invalid(file, at(&format!("expected[{i}]")), e))?;
                    }
                }
            }
        }
        names.push(name);
    }
    Ok(LoadedScenario { file: file.to_string(), scenario, model, synthetic, names, modes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> String {
        parse("s.json", text).unwrap_err().to_string()
    }

    const HEAD: &str = r#""name": "t", "spacetime": {"model": "minkowski", "n": 4}"#;

    #[test]
    fn minimal_scenario_loads() {
        let s = parse("s.json", &format!("{{{HEAD}, \"checks\": [{{\"check\": \"cd_check\", \"condition\": \"null\"}}]}}")).unwrap();
        assert_eq!(s.names, vec!["01_cd_check"]);
        assert!(s.synthetic.is_infinite());
    }

    #[test]
    fn excluded_dimension_is_rejected_at_load() {
        let e = err(&format!("{{{HEAD}, \"N\": 4, \"checks\": []}}"));
        assert!(e.contains("`N`") && e.contains("coincides"), "{e}");
    }

    #[test]
    fn parse_errors_carry_line_and_field() {
        let e = err(&format!("{{{HEAD},\n \"checks\": [\n {{\"check\": \"geodesic\", \"start\": [0,0,0,0], \"velocity\": [1,0,0,0], \"span\": [0, \"x\"]}}]}}"));
        // Tagged checks are buffered by serde, so the path stops at the check itself.
        assert!(e.starts_with("s.json:3:") && e.contains("checks[0]") && e.contains("\"x\""), "{e}");
        let e = err(&format!("{{{HEAD}, \"checks\": [{{\"check\": \"cd_check\", \"condition\": \"null\", \"pionts\": 3}}]}}"));
        assert!(e.contains("pionts"), "{e}");
    }

    #[test]
    fn references_must_point_backwards() {
        let e = err(&format!(
            "{{{HEAD}, \"checks\": [{{\"check\": \"jacobi\", \"geodesic\": \"g\"}}, {{\"check\": \"geodesic\", \"id\": \"g\", \"start\": [0,0,0,0], \"velocity\": [1,0,0,0], \"span\": [0,1]}}]}}"
        ));
        assert!(e.contains("checks[0].geodesic") && e.contains("no earlier geodesic"), "{e}");
    }

    #[test]
    fn initial_data_rank_follows_causal_type() {
        let e = err(&format!(
            "{{{HEAD}, \"checks\": [{{\"check\": \"geodesic\", \"id\": \"g\", \"start\": [0,0,0,0], \"velocity\": [1,1,0,0], \"span\": [0,1]}}, {{\"check\": \"focusing\", \"geodesic\": \"g\", \"initial\": {{\"a0\": [[1,0,0],[0,1,0],[0,0,1]], \"a0_prime\": [[0,0,0],[0,0,0],[0,0,0]]}}}}]}}"
        ));
        assert!(e.contains("2x2"), "{e}");
    }

    #[test]
    fn custom_metric_keys() {
        let text = r#"{"name": "c", "spacetime": {"model": "custom", "name": "flat2", "coords": ["t", "x"],
            "metric": {"0,0": "-1", "1,1": "1"}}, "potential": "x", "checks": []}"#;
        let s = parse("s.json", text).unwrap();
        assert_eq!(s.model.potential().eval(&[0.0, 0.5]).unwrap(), 0.5);
        let bad = text.replace("\"1,1\"", "\"1;1\"");
        assert!(err(&bad).contains("spacetime.metric"));
    }
}
