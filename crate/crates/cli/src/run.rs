//! Executing the checks of a loaded scenario.

use std::collections::BTreeMap;
use std::time::Instant;

use bakry_emery::congruence::{
    detect_conjugate, focusing_bound_check, index_form, propagate_jacobi, raychaudhuri_residual, transform_jacobi,
    CongruenceMode, FrameField, JacobiEvolution,
};
use bakry_emery::curvature::{cd_check, CdCondition, CdVerdict, Sampling};
use bakry_emery::geodesic::{
    integrate_geodesic, lift_twisted_geodesic, parallel_transport, reparametrize, transport_along_polygon,
    verify_reparam_lemma, GeodesicPath, LimitEstimate, TransportedField,
};
use bakry_emery::hypersurface::{laplacian_comparison_check, splitting_diagnostics};
use bakry_emery::{parse_expr, ConnectionKind, IntegrationControl, SpacetimeModel, SyntheticDimension, TangentVector};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{
    CdCheck, CdKind, Check, ConjugateExpectation, ExpectedVerdict, FocusingCheck, GeodesicCheck, IndexFormCheck,
    InitialData, JacobiCheck, LaplacianCheck, LiftCheck, LoadedScenario, SplittingCheck, Tolerances, TransformCheck,
    TransportCheck,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Advisory,
    Fail,
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Advisory => "advisory",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

/// A parameter-indexed history destined for a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Appended to the check name to form the file stem.
    pub suffix: String,
    /// Column names after "parameter".
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub kind: &'static str,
    pub status: Status,
    pub message: Option<String>,
    pub payload: Value,
    pub series: Vec<Series>,
    pub seconds: f64,
}

/// Collects requirements; the first failed one decides the status, advisories only downgrade a pass.
#[derive(Debug, Default)]
struct Verdict {
    failures: Vec<String>,
    advisories: Vec<String>,
}

impl Verdict {
    fn below(&mut self, label: &str, value: f64, tol: f64) {
        // NaN fails too.
        if value.is_nan() || value > tol {
            self.failures.push(format!("{label} {value:.3e} exceeds {tol:.1e}"));
        }
    }

    fn require(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }

    fn advise(&mut self, flag: bool, message: impl FnOnce() -> String) {
        if flag {
            self.advisories.push(message());
        }
    }

    fn finish(self) -> (Status, Option<String>) {
        if !self.failures.is_empty() {
            let mut all = self.failures;
            all.extend(self.advisories);
            (Status::Fail, Some(all.join("; ")))
        } else if !self.advisories.is_empty() {
            (Status::Advisory, Some(self.advisories.join("; ")))
        } else {
            (Status::Pass, None)
        }
    }
}

struct Computed {
    verdict: Verdict,
    payload: Value,
    series: Vec<Series>,
}

impl Computed {
    fn new(verdict: Verdict, payload: Value) -> Self {
        Self { verdict, payload, series: Vec::new() }
    }
}

type CheckResult = std::result::Result<Computed, String>;

/// State shared by the checks of one run: geodesics feed later checks by id.
pub struct Runner<'a> {
    loaded: &'a LoadedScenario,
    tol: Tolerances,
    seed: u64,
    geodesics: BTreeMap<String, Option<GeodesicPath>>,
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

fn initial_pair(init: Option<&InitialData>, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    match init {
        Some(i) => (matrix(&i.a0), matrix(&i.a0_prime)),
        None => (DMatrix::zeros(d, d), DMatrix::identity(d, d)),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

impl<'a> Runner<'a> {
    pub fn new(loaded: &'a LoadedScenario, tol: Tolerances, seed: u64) -> Self {
        Self { loaded, tol, seed, geodesics: BTreeMap::new() }
    }

    fn model(&self) -> &SpacetimeModel {
        &self.loaded.model
    }

    fn synthetic(&self) -> SyntheticDimension {
        self.loaded.synthetic
    }

    fn path(&self, id: &str) -> std::result::Result<&GeodesicPath, String> {
        self.geodesics.get(id).and_then(|p| p.as_ref()).ok_or_else(|| format!("geodesic '{id}' did not complete"))
    }

    fn mode_of(&self, path: &GeodesicPath) -> CongruenceMode {
        match path.causal_type {
            bakry_emery::spacetime::CausalCharacter::Null => CongruenceMode::Null,
            _ => CongruenceMode::Timelike,
        }
    }

    pub fn run(&mut self, index: usize) -> CheckOutcome {
        let check = &self.loaded.scenario.checks[index];
        let name = self.loaded.names[index].clone();
        let start = Instant::now();
        let result = match check {
            Check::CdCheck(c) => self.cd(c),
            Check::Geodesic(c) => {
                let r = self.geodesic(c);
                if r.is_err() {
                    self.geodesics.insert(name.clone(), None);
                }
                r.map(|(computed, path)| {
                    self.geodesics.insert(name.clone(), Some(path));
                    computed
                })
            }
            Check::Jacobi(c) => self.jacobi(c),
            Check::Focusing(c) => self.focusing(c),
            Check::Transform(c) => self.transform(c),
            Check::Splitting(c) => self.splitting(c),
            Check::LaplacianComparison(c) => self.laplacian(c),
            Check::IndexForm(c) => self.index_form(c),
            Check::Lift(c) => self.lift(c),
            Check::Transport(c) => self.transport(c),
        };
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok(c) => {
                let (status, message) = c.verdict.finish();
                CheckOutcome { name, kind: check.kind(), status, message, payload: c.payload, series: c.series, seconds }
            }
            Err(message) => CheckOutcome {
                name,
                kind: check.kind(),
                status: Status::Error,
                message: Some(message),
                payload: Value::Null,
                series: Vec::new(),
                seconds,
            },
        }
    }

    fn cd(&self, c: &CdCheck) -> CheckResult {
        let condition = match c.condition {
            CdKind::Timelike => CdCondition::Timelike { lambda: c.lambda },
            CdKind::Null => CdCondition::Null,
        };
        let sampling = Sampling {
            points: c.points,
            directions: c.directions,
            rapidity_max: c.rapidity_max,
            seed: self.seed,
            tol: self.tol.cd,
        };
        let report = cd_check(self.model(), condition, self.synthetic(), &sampling).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        let observed = match report.verdict {
            CdVerdict::Holds => Some(ExpectedVerdict::Holds),
            CdVerdict::Violated => Some(ExpectedVerdict::Violated),
            CdVerdict::Inconclusive => None,
        };
        match observed {
            Some(o) => v.require(o == c.expect, || {
                format!("verdict {:?} (min {:.6e} against bound {}) where {:?} was expected", report.verdict, report.min_value, report.bound, c.expect)
            }),
            None => v.advise(true, || "inconclusive: the large-rapidity form is negative".into()),
        }
        Ok(Computed::new(v, value(&report)))
    }

    fn geodesic(&self, c: &GeodesicCheck) -> std::result::Result<(Computed, GeodesicPath), String> {
        let model = self.model();
        let ctrl = c.control.unwrap_or_default();
        let init = TangentVector::new(c.start.clone(), c.velocity.clone()).map_err(|e| e.to_string())?;
        let path = integrate_geodesic(model, c.connection, &init, c.span, &ctrl).map_err(|e| e.to_string())?;
        let residual = path.geodesic_residual(model, c.connection).map_err(|e| e.to_string())?;
        let n = model.dim();
        let alpha = self.mode_of(&path).alpha(n);
        let table = reparametrize(model, &path, alpha).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.below("geodesic_residual", residual, self.tol.geodesic);
        let norm_drift = if c.connection == ConnectionKind::LeviCivita {
            let d = path.norm_drift(model).map_err(|e| e.to_string())?;
            v.below("norm_drift", d, self.tol.norm_drift);
            Some(d)
        } else {
            None
        };
        v.advise(path.truncated, || "integration stopped at the domain boundary".into());
        let mut lemma = Vec::new();
        for target in &c.verify_reparam {
            let r = verify_reparam_lemma(model, &path, *target).map_err(|e| e.to_string())?;
            v.below(&format!("{}_reparam_residual", target.name()), r.max_residual, self.tol.reparam);
            lemma.push(r);
        }
        let complete = match table.limit {
            LimitEstimate::Finite { .. } => Some(false),
            LimitEstimate::Divergent { .. } => Some(true),
            LimitEstimate::Undetermined { .. } => None,
        };
        if let Some(expected) = c.expect_f_complete {
            match complete {
                Some(got) => v.require(got == expected, || format!("f-complete = {got}, expected {expected}")),
                None => v.advise(true, || "the s-limit is undetermined on this span".into()),
            }
        }
        if let Some(expected) = c.expect_limit {
            match table.limit {
                LimitEstimate::Finite { value, .. } => v.require(close(value, expected, self.tol.limit), || {
                    format!("s-limit {value:.12} differs from {expected}")
                }),
                other => v.require(false, || format!("s-limit {other:?}, expected the finite value {expected}")),
            }
        }
        let last = path.nodes.last().expect("integration yields nodes");
        let payload = json!({
            "connection": c.connection,
            "causal_type": path.causal_type.name(),
            "nodes": path.nodes.len(),
            "end_parameter": last.param,
            "end_point": last.point,
            "end_velocity": last.velocity,
            "truncated": path.truncated,
            "geodesic_residual": residual,
            "norm_drift": norm_drift,
            "alpha": alpha,
            "s_end": table.values.last(),
            "s_limit": table.limit,
            "f_complete": complete,
            "reparam_checks": lemma,
        });
        let coords = model.coords();
        let mut columns: Vec<String> = coords.to_vec();
        columns.extend(coords.iter().map(|c| format!("d{c}")));
        columns.push("s".into());
        let rows = path
            .nodes
            .iter()
            .zip(&table.values)
            .map(|(node, s)| {
                let mut row: Vec<Option<f64>> = node.point.iter().chain(&node.velocity).map(|x| Some(*x)).collect();
                row.push(Some(*s));
                (node.param, row)
            })
            .collect();
        let computed = Computed { verdict: v, payload, series: vec![Series { suffix: String::new(), columns, rows }] };
        Ok((computed, path))
    }

    fn evolve(&self, geodesic: &str, init: Option<&InitialData>) -> std::result::Result<JacobiEvolution, String> {
        let path = self.path(geodesic)?;
        let mode = self.mode_of(path);
        let (a0, a0p) = initial_pair(init, mode.rank(self.model().dim()));
        propagate_jacobi(self.model(), path, &a0, &a0p, mode).map_err(|e| e.to_string())
    }

    fn jacobi(&self, c: &JacobiCheck) -> CheckResult {
        let evo = self.evolve(&c.geodesic, c.initial.as_ref())?;
        let focus = detect_conjugate(&evo);
        let mut v = Verdict::default();
        v.below("jacobi_residual", evo.jacobi_residual, self.tol.jacobi);
        let ray = match raychaudhuri_residual(&evo, self.synthetic()) {
            Ok(r) => {
                let t = self.tol.raychaudhuri;
                v.below("raychaudhuri_scalar_residual", r.scalar_residual, t);
                v.below("raychaudhuri_theta_residual", r.theta_residual, t);
                v.below("riccati_residual", r.riccati_residual, t);
                v.below("integrating_factor_residual", r.integrating_factor_residual, t);
                Some(r)
            }
            Err(e) => {
                v.advise(true, || format!("Raychaudhuri check skipped: {e}"));
                None
            }
        };
        match &c.expect_conjugate {
            Some(ConjugateExpectation::At(t)) => match focus.first_parameter {
                Some(got) => v.require((got - t).abs() <= self.tol.conjugate, || {
                    format!("first zero at {got:.9}, expected {t} within {:.1e}", self.tol.conjugate)
                }),
                None => v.require(false, || format!("no zero of A found, expected one at {t}")),
            },
            Some(ConjugateExpectation::Absent(_)) => {
                v.require(focus.first_parameter.is_none(), || format!("unexpected zero of A at {:?}", focus.first_parameter))
            }
            None => {}
        }
        v.advise(evo.truncated, || "propagation stopped at the domain boundary".into());
        let last = evo.nodes.last().expect("propagation yields nodes");
        let payload = json!({
            "mode": evo.mode(),
            "alpha": evo.alpha,
            "nodes": evo.nodes.len(),
            "jacobi_residual": evo.jacobi_residual,
            "lagrange_drift": evo.lagrange_drift,
            "frame_gram_drift": evo.frame.gram_drift,
            "truncated": evo.truncated,
            "final_det": last.det,
            "conjugate": focus,
            "raychaudhuri": ray,
        });
        let columns = ["det_a", "sigma_min", "theta", "theta_f", "sigma_sq", "vorticity"].map(String::from).to_vec();
        let rows = evo
            .nodes
            .iter()
            .map(|node| {
                let s = node.scalars.as_ref();
                (
                    node.param,
                    vec![
                        Some(node.det),
                        Some(node.sigma_min),
                        s.map(|s| s.theta),
                        s.map(|s| s.theta_f),
                        s.map(|s| s.sigma_sq),
                        s.map(|s| s.omega.abs().max()),
                    ],
                )
            })
            .collect();
        Ok(Computed { verdict: v, payload, series: vec![Series { suffix: String::new(), columns, rows }] })
    }

    fn focusing(&self, c: &FocusingCheck) -> CheckResult {
        let path = self.path(&c.geodesic)?;
        let mode = self.mode_of(path);
        let (a0, a0p) = initial_pair(c.initial.as_ref(), mode.rank(self.model().dim()));
        let report = focusing_bound_check(self.model(), path, &a0, &a0p, self.synthetic()).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        match &report.bound {
            Some(b) if !report.advisory => v.require(b.within != Some(false), || {
                format!("first zero {:?} lies beyond the bound {:.9} ({:?})", b.first_in_parameter, b.value, b.parameter)
            }),
            _ => v.advise(true, || "focusing hypotheses not all verified; bound is informational".into()),
        }
        if let Some(expected) = c.expect_focal {
            match report.first_parameter {
                Some(t) => v.require((t - expected).abs() <= self.tol.conjugate, || {
                    format!("focal point at {t:.9}, expected {expected}")
                }),
                None => v.require(false, || format!("no focal point found, expected {expected}")),
            }
        }
        if let Some(expected) = c.expect_saturated {
            v.require(report.saturated == expected, || format!("saturated = {}, expected {expected}", report.saturated));
        }
        Ok(Computed::new(v, value(&report)))
    }

    fn transform(&self, c: &TransformCheck) -> CheckResult {
        let evo = self.evolve(&c.geodesic, c.initial.as_ref())?;
        let report = transform_jacobi(self.model(), &evo, evo.alpha).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.below("transformed_jacobi_residual", report.jacobi_residual, self.tol.transform_jacobi);
        let t = self.tol.transform_scalar;
        v.below("b_residual", report.b_residual, t);
        v.below("theta_residual", report.theta_residual, t);
        v.below("sigma_residual", report.sigma_residual, t);
        v.below("det_residual", report.det_residual, t);
        v.require(report.sign_agreement, || "θ̃ and θ_f disagree in sign".into());
        v.require(report.vanishing_consistent, || "B̃ and B_f vanish at different nodes".into());
        let columns = ["s", "det_a", "det_hat", "theta_f", "theta_tilde"].map(String::from).to_vec();
        let rows = report
            .nodes
            .iter()
            .map(|node| (node.t, vec![Some(node.s), Some(node.det_a), Some(node.det_hat), node.theta_f, node.theta_tilde]))
            .collect();
        let mut payload = value(&report);
        payload.as_object_mut().expect("struct").remove("nodes");
        Ok(Computed { verdict: v, payload, series: vec![Series { suffix: String::new(), columns, rows }] })
    }

    fn splitting(&self, c: &SplittingCheck) -> CheckResult {
        let report = splitting_diagnostics(self.model(), c.slice, c.points, self.seed).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.below("ricci_residual", report.ricci_residual, self.tol.splitting);
        v.below("ric_f1_residual", report.ric_f1_residual, self.tol.splitting);
        let splits = report.max_mixed_partial < self.tol.mixed_partial;
        if let Some(expected) = c.expect_split {
            v.require(splits == expected, || {
                format!("max mixed partial {:.3e}: splits = {splits}, expected {expected}", report.max_mixed_partial)
            });
        }
        let mut payload = value(&report);
        payload["splits"] = json!(splits);
        Ok(Computed::new(v, payload))
    }

    fn laplacian(&self, c: &LaplacianCheck) -> CheckResult {
        let d = parse_expr(&c.distance, self.model().coords()).map_err(|e| e.to_string())?;
        let report = laplacian_comparison_check(self.model(), &d, &c.base, &c.point).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.require(report.slack >= -self.tol.laplacian, || {
            format!("Δ_f d = {:.9} lies below the bound {:.9}", report.drift_laplacian, report.bound)
        });
        let mut payload = value(&report);
        payload["holds"] = json!(report.slack >= -self.tol.laplacian);
        Ok(Computed::new(v, payload))
    }

    fn index_form(&self, c: &IndexFormCheck) -> CheckResult {
        let path = self.path(&c.geodesic)?;
        let sources: Vec<&str> = c.field.iter().map(String::as_str).collect();
        let field = FrameField::parse(&sources).map_err(|e| e.to_string())?;
        let report = index_form(self.model(), path, &field).map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.below("weighted_identity_residual", report.weighted_identity_residual, self.tol.index_form);
        if let Some(expected) = c.expect_value {
            v.require(close(report.value, expected, self.tol.index_form), || {
                format!("I = {:.12}, expected {expected}", report.value)
            });
        }
        Ok(Computed::new(v, value(&report)))
    }

    fn lift(&self, c: &LiftCheck) -> CheckResult {
        let report = lift_twisted_geodesic(
            self.model(),
            &c.start,
            c.w0,
            &c.base_velocity,
            c.span,
            &IntegrationControl::default(),
            c.system,
        )
        .map_err(|e| e.to_string())?;
        let mut v = Verdict::default();
        v.below("geodesic_residual", report.geodesic_residual, self.tol.lift);
        v.below("direct_difference", report.direct_difference, self.tol.lift);
        let payload = json!({
            "system": report.system,
            "causal_type": report.causal_type.name(),
            "nodes": report.path.nodes.len(),
            "end_point": report.path.nodes.last().map(|n| &n.point),
            "geodesic_residual": report.geodesic_residual,
            "direct_difference": report.direct_difference,
            "base_speed_drift": report.base_speed_drift,
            "unit_normalization_drift": report.unit_normalization_drift,
        });
        let coords = self.model().coords();
        let mut columns = coords.to_vec();
        columns.push("base_speed_sq".into());
        let rows = report
            .path
            .nodes
            .iter()
            .zip(&report.base_speed_sq)
            .map(|(node, h)| {
                let mut row: Vec<Option<f64>> = node.point.iter().map(|x| Some(*x)).collect();
                row.push(Some(*h));
                (node.param, row)
            })
            .collect();
        Ok(Computed { verdict: v, payload, series: vec![Series { suffix: String::new(), columns, rows }] })
    }

    fn transport(&self, c: &TransportCheck) -> CheckResult {
        let model = self.model();
        let fields: Vec<TransportedField> = match &c.geodesic {
            Some(id) => vec![parallel_transport(model, c.connection, self.path(id)?, &c.vector).map_err(|e| e.to_string())?],
            None => c
                .polygons
                .iter()
                .map(|poly| transport_along_polygon(model, c.connection, poly, &c.vector, &IntegrationControl::default()))
                .collect::<bakry_emery::Result<_>>()
                .map_err(|e| e.to_string())?,
        };
        let mut v = Verdict::default();
        let expected = match &c.expected {
            Some(src) => Some(
                src.iter()
                    .map(|s| parse_expr(s, model.coords()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?,
            ),
            None => None,
        };
        let mut field_error: Option<f64> = None;
        if let Some(exprs) = &expected {
            let mut worst: f64 = 0.0;
            for f in &fields {
                for s in &f.samples {
                    for (e, got) in exprs.iter().zip(&s.vector) {
                        worst = worst.max((e.eval(&s.point).map_err(|e| e.to_string())? - got).abs());
                    }
                }
            }
            v.below("expected_field_error", worst, self.tol.transport);
            field_error = Some(worst);
        }
        let path_spread = (fields.len() > 1).then(|| {
            let reference = &fields[0].last().vector;
            fields
                .iter()
                .flat_map(|f| f.last().vector.iter().zip(reference).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max)
        });
        if let Some(spread) = path_spread {
            v.below("path_dependence", spread, self.tol.transport);
        }
        if c.connection == ConnectionKind::LeviCivita {
            let drift = fields.iter().map(|f| f.norm_drift.max(f.tangent_drift)).fold(0.0, f64::max);
            v.below("inner_product_drift", drift, self.tol.norm_drift);
        }
        let payload = json!({
            "connection": c.connection,
            "paths": fields.len(),
            "final_vectors": fields.iter().map(|f| &f.last().vector).collect::<Vec<_>>(),
            "end_point": fields[0].last().point,
            "norm_drift": fields.iter().map(|f| f.norm_drift).collect::<Vec<_>>(),
            "expected_field_error": field_error,
            "path_dependence": path_spread,
        });
        let coords = model.coords();
        let mut columns = coords.to_vec();
        columns.extend(coords.iter().map(|c| format!("V_{c}")));
        let series = fields
            .iter()
            .enumerate()
            .map(|(k, f)| Series {
                suffix: if fields.len() > 1 { format!("_path{k}") } else { String::new() },
                columns: columns.clone(),
                rows: f
                    .samples
                    .iter()
                    .map(|s| (s.param, s.point.iter().chain(&s.vector).map(|x| Some(*x)).collect()))
                    .collect(),
            })
            .collect();
        Ok(Computed { verdict: v, payload, series })
    }
}
