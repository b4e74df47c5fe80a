//! Jacobi tensors along timelike and null geodesics: propagation in a parallel frame, the
//! expansion, shear and vorticity of the congruence, and the Raychaudhuri/Riccati checks.

mod focus;
mod transform;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_at, weighted_tidal, CurvatureBundle, CAUSAL_TOL};
use crate::error::{GeometryError, Result};
use crate::frame::{null_frame, timelike_frame, AdaptedFrame};
use crate::geodesic::{christoffel_pair, ConnectionKind, GeodesicPath, PathNode, WeightChannel};
use crate::ode::{hermite_eval, integrate, quintic_hermite_eval};
use crate::spacetime::{inner, CausalCharacter, SpacetimeModel, SyntheticDimension};

pub use focus::{
    detect_conjugate, f_generic_probe, focusing_bound_check, BoundParameter, FGenericReport, FocusBound, FocusKind,
    FocusReport, FocusHypothesis, ZeroDetection,
};
pub use transform::{index_form, transform_jacobi, FrameField, IndexFormReport, TransformNode, TransformReport};

/// A is treated as singular when its smallest singular value is below this fraction of its scale.
pub const SINGULAR_TOL: f64 = 1e-10;
/// Vorticity above this aborts the vorticity-free Raychaudhuri check.
pub const VORTICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CongruenceMode {
    Timelike,
    Null,
}

impl CongruenceMode {
    /// a in α = n - a: 1 for timelike, 2 for null.
    pub fn shift(self) -> usize {
        match self {
            CongruenceMode::Timelike => 1,
            CongruenceMode::Null => 2,
        }
    }

    pub fn rank(self, n: usize) -> usize {
        n - self.shift()
    }

    pub fn alpha(self, n: usize) -> f64 {
        self.rank(n) as f64
    }

    fn of(character: CausalCharacter) -> Result<Self> {
        match character {
            CausalCharacter::Timelike => Ok(CongruenceMode::Timelike),
            CausalCharacter::Null => Ok(CongruenceMode::Null),
            CausalCharacter::Spacelike => {
                Err(GeometryError::WrongCausalType { expected: "timelike or null", got: "spacelike" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedFrame {
    pub mode: CongruenceMode,
    pub rank: usize,
    pub initial: AdaptedFrame,
    /// max over nodes of the entrywise change in the Gram matrix of (γ′, frame vectors).
    pub gram_drift: f64,
}

/// Expansion data derived from (A, A′) where A is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceScalars {
    /// A′A⁻¹
    pub b: DMatrix<f64>,
    /// B - f′/α id
    pub b_f: DMatrix<f64>,
    pub theta: f64,
    pub theta_f: f64,
    /// Trace-free symmetric part of B_f.
    pub sigma_f: DMatrix<f64>,
    /// tr σ_f²
    pub sigma_sq: f64,
    /// Antisymmetric part of B.
    pub omega: DMatrix<f64>,
    /// θ_f/α
    pub x_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiNode {
    pub param: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Transported transverse basis (spatial frame or null screen).
    pub transverse: Vec<Vec<f64>>,
    pub a: DMatrix<f64>,
    pub a_prime: DMatrix<f64>,
    pub a_second: DMatrix<f64>,
    /// g(e_a, R(e_b, γ′)γ′)
    pub tidal: DMatrix<f64>,
    pub potential: f64,
    /// (f∘γ)′
    pub f_prime: f64,
    /// (f∘γ)″ from the coordinate jet and the geodesic acceleration.
    pub f_second: f64,
    /// Hess f(γ′, γ′)
    pub hess_along: f64,
    /// Ric(γ′, γ′)
    pub ric_along: f64,
    pub det: f64,
    pub sigma_min: f64,
    pub scalars: Option<CongruenceScalars>,
}

impl JacobiNode {
    pub fn ric_f_along(&self, synthetic: SyntheticDimension) -> f64 {
        self.ric_along + self.hess_along + synthetic.df_coefficient() * self.f_prime * self.f_prime
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiEvolution {
    pub frame: PropagatedFrame,
    pub alpha: f64,
    pub nodes: Vec<JacobiNode>,
    /// The geodesic re-integrated jointly with the frame, with reparametrization channels.
    pub path: GeodesicPath,
    /// max |W(t) - W(t0)|, W = AᵀA′ - A′ᵀA.
    pub lagrange_drift: f64,
    /// max |A″ + T A| at segment midpoints.
    pub jacobi_residual: f64,
    pub truncated: bool,
    frame_rates: Vec<Vec<Vec<f64>>>,
}

fn matrix_from(slice: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, slice)
}

fn sigma_min(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.min()
}

fn lagrange(a: &DMatrix<f64>, ap: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * ap - ap.transpose() * a
}

/// Derived scalars, or None when A is numerically singular.
pub fn congruence_scalars(a: &DMatrix<f64>, a_prime: &DMatrix<f64>, f_prime: f64, alpha: f64) -> Option<CongruenceScalars> {
    let d = a.nrows();
    let scale = a.abs().max().max(1.0);
    if sigma_min(a) <= SINGULAR_TOL * scale {
        return None;
    }
    let b = a_prime * a.clone().try_inverse()?;
    let id = DMatrix::<f64>::identity(d, d);
    let b_f = &b - &id * (f_prime / alpha);
    let theta = b.trace();
    let theta_f = theta - f_prime;
    let sym = (&b_f + b_f.transpose()) * 0.5;
    let sigma_f = &sym - &id * (sym.trace() / d as f64);
    let sigma_sq = sigma_f.component_mul(&sigma_f).sum();
    let omega = (&b - b.transpose()) * 0.5;
    Some(CongruenceScalars { b, b_f, theta, theta_f, sigma_f, sigma_sq, omega, x_f: theta_f / alpha })
}

fn adapted_frame(model: &SpacetimeModel, mode: CongruenceMode, x: &[f64], v: &[f64]) -> Result<AdaptedFrame> {
    let jet = model.metric_at(x)?;
    match mode {
        CongruenceMode::Timelike => {
            let q = inner(&jet.g, v, v);
            if q >= 0.0 {
                return Err(GeometryError::WrongCausalType { expected: "timelike", got: "null or spacelike" });
            }
            let unit: Vec<f64> = v.iter().map(|c| c / (-q).sqrt()).collect();
            timelike_frame(&jet.g, &unit, 1e-9)
        }
        CongruenceMode::Null => null_frame(&jet.g, &jet.g_inv, v, CAUSAL_TOL),
    }
}

/// Transported vectors: the transverse basis, then L for null frames.
fn carried_vectors(frame: &AdaptedFrame) -> Vec<Vec<f64>> {
    match frame {
        AdaptedFrame::Timelike { spatial, .. } => spatial.clone(),
        AdaptedFrame::Null { transverse, screen, .. } => screen.iter().cloned().chain(std::iter::once(transverse.clone())).collect(),
    }
}

struct Layout {
    n: usize,
    d: usize,
    carried: usize,
    channels: usize,
}

impl Layout {
    fn frame(&self, j: usize) -> std::ops::Range<usize> {
        let s = 2 * self.n + j * self.n;
        s..s + self.n
    }
    fn a(&self) -> std::ops::Range<usize> {
        let s = 2 * self.n + self.carried * self.n;
        s..s + self.d * self.d
    }
    fn ap(&self) -> std::ops::Range<usize> {
        let s = self.a().end;
        s..s + self.d * self.d
    }
    fn channel(&self, c: usize) -> usize {
        self.ap().end + c
    }
    fn len(&self) -> usize {
        self.ap().end + self.channels
    }
}

fn tidal_at(bundle: &CurvatureBundle, basis: &[Vec<f64>], v: &[f64]) -> DMatrix<f64> {
    let t = bundle.tidal_matrix(basis, v);
    (&t + t.transpose()) * 0.5
}

/// Integrate A″ = -T A along the Levi-Civita geodesic `path` (re-integrated jointly with a
/// parallel frame) from A(t0) = a0, A′(t0) = a0p, given in frame components.
pub fn propagate_jacobi(
    model: &SpacetimeModel,
    path: &GeodesicPath,
    a0: &DMatrix<f64>,
    a0p: &DMatrix<f64>,
    mode: CongruenceMode,
) -> Result<JacobiEvolution> {
    if path.connection != ConnectionKind::LeviCivita {
        return Err(GeometryError::Invalid("Jacobi propagation needs a Levi-Civita geodesic".into()));
    }
    if CongruenceMode::of(path.causal_type)? != mode {
        return Err(GeometryError::WrongCausalType {
            expected: if mode == CongruenceMode::Timelike { "timelike" } else { "null" },
            got: path.causal_type.name(),
        });
    }
    let n = path.dim();
    if mode == CongruenceMode::Null && n < 3 {
        return Err(GeometryError::DimensionTooSmall { what: "a null congruence", min: 3, n });
    }
    let d = mode.rank(n);
    for m in [a0, a0p] {
        if m.nrows() != d || m.ncols() != d {
            return Err(GeometryError::CoordinateCount { expected: d, got: m.nrows() });
        }
    }
    let alpha = mode.alpha(n);
    let start = &path.nodes[0];
    let initial = adapted_frame(model, mode, &start.point, &start.velocity)?;
    let carried0 = carried_vectors(&initial);
    let alphas = crate::geodesic::default_alphas(n);
    let lay = Layout { n, d, carried: carried0.len(), channels: alphas.len() };

    let mut y0 = vec![0.0; lay.len()];
    y0[..n].copy_from_slice(&start.point);
    y0[n..2 * n].copy_from_slice(&start.velocity);
    for (j, e) in carried0.iter().enumerate() {
        y0[lay.frame(j)].copy_from_slice(e);
    }
    y0[lay.a()].copy_from_slice(a0.transpose().as_slice());
    y0[lay.ap()].copy_from_slice(a0p.transpose().as_slice());

    let frame_of = |y: &[f64]| -> Vec<Vec<f64>> { (0..lay.carried).map(|j| y[lay.frame(j)].to_vec()).collect() };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (x, v) = (&y[..n], &y[n..2 * n]);
        let bundle = curvature_at(model, x)?;
        let acc = christoffel_pair(&bundle.metric, v, v);
        dy[..n].copy_from_slice(v);
        for k in 0..n {
            dy[n + k] = -acc[k];
        }
        let frame = frame_of(y);
        for (j, e) in frame.iter().enumerate() {
            let ge = christoffel_pair(&bundle.metric, v, e);
            for (slot, g) in dy[lay.frame(j)].iter_mut().zip(ge) {
                *slot = -g;
            }
        }
        let t = tidal_at(&bundle, &frame[..d], v);
        let a = matrix_from(&y[lay.a()], d);
        let app = -(t * a);
        dy[lay.a()].copy_from_slice(&y[lay.ap()]);
        dy[lay.ap()].copy_from_slice(app.transpose().as_slice());
        for (c, al) in alphas.iter().enumerate() {
            dy[lay.channel(c)] = (-2.0 * bundle.potential / al).exp();
        }
        Ok(())
    };
    let sol = integrate(rhs, path.start(), &y0, path.end(), &path.control, |y| model.contains(&y[..n]))?;

    let g0 = model.metric_matrix(&start.point)?;
    let gram_of = |g: &DMatrix<f64>, v: &[f64], frame: &[Vec<f64>]| -> DMatrix<f64> {
        let all: Vec<&[f64]> = std::iter::once(v).chain(frame.iter().map(|e| e.as_slice())).collect();
        DMatrix::from_fn(all.len(), all.len(), |i, j| inner(g, all[i], all[j]))
    };
    let gram0 = gram_of(&g0, &start.velocity, &carried0);
    let w0 = lagrange(a0, a0p);

    let mut nodes = Vec::with_capacity(sol.len());
    let mut path_nodes = Vec::with_capacity(sol.len());
    let mut frame_rates = Vec::with_capacity(sol.len());
    let mut gram_drift: f64 = 0.0;
    let mut lagrange_drift: f64 = 0.0;
    for ((t, y), dy) in sol.t.iter().zip(&sol.y).zip(&sol.dy) {
        let (x, v) = (&y[..n], &y[n..2 * n]);
        let acc = &dy[n..2 * n];
        let bundle = curvature_at(model, x)?;
        let frame = frame_of(y);
        gram_drift = gram_drift.max((gram_of(&bundle.metric.g, v, &frame) - &gram0).abs().max());
        let a = matrix_from(&y[lay.a()], d);
        let ap = matrix_from(&y[lay.ap()], d);
        let app = matrix_from(&dy[lay.ap()], d);
        lagrange_drift = lagrange_drift.max((lagrange(&a, &ap) - &w0).abs().max());
        let fj = model.potential().jet(x)?;
        let f_prime: f64 = fj.gradient.iter().zip(v).map(|(p, q)| p * q).sum();
        let mut f_second: f64 = fj.gradient.iter().zip(acc).map(|(p, q)| p * q).sum();
        for i in 0..n {
            for k in 0..n {
                f_second += fj.hessian(i, k) * v[i] * v[k];
            }
        }
        let tidal = tidal_at(&bundle, &frame[..d], v);
        let scalars = congruence_scalars(&a, &ap, f_prime, alpha);
        nodes.push(JacobiNode {
            param: *t,
            point: x.to_vec(),
            velocity: v.to_vec(),
            transverse: frame[..d].to_vec(),
            det: a.determinant(),
            sigma_min: sigma_min(&a),
            a,
            a_prime: ap,
            a_second: app,
            tidal,
            potential: fj.value,
            f_prime,
            f_second,
            hess_along: bundle.hess_along(v, v),
            ric_along: CurvatureBundle::bilinear(&bundle.ricci, v, v),
            scalars,
        });
        path_nodes.push(PathNode { param: *t, point: x.to_vec(), velocity: v.to_vec(), acceleration: acc.to_vec() });
        frame_rates.push((0..lay.carried).map(|j| dy[lay.frame(j)].to_vec()).collect());
    }
    let channels = alphas
        .iter()
        .enumerate()
        .map(|(c, al)| WeightChannel {
            alpha: *al,
            values: sol.y.iter().map(|y| y[lay.channel(c)]).collect(),
            rates: sol.dy.iter().map(|dy| dy[lay.channel(c)]).collect(),
        })
        .collect();
    let joint = GeodesicPath {
        connection: ConnectionKind::LeviCivita,
        causal_type: path.causal_type,
        nodes: path_nodes,
        truncated: sol.truncated,
        control: path.control,
        channels,
    };
    let mut evo = JacobiEvolution {
        frame: PropagatedFrame { mode, rank: d, initial, gram_drift },
        alpha,
        nodes,
        path: joint,
        lagrange_drift,
        jacobi_residual: 0.0,
        truncated: sol.truncated,
        frame_rates,
    };
    evo.jacobi_residual = evo.midpoint_jacobi_residual(model)?;
    Ok(evo)
}

impl JacobiEvolution {
    pub fn mode(&self) -> CongruenceMode {
        self.frame.mode
    }

    pub fn rank(&self) -> usize {
        self.frame.rank
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    /// A, A′, A″ at parameter t (quintic Hermite on each entry).
    pub fn a_at(&self, t: f64) -> [DMatrix<f64>; 3] {
        let d = self.rank();
        if self.nodes.len() == 1 {
            let p = &self.nodes[0];
            return [p.a.clone(), p.a_prime.clone(), p.a_second.clone()];
        }
        let k = self.path.segment(t);
        let (l, r) = (&self.nodes[k], &self.nodes[k + 1]);
        let mut out = [DMatrix::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
        for i in 0..d {
            for j in 0..d {
                let v = quintic_hermite_eval(
                    l.param,
                    r.param,
                    [l.a[(i, j)], l.a_prime[(i, j)], l.a_second[(i, j)]],
                    [r.a[(i, j)], r.a_prime[(i, j)], r.a_second[(i, j)]],
                    t,
                );
                for (m, val) in out.iter_mut().zip(v) {
                    m[(i, j)] = val;
                }
            }
        }
        out
    }

    /// Transverse frame at parameter t (cubic Hermite with the transport rates).
    pub fn frame_at(&self, t: f64) -> Vec<Vec<f64>> {
        let k = self.path.segment(t).min(self.nodes.len().saturating_sub(2));
        if self.nodes.len() == 1 {
            return self.nodes[0].transverse.clone();
        }
        let (l, r) = (&self.nodes[k], &self.nodes[k + 1]);
        let (rl, rr) = (&self.frame_rates[k], &self.frame_rates[k + 1]);
        (0..self.rank())
            .map(|j| {
                (0..l.point.len())
                    .map(|i| hermite_eval(l.param, r.param, l.transverse[j][i], r.transverse[j][i], rl[j][i], rr[j][i], t).0)
                    .collect()
            })
            .collect()
    }

    /// Tidal matrix at an interpolated parameter.
    pub fn tidal_at(&self, model: &SpacetimeModel, t: f64) -> Result<DMatrix<f64>> {
        let st = self.path.state_at(t);
        let bundle = curvature_at(model, &st.point)?;
        Ok(tidal_at(&bundle, &self.frame_at(t), &st.velocity))
    }

    fn midpoint_jacobi_residual(&self, model: &SpacetimeModel) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.nodes.windows(2) {
            let t = 0.5 * (w[0].param + w[1].param);
            let [a, _, app] = self.a_at(t);
            let tidal = self.tidal_at(model, t)?;
            worst = worst.max((app + tidal * a).abs().max());
        }
        Ok(worst)
    }

    /// The s-parameter table for weight α along the joint path.
    pub fn reparam(&self, model: &SpacetimeModel, alpha: f64) -> Result<crate::geodesic::ReparamTable> {
        crate::geodesic::reparametrize(model, &self.path, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaychaudhuriReport {
    pub synthetic_dimension: SyntheticDimension,
    /// Coefficient of f′² in the normalized equation, (N-a)/((N-n)α²); exactly 0 at N = a.
    pub f_prime_sq_coefficient: f64,
    /// max |x_f′ - RHS| in the normalized scalar form.
    pub scalar_residual: f64,
    /// max entry of |B_f′ + R_f + B_f² + (2f′/α)B_f|.
    pub riccati_residual: f64,
    /// max |e^{-2f/α}(e^{2f/α}x_f)′ + x_f² - RHS|.
    pub integrating_factor_residual: f64,
    /// max |θ_f′ - RHS| in the unnormalized form.
    pub theta_residual: f64,
    pub nodes_checked: usize,
    pub max_vorticity: f64,
}

/// Raychaudhuri and Riccati residuals at every node where A is invertible.
pub fn raychaudhuri_residual(evo: &JacobiEvolution, synthetic: SyntheticDimension) -> Result<RaychaudhuriReport> {
    let n = evo.dim();
    synthetic.check_dim(n)?;
    let a = evo.mode().shift() as f64;
    let alpha = evo.alpha;
    let coef = synthetic.shifted_ratio(a) / (alpha * alpha);
    let mut report = RaychaudhuriReport {
        synthetic_dimension: synthetic,
        f_prime_sq_coefficient: coef,
        scalar_residual: 0.0,
        riccati_residual: 0.0,
        integrating_factor_residual: 0.0,
        theta_residual: 0.0,
        nodes_checked: 0,
        max_vorticity: 0.0,
    };
    for node in &evo.nodes {
        let Some(s) = &node.scalars else { continue };
        report.max_vorticity = report.max_vorticity.max(s.omega.abs().max());
        let d = evo.rank();
        let id = DMatrix::<f64>::identity(d, d);
        let a_inv = node.a.clone().try_inverse().ok_or_else(|| GeometryError::Degenerate(node.point.clone()))?;
        let b_prime = &node.a_second * &a_inv - &s.b * &s.b;
        let bf_prime = &b_prime - &id * (node.f_second / alpha);
        let fp = node.f_prime;
        let ric_f = node.ric_f_along(synthetic);

        let x_prime = (b_prime.trace() - node.f_second) / alpha;
        let rhs = -(ric_f + s.sigma_sq) / alpha - s.x_f * s.x_f - 2.0 * s.x_f * fp / alpha - coef * fp * fp;
        let scale = 1.0 + s.x_f * s.x_f;
        report.scalar_residual = report.scalar_residual.max((x_prime - rhs).abs() / scale);

        let theta_prime = b_prime.trace() - node.f_second;
        let theta_rhs = -ric_f
            - s.sigma_sq
            - (s.theta_f * s.theta_f + 2.0 * s.theta_f * fp + synthetic.shifted_ratio(a) * fp * fp) / alpha;
        report.theta_residual = report.theta_residual.max((theta_prime - theta_rhs).abs() / (1.0 + s.theta_f * s.theta_f));

        let r_f = weighted_tidal(&node.tidal, node.hess_along, fp, alpha);
        let ric = &bf_prime + &r_f + &s.b_f * &s.b_f + &s.b_f * (2.0 * fp / alpha);
        let b_scale = 1.0 + s.b_f.abs().max().powi(2);
        report.riccati_residual = report.riccati_residual.max(ric.abs().max() / b_scale);

        // (e^{2f/α} x_f)′ from the product rule.
        let w = (2.0 * node.potential / alpha).exp();
        let y_prime = w * (x_prime + 2.0 * fp / alpha * s.x_f);
        let lhs = y_prime / w + s.x_f * s.x_f;
        let rhs_if = -(ric_f + s.sigma_sq) / alpha - coef * fp * fp;
        report.integrating_factor_residual = report.integrating_factor_residual.max((lhs - rhs_if).abs() / scale);
        report.nodes_checked += 1;
    }
    if report.max_vorticity > VORTICITY_TOL {
        return Err(GeometryError::Invalid(format!(
            "congruence has vorticity {:.3e}; the Raychaudhuri check assumes a vorticity-free congruence",
            report.max_vorticity
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate_geodesic;
    use crate::ode::IntegrationControl;
    use crate::spacetime::{build_spacetime, Builtin, SpacetimeSpec, TangentVector};

    pub(crate) fn model(b: Builtin) -> SpacetimeModel {
        build_spacetime(&SpacetimeSpec::Builtin(b)).unwrap()
    }

    pub(crate) fn geodesic(m: &SpacetimeModel, x: Vec<f64>, v: Vec<f64>, span: (f64, f64)) -> GeodesicPath {
        let init = TangentVector::new(x, v).unwrap();
        integrate_geodesic(m, ConnectionKind::LeviCivita, &init, span, &IntegrationControl::default()).unwrap()
    }

    pub(crate) fn point_congruence(m: &SpacetimeModel, path: &GeodesicPath, mode: CongruenceMode) -> JacobiEvolution {
        let d = mode.rank(m.dim());
        propagate_jacobi(m, path, &DMatrix::zeros(d, d), &DMatrix::identity(d, d), mode).unwrap()
    }

    /// Circular AdS orbit r = 1 on the equator, dφ/dt = 1, unit speed.
    pub(crate) fn ads_orbit(span: f64) -> (SpacetimeModel, GeodesicPath) {
        let m = model(Builtin::AntiDeSitter { n: 4 });
        let p = geodesic(&m, vec![-1.6, 1.0, std::f64::consts::FRAC_PI_2, -1.6], vec![1.0, 0.0, 0.0, 1.0], (0.0, span));
        (m, p)
    }

    #[test]
    fn flat_point_congruence() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 2.0));
        let evo = point_congruence(&m, &p, CongruenceMode::Timelike);
        for node in evo.nodes.iter().skip(1) {
            let t = node.param;
            assert!((&node.a - DMatrix::identity(3, 3) * t).abs().max() < 1e-12);
            let s = node.scalars.as_ref().unwrap();
            assert!((s.theta - 3.0 / t).abs() < 1e-9 * (1.0 + 3.0 / t));
            assert_eq!(s.theta, s.theta_f);
        }
        let r = raychaudhuri_residual(&evo, SyntheticDimension::infinite(4)).unwrap();
        assert!(r.scalar_residual < 1e-12 && r.riccati_residual < 1e-12);
    }

    #[test]
    fn flat_null_screen() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 1.0, 0.0, 0.0], (0.0, 2.0));
        let evo = point_congruence(&m, &p, CongruenceMode::Null);
        assert_eq!(evo.rank(), 2);
        let last = evo.nodes.last().unwrap();
        assert!((&last.a - DMatrix::identity(2, 2) * 2.0).abs().max() < 1e-12);
        assert!(evo.frame.gram_drift < 1e-12);
    }

    #[test]
    fn de_sitter_sinh_growth() {
        let m = model(Builtin::DeSitter { n: 4 });
        let p = geodesic(&m, vec![0.0, 1.0, 1.2, 0.3], vec![1.0, 0.0, 0.0, 0.0], (0.0, 3.0));
        let evo = point_congruence(&m, &p, CongruenceMode::Timelike);
        for node in evo.nodes.iter().filter(|n| n.param > 0.1) {
            let t = node.param;
            assert!((&node.a - DMatrix::identity(3, 3) * t.sinh()).abs().max() < 1e-6 * t.sinh());
            let s = node.scalars.as_ref().unwrap();
            assert!((s.theta - 3.0 / t.tanh()).abs() < 1e-6);
        }
        assert!(evo.frame.gram_drift < 1e-9);
        assert!(evo.jacobi_residual < 1e-6, "{}", evo.jacobi_residual);
        let r = raychaudhuri_residual(&evo, SyntheticDimension::infinite(4)).unwrap();
        assert!(r.scalar_residual < 1e-6 && r.theta_residual < 1e-6);
    }

    #[test]
    fn anti_de_sitter_sine() {
        let (m, p) = ads_orbit(3.0);
        let evo = point_congruence(&m, &p, CongruenceMode::Timelike);
        for node in evo.nodes.iter().filter(|n| n.param > 0.1) {
            let t = node.param;
            assert!((&node.a - DMatrix::identity(3, 3) * t.sin()).abs().max() < 1e-6, "{t}");
            let s = node.scalars.as_ref().unwrap();
            assert!((s.theta - 3.0 / t.tan()).abs() < 1e-6 * (1.0 + 1.0 / t.tan().powi(2)));
        }
        assert!(evo.lagrange_drift < 1e-9);
        assert!(evo.jacobi_residual < 1e-6, "{}", evo.jacobi_residual);
    }

    #[test]
    fn linear_potential_coefficient_vanishes_at_one() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "t".into() });
        let p = geodesic(&m, vec![0.0; 4], [1.0, 0.2, 0.0, 0.0].iter().map(|x| x / (0.96f64).sqrt()).collect(), (0.0, 2.0));
        let evo = point_congruence(&m, &p, CongruenceMode::Timelike);
        let r = raychaudhuri_residual(&evo, SyntheticDimension::finite(1.0, 4).unwrap()).unwrap();
        assert_eq!(r.f_prime_sq_coefficient, 0.0);
        assert!(r.scalar_residual < 1e-7 && r.riccati_residual < 1e-7 && r.integrating_factor_residual < 1e-7);
    }

    #[test]
    fn shape_mismatch_and_wrong_mode() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        assert!(propagate_jacobi(&m, &p, &DMatrix::zeros(2, 2), &DMatrix::identity(2, 2), CongruenceMode::Timelike).is_err());
        assert!(propagate_jacobi(&m, &p, &DMatrix::zeros(2, 2), &DMatrix::identity(2, 2), CongruenceMode::Null).is_err());
    }
}
