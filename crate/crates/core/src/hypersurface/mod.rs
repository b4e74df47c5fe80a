//! Parametrized hypersurfaces and codimension-2 surfaces: second fundamental forms, mean
//! curvature and null expansions, f-trapped verdicts, the product-splitting identities and the
//! Laplacian comparison on closed-form distance functions.

mod laplacian;
mod splitting;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::expr::{parse_expr, Expression};
use crate::frame::observer;
use crate::geodesic::christoffel_pair;
use crate::spacetime::{inner, SpacetimeModel};

pub use laplacian::{laplacian_comparison_check, LaplacianReport};
pub use splitting::{splitting_diagnostics, SplittingReport, SPLIT_TOL};

/// Eigenvalues of h below this fraction of the largest count as degenerate directions.
const DEGENERACY_TOL: f64 = 1e-10;
/// Umbilicity and total geodesy threshold.
pub const UMBILIC_TOL: f64 = 1e-8;
const NORMAL_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceCausality {
    Spacelike,
    Null,
}

/// Scaling of the two null normals of a codimension-2 surface, with T the future unit normal
/// and R the outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullNormalization {
    /// ℓ± = (T ± R)/√2, so g(ℓ₊, ℓ₋) = -1.
    #[default]
    Symmetric,
    /// ℓ± = T ± R, so g(ℓ₊, ℓ₋) = -2 and each has unit time component relative to T.
    TimeUnit,
}

/// Embedding x = Φ(u) of a hypersurface (n-1 parameters, spacelike or null) or a spacelike
/// surface (n-2 parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypersurface {
    params: Vec<String>,
    embedding: Vec<Expression>,
    causality: SurfaceCausality,
    domain: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    /// Reference direction for the outgoing normal; defaults to the spatial part of Φ.
    outward: Option<Vec<Expression>>,
    normalization: NullNormalization,
}

impl Hypersurface {
    pub fn new(params: &[&str], embedding: &[&str], causality: SurfaceCausality, domain: Vec<(f64, f64)>) -> Result<Self> {
        let params: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        if domain.len() != params.len() {
            return Err(GeometryError::CoordinateCount { expected: params.len(), got: domain.len() });
        }
        let embedding = embedding.iter().map(|s| parse_expr(s, &params)).collect::<std::result::Result<_, _>>()?;
        let periodic = vec![false; params.len()];
        Ok(Self { params, embedding, causality, domain, periodic, outward: None, normalization: NullNormalization::default() })
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Result<Self> {
        if periodic.len() != self.params.len() {
            return Err(GeometryError::CoordinateCount { expected: self.params.len(), got: periodic.len() });
        }
        self.periodic = periodic;
        Ok(self)
    }

    pub fn with_outward(mut self, outward: &[&str]) -> Result<Self> {
        let exprs = outward.iter().map(|s| parse_expr(s, &self.params)).collect::<std::result::Result<_, _>>()?;
        self.outward = Some(exprs);
        Ok(self)
    }

    pub fn with_normalization(mut self, normalization: NullNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn causality(&self) -> SurfaceCausality {
        self.causality
    }

    pub fn normalization(&self) -> NullNormalization {
        self.normalization
    }

    pub fn position(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.embedding.iter().map(|e| e.eval(u)).collect::<std::result::Result<_, _>>()?)
    }

    fn check(&self, model: &SpacetimeModel) -> Result<usize> {
        let n = model.dim();
        if self.embedding.len() != n {
            return Err(GeometryError::CoordinateCount { expected: n, got: self.embedding.len() });
        }
        let k = self.params.len();
        let ok = match self.causality {
            SurfaceCausality::Spacelike => k + 1 == n || k + 2 == n,
            SurfaceCausality::Null => k + 1 == n,
        };
        if !ok || k == 0 {
            return Err(GeometryError::Invalid(format!(
                "a {} embedding in dimension {n} needs {} parameters, got {k}",
                if self.causality == SurfaceCausality::Null { "null" } else { "spacelike" },
                if self.causality == SurfaceCausality::Null { format!("{}", n - 1) } else { format!("{} or {}", n - 1, n - 2) }
            )));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalRole {
    /// Future unit timelike normal of a spacelike hypersurface.
    Timelike,
    /// Future null normal of a null hypersurface, scaled so that g(ℓ, e0) = -1.
    NullGenerator,
    Outgoing,
    Ingoing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalShape {
    pub role: NormalRole,
    pub vector: Vec<f64>,
    /// K(x, y) = -g(ν, ∇_x y) in the coordinate tangent basis ∂_a Φ.
    #[serde(skip)]
    pub second_form: DMatrix<f64>,
    /// Trace of K over the induced metric (over the screen for null hypersurfaces).
    pub mean: f64,
    /// Trace of x ↦ ∇_x ν along the surface, from the normal field at neighbouring parameters.
    pub mean_divergence: f64,
    /// mean - g(∇f, ν)
    pub mean_f: f64,
    /// Norm of the trace-free part of K with respect to h.
    pub trace_free_norm: f64,
    pub umbilic: bool,
    pub totally_geodesic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeData {
    pub params: Vec<f64>,
    pub point: Vec<f64>,
    #[serde(skip)]
    pub induced: DMatrix<f64>,
    pub normals: Vec<NormalShape>,
    pub normalization: Option<NullNormalization>,
}

impl ShapeData {
    /// H of a hypersurface.
    pub fn mean(&self) -> Option<f64> {
        (self.normals.len() == 1).then(|| self.normals[0].mean)
    }

    pub fn mean_f(&self) -> Option<f64> {
        (self.normals.len() == 1).then(|| self.normals[0].mean_f)
    }

    /// (θ₊, θ₋) of a codimension-2 surface.
    pub fn theta_pair(&self) -> Option<(f64, f64)> {
        (self.normals.len() == 2).then(|| (self.normals[0].mean, self.normals[1].mean))
    }

    pub fn theta_f_pair(&self) -> Option<(f64, f64)> {
        (self.normals.len() == 2).then(|| (self.normals[0].mean_f, self.normals[1].mean_f))
    }
}

/// Orthogonal complement of the tangent space: a basis of {v : g(v, ∂_a Φ) = 0}.
fn normal_space(g: &DMatrix<f64>, tangents: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = g.nrows();
    let k = tangents.len();
    let rows: DMatrix<f64> = DMatrix::from_fn(k, n, |a, j| (0..n).map(|i| tangents[a][i] * g[(i, j)]).sum());
    // Null space of rows via the eigenvectors of rowsᵀrows with the smallest eigenvalues.
    let gram = rows.transpose() * &rows;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if eig.eigenvalues[order[n - k]] <= 1e-20 * top.max(1e-300) {
        return Err(GeometryError::Invalid("embedding Jacobian is rank deficient".into()));
    }
    Ok(order[..n - k].iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect())
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| x * c).collect()
}

fn combine(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Normals at u, each with its role, in a canonical (basis-independent) scaling.
fn normals_at(model: &SpacetimeModel, surf: &Hypersurface, u: &[f64], tangents: &[Vec<f64>]) -> Result<Vec<(NormalRole, Vec<f64>)>> {
    let x = surf.position(u)?;
    let jet = model.metric_at(&x)?;
    let g = &jet.g;
    let e0 = observer(g, &jet.g_inv);
    let basis = normal_space(g, tangents)?;
    match (surf.causality, basis.len()) {
        (SurfaceCausality::Spacelike, 1) => {
            let v = &basis[0];
            let q = inner(g, v, v);
            if q >= 0.0 {
                return Err(GeometryError::Invalid(format!("normal of a spacelike hypersurface is not timelike at {u:?}")));
            }
            let sign = if inner(g, v, &e0) < 0.0 { 1.0 } else { -1.0 };
            Ok(vec![(NormalRole::Timelike, scaled(v, sign / (-q).sqrt()))])
        }
        (SurfaceCausality::Null, 1) => {
            let v = &basis[0];
            let c = inner(g, v, &e0);
            if c.abs() < 1e-14 {
                return Err(GeometryError::ZeroVector);
            }
            Ok(vec![(NormalRole::NullGenerator, scaled(v, -1.0 / c))])
        }
        (SurfaceCausality::Spacelike, 2) => {
            // T: normalized projection of the observer onto the normal plane.
            let gram = DMatrix::from_fn(2, 2, |i, j| inner(g, &basis[i], &basis[j]));
            let inv = gram.clone().try_inverse().ok_or_else(|| GeometryError::Degenerate(x.clone()))?;
            let rhs = [inner(g, &basis[0], &e0), inner(g, &basis[1], &e0)];
            let c0 = inv[(0, 0)] * rhs[0] + inv[(0, 1)] * rhs[1];
            let c1 = inv[(1, 0)] * rhs[0] + inv[(1, 1)] * rhs[1];
            let p = combine(&basis[0], c0, &basis[1], c1);
            let qp = inner(g, &p, &p);
            if qp >= 0.0 {
                return Err(GeometryError::Invalid(format!("normal plane is not Lorentzian at {u:?}")));
            }
            let t = scaled(&p, 1.0 / (-qp).sqrt());
            // R: the unit normal orthogonal to T, oriented along the outward reference.
            let pick = if inner(g, &basis[0], &t).abs() <= inner(g, &basis[1], &t).abs() { 0 } else { 1 };
            let b = &basis[pick];
            let r_raw = combine(b, 1.0, &t, inner(g, b, &t));
            let r = scaled(&r_raw, 1.0 / inner(g, &r_raw, &r_raw).sqrt());
            let reference: Vec<f64> = match &surf.outward {
                Some(e) => e.iter().map(|c| c.eval(u)).collect::<std::result::Result<_, _>>()?,
                None => std::iter::once(0.0).chain(x[1..].iter().copied()).collect(),
            };
            let orient = inner(g, &r, &reference);
            if orient.abs() < 1e-12 {
                return Err(GeometryError::Invalid(format!("outward reference is tangent to the surface at {u:?}")));
            }
            let r = scaled(&r, orient.signum());
            let c = match surf.normalization {
                NullNormalization::Symmetric => std::f64::consts::FRAC_1_SQRT_2,
                NullNormalization::TimeUnit => 1.0,
            };
            Ok(vec![
                (NormalRole::Outgoing, scaled(&combine(&t, 1.0, &r, 1.0), c)),
                (NormalRole::Ingoing, scaled(&combine(&t, 1.0, &r, -1.0), c)),
            ])
        }
        (c, k) => Err(GeometryError::Invalid(format!("{k}-dimensional normal space for a {c:?} embedding"))),
    }
}

/// Trace of K with respect to h, restricted to the nondegenerate directions of h.
fn trace_over(h: &DMatrix<f64>, k: &DMatrix<f64>, expected_kernel: usize, point: &[f64]) -> Result<(f64, f64)> {
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut trace = 0.0;
    let mut kernel = 0;
    let mut screen = Vec::new();
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= DEGENERACY_TOL * top {
            kernel += 1;
            continue;
        }
        if *lam < 0.0 {
            return Err(GeometryError::Invalid(format!("induced metric is not positive semidefinite at {point:?}")));
        }
        let v = eig.eigenvectors.column(i);
        screen.push((v.clone_owned() / lam.sqrt(), *lam));
        trace += (v.transpose() * k * v)[(0, 0)] / lam;
    }
    if kernel != expected_kernel {
        return Err(GeometryError::Degenerate(point.to_vec()));
    }
    // Trace-free norm in the h-orthonormal screen basis.
    let d = screen.len();
    let m = DMatrix::from_fn(d, d, |a, b| (screen[a].0.transpose() * k * &screen[b].0)[(0, 0)]);
    let tf = &m - DMatrix::identity(d, d) * (trace / d as f64);
    Ok((trace, tf.norm()))
}

/// Tangent vectors ∂_aΦ and, per ambient component, the parameter Hessian of Φ.
type TangentData = (Vec<Vec<f64>>, Vec<DMatrix<f64>>);

fn tangent_basis(surf: &Hypersurface, u: &[f64]) -> Result<TangentData> {
    let k = u.len();
    let jets = surf.embedding.iter().map(|e| e.jet(u)).collect::<std::result::Result<Vec<_>, _>>()?;
    let tangents = (0..k).map(|a| jets.iter().map(|j| j.gradient[a]).collect()).collect();
    let hessians = jets.iter().map(|j| DMatrix::from_fn(k, k, |a, b| j.hessian(a, b))).collect();
    Ok((tangents, hessians))
}

/// Second fundamental forms, mean curvatures and null expansions at parameters `u`.
pub fn shape_at(model: &SpacetimeModel, surf: &Hypersurface, u: &[f64]) -> Result<ShapeData> {
    let k = surf.check(model)?;
    if u.len() != k {
        return Err(GeometryError::CoordinateCount { expected: k, got: u.len() });
    }
    let n = model.dim();
    let x = surf.position(u)?;
    let jet = model.metric_at(&x)?;
    let g = &jet.g;
    let (tangents, hess) = tangent_basis(surf, u)?;
    let h = DMatrix::from_fn(k, k, |a, b| inner(g, &tangents[a], &tangents[b]));
    let kernel = usize::from(surf.causality == SurfaceCausality::Null);
    let normals = normals_at(model, surf, u, &tangents)?;
    // ∇_{∂a} ∂b Φ = ∂a∂bΦ + Γ(∂aΦ, ∂bΦ)
    let second: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    let gamma = christoffel_pair(&jet, &tangents[a], &tangents[b]);
                    (0..n).map(|i| hess[i][(a, b)] + gamma[i]).collect()
                })
                .collect()
        })
        .collect();
    // Normal fields at shifted parameters for the divergence route.
    let mut shifted = Vec::with_capacity(k);
    for a in 0..k {
        let mut side = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut v = u.to_vec();
            v[a] += sign * NORMAL_STEP;
            let (tv, _) = tangent_basis(surf, &v)?;
            side.push(normals_at(model, surf, &v, &tv)?);
        }
        shifted.push(side);
    }
    let fj = model.potential().jet(&x)?;
    let mut out = Vec::with_capacity(normals.len());
    for (idx, (role, nu)) in normals.into_iter().enumerate() {
        let kform = DMatrix::from_fn(k, k, |a, b| -inner(g, &nu, &second[a][b]));
        let (mean, trace_free_norm) = trace_over(&h, &kform, kernel, &x)?;
        // g(∇_a ν, ∂_b Φ) with ∂_a ν by central differences.
        let dnu = DMatrix::from_fn(k, k, |a, b| {
            let plus = &shifted[a][0][idx].1;
            let minus = &shifted[a][1][idx].1;
            let d: Vec<f64> = plus.iter().zip(minus).map(|(p, m)| (p - m) / (2.0 * NORMAL_STEP)).collect();
            let gamma = christoffel_pair(&jet, &tangents[a], &nu);
            let cov: Vec<f64> = d.iter().zip(&gamma).map(|(p, q)| p + q).collect();
            inner(g, &cov, &tangents[b])
        });
        let sym = (&dnu + dnu.transpose()) * 0.5;
        let (mean_divergence, _) = trace_over(&h, &sym, kernel, &x)?;
        let df_nu: f64 = fj.gradient.iter().zip(&nu).map(|(p, q)| p * q).sum();
        let umbilic = trace_free_norm < UMBILIC_TOL;
        out.push(NormalShape {
            role,
            vector: nu,
            second_form: kform,
            mean,
            mean_divergence,
            mean_f: mean - df_nu,
            trace_free_norm,
            umbilic,
            totally_geodesic: umbilic && mean.abs() < UMBILIC_TOL,
        });
    }
    let normalization = (out.len() == 2).then_some(surf.normalization);
    Ok(ShapeData { params: u.to_vec(), point: x, induced: h, normals: out, normalization })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrappedVerdict {
    /// Both θ_f negative everywhere.
    FutureTrapped,
    /// Both θ_f positive everywhere.
    PastTrapped,
    NotTrapped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappedReport {
    pub verdict: TrappedVerdict,
    /// Verdict from the unshifted expansions.
    pub ordinary: TrappedVerdict,
    /// min over samples of min(-θ_f₊, -θ_f₋); positive iff both are negative everywhere.
    pub negative_margin: f64,
    /// min over samples of min(θ_f₊, θ_f₋).
    pub positive_margin: f64,
    pub samples: usize,
    pub normalization: NullNormalization,
    /// (params, θ_f₊, θ_f₋) at every sample.
    pub values: Vec<(Vec<f64>, f64, f64)>,
}

fn verdict(neg: f64, pos: f64) -> TrappedVerdict {
    if neg > 0.0 {
        TrappedVerdict::FutureTrapped
    } else if pos > 0.0 {
        TrappedVerdict::PastTrapped
    } else {
        TrappedVerdict::NotTrapped
    }
}

/// Sample a codimension-2 surface on a `resolution`^k grid of cell centres and decide whether
/// its f-expansions share a strict sign.
pub fn trapped_check(model: &SpacetimeModel, surf: &Hypersurface, resolution: usize) -> Result<TrappedReport> {
    let k = surf.check(model)?;
    if k + 2 != model.dim() {
        return Err(GeometryError::Invalid("trapped check needs a codimension-2 surface".into()));
    }
    if resolution == 0 {
        return Err(GeometryError::Invalid("resolution must be positive".into()));
    }
    let total = resolution.pow(k as u32);
    let mut report = TrappedReport {
        verdict: TrappedVerdict::NotTrapped,
        ordinary: TrappedVerdict::NotTrapped,
        negative_margin: f64::INFINITY,
        positive_margin: f64::INFINITY,
        samples: 0,
        normalization: surf.normalization,
        values: Vec::with_capacity(total),
    };
    let (mut neg0, mut pos0) = (f64::INFINITY, f64::INFINITY);
    for idx in 0..total {
        let mut rest = idx;
        let u: Vec<f64> = surf
            .domain
            .iter()
            .map(|(lo, hi)| {
                let i = rest % resolution;
                rest /= resolution;
                lo + (hi - lo) * (i as f64 + 0.5) / resolution as f64
            })
            .collect();
        let shape = shape_at(model, surf, &u)?;
        let (tp, tm) = shape.theta_pair().unwrap_or_default();
        let (fp, fm) = shape.theta_f_pair().unwrap_or_default();
        report.negative_margin = report.negative_margin.min((-fp).min(-fm));
        report.positive_margin = report.positive_margin.min(fp.min(fm));
        neg0 = neg0.min((-tp).min(-tm));
        pos0 = pos0.min(tp.min(tm));
        report.values.push((u, fp, fm));
        report.samples += 1;
    }
    report.verdict = verdict(report.negative_margin, report.positive_margin);
    report.ordinary = verdict(neg0, pos0);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{build_spacetime, Builtin, SpacetimeSpec};

    pub(crate) fn model(b: Builtin) -> SpacetimeModel {
        build_spacetime(&SpacetimeSpec::Builtin(b)).unwrap()
    }

    fn sphere(r: f64) -> Hypersurface {
        let x = format!("{r}*sin(th)*cos(ph)");
        let y = format!("{r}*sin(th)*sin(ph)");
        let z = format!("{r}*cos(th)");
        Hypersurface::new(&["th", "ph"], &["0", &x, &y, &z], SurfaceCausality::Spacelike, vec![(0.0, std::f64::consts::PI), (-3.2, 3.2)])
            .unwrap()
            .with_periodic(vec![false, true])
            .unwrap()
    }

    #[test]
    fn flat_slice_is_totally_geodesic() {
        let m = model(Builtin::Minkowski { n: 4 });
        let s = Hypersurface::new(&["a", "b", "c"], &["0", "a", "b", "c"], SurfaceCausality::Spacelike, vec![(-1.0, 1.0); 3]).unwrap();
        let sh = shape_at(&m, &s, &[0.2, -0.1, 0.4]).unwrap();
        assert_eq!(sh.mean(), Some(0.0));
        assert_eq!(sh.mean_f(), Some(0.0));
        assert!(sh.normals[0].totally_geodesic);
        assert!((sh.normals[0].vector[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn round_sphere_expansions() {
        let m = model(Builtin::Minkowski { n: 4 });
        for r in [0.5, 1.0, 3.0] {
            for (norm, scale) in [(NullNormalization::TimeUnit, 1.0), (NullNormalization::Symmetric, std::f64::consts::FRAC_1_SQRT_2)] {
                let s = sphere(r).with_normalization(norm);
                let sh = shape_at(&m, &s, &[1.1, 0.4]).unwrap();
                let (tp, tm) = sh.theta_pair().unwrap();
                assert!((tp - 2.0 * scale / r).abs() < 1e-10 && (tm + 2.0 * scale / r).abs() < 1e-10, "{tp} {tm}");
                for nrm in &sh.normals {
                    assert!((nrm.mean - nrm.mean_divergence).abs() < 1e-8);
                    assert!(nrm.umbilic);
                }
                let l = &sh.normals;
                let g = m.metric_matrix(&sh.point).unwrap();
                let expected = if norm == NullNormalization::Symmetric { -1.0 } else { -2.0 };
                assert!((inner(&g, &l[0].vector, &l[1].vector) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn warped_slice_has_vanishing_weighted_mean() {
        for warp in ["t", "0.5*t*t + sin(t)"] {
            let m = model(Builtin::WarpedProduct { n: 4, warp: warp.into(), base: crate::spacetime::Base::Flat });
            let t0 = 0.3;
            let s = Hypersurface::new(&["a", "b", "c"], &[&t0.to_string(), "a", "b", "c"], SurfaceCausality::Spacelike, vec![(-1.0, 1.0); 3])
                .unwrap();
            let sh = shape_at(&m, &s, &[0.1, 0.2, -0.3]).unwrap();
            let fp = m.potential().jet(&sh.point).unwrap().gradient[0];
            let nrm = &sh.normals[0];
            assert!((nrm.mean - fp).abs() < 1e-8 && nrm.mean_f.abs() < 1e-8);
            assert!((nrm.mean - nrm.mean_divergence).abs() < 1e-8);
            // K = (F′/3) h
            assert!((&nrm.second_form - &sh.induced * (fp / 3.0)).abs().max() < 1e-10);
            assert!(nrm.umbilic && !nrm.totally_geodesic);
        }
    }

    #[test]
    fn null_hyperplane_and_cone() {
        let m = model(Builtin::Minkowski { n: 4 });
        let plane = Hypersurface::new(&["v", "y", "z"], &["v", "v", "y", "z"], SurfaceCausality::Null, vec![(-1.0, 1.0); 3]).unwrap();
        let sh = shape_at(&m, &plane, &[0.3, 0.1, 0.2]).unwrap();
        assert!(sh.normals[0].mean.abs() < 1e-12 && sh.normals[0].totally_geodesic);
        // Future light cone of the origin: θ = 2/r with g(ℓ, ∂t) = -1 scaling.
        let cone = Hypersurface::new(
            &["r", "th", "ph"],
            &["r", "r*sin(th)*cos(ph)", "r*sin(th)*sin(ph)", "r*cos(th)"],
            SurfaceCausality::Null,
            vec![(0.1, 2.0), (0.1, 3.0), (-3.0, 3.0)],
        )
        .unwrap();
        let sh = shape_at(&m, &cone, &[1.5, 0.9, 0.2]).unwrap();
        assert!((sh.normals[0].mean - 2.0 / 1.5).abs() < 1e-9);
        assert!((sh.normals[0].mean - sh.normals[0].mean_divergence).abs() < 1e-8);
        assert!(sh.normals[0].umbilic);
        let bad = Hypersurface::new(&["v", "y", "z"], &["v", "v", "y", "z"], SurfaceCausality::Spacelike, vec![(-1.0, 1.0); 3]).unwrap();
        assert!(shape_at(&m, &bad, &[0.3, 0.1, 0.2]).is_err());
    }

    #[test]
    fn trapped_verdicts() {
        let m = model(Builtin::Minkowski { n: 4 });
        let r = trapped_check(&m, &sphere(1.0), 6).unwrap();
        assert_eq!((r.verdict, r.ordinary), (TrappedVerdict::NotTrapped, TrappedVerdict::NotTrapped));
        assert_eq!(r.samples, 36);
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "3*x".into() });
        let s = sphere(1.0).with_normalization(NullNormalization::TimeUnit);
        let r = trapped_check(&m, &s, 6).unwrap();
        for (u, fp, fm) in &r.values {
            let nx = u[0].sin() * u[1].cos();
            assert!((fp - (2.0 - 3.0 * nx)).abs() < 1e-10 && (fm - (-2.0 + 3.0 * nx)).abs() < 1e-10);
        }
        assert_eq!(r.verdict, TrappedVerdict::NotTrapped);
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "0.7".into() });
        let r = trapped_check(&m, &sphere(1.0), 4).unwrap();
        assert_eq!(r.verdict, r.ordinary);
        // f = 3t shifts both expansions down by 3/√2: a round sphere becomes f-trapped.
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "3*t".into() });
        let r = trapped_check(&m, &sphere(1.0), 4).unwrap();
        assert_eq!((r.verdict, r.ordinary), (TrappedVerdict::FutureTrapped, TrappedVerdict::NotTrapped));
        assert!((r.negative_margin - (3.0 - 2.0) / std::f64::consts::SQRT_2).abs() < 1e-10);
    }
}
