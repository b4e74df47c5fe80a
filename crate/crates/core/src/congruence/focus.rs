//! Conjugate and focal points, the focusing bounds, and the f-generic probe.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{propagate_jacobi, sigma_min, CongruenceMode, JacobiEvolution};
use crate::curvature::{bakry_emery_from, curvature_at};
use crate::error::{GeometryError, Result};
use crate::geodesic::{GeodesicPath, LimitEstimate};
use crate::spacetime::{SpacetimeModel, SyntheticDimension};

/// A zero of A is accepted when σ_min(A) drops below this fraction of max |A|.
pub const ZERO_TOL: f64 = 1e-6;
/// Frobenius norm above which R_f counts as nonzero.
pub const GENERIC_TOL: f64 = 1e-9;
/// Relative closeness of the first zero to the bound that counts as saturation.
pub const SATURATION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FocusKind {
    /// A(t0) = 0: zeros of A are conjugate to the initial point.
    Conjugate,
    /// A(t0) invertible: zeros of A are focal to the initial surface.
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDetection {
    /// det A changes sign (odd multiplicity); located by bisection.
    SignChange,
    /// σ_min(A) has a local minimum below tolerance; located by golden-section search. Catches
    /// even-multiplicity zeros where det A touches zero without changing sign.
    SingularValueMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundParameter {
    /// Affine parameter of the geodesic.
    Affine,
    /// s = ∫ e^{-2f/α} dt from the initial point.
    Reparametrized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocusHypothesis {
    /// N lies where the focusing lemma applies: N ≤ a, N infinite, or N > n.
    pub dimension_in_range: bool,
    /// min over nodes of Ric_f^N(γ′, γ′).
    pub min_ric_f: f64,
    pub curvature_holds: bool,
    /// From the s-limit along the path; None when undetermined or not required.
    pub f_complete: Option<bool>,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocusBound {
    /// -θ_f at the initial point.
    pub delta: f64,
    pub epsilon_n: f64,
    pub parameter: BoundParameter,
    /// The bound asserted in `parameter`: α ε_N/δ in s for N ≤ a or infinite, (N - a)/δ in t for N > n.
    pub value: f64,
    /// d ε_N/δ
    pub normalized: f64,
    /// ε_N/δ
    pub unnormalized: f64,
    /// The first zero measured in `parameter`.
    pub first_in_parameter: Option<f64>,
    /// Span of the integration measured in `parameter`.
    pub span_in_parameter: f64,
    /// Some(true) when the zero lies within the bound; Some(false) when it lies beyond it or the span
    /// covers the bound without a zero; None when the span ends before the bound.
    pub within: Option<bool>,
    pub hypothesis: FocusHypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusReport {
    pub kind: FocusKind,
    pub first_parameter: Option<f64>,
    pub detection: Option<ZeroDetection>,
    /// Number of singular values of A near zero at the located point.
    pub multiplicity: usize,
    pub bound: Option<FocusBound>,
    pub saturated: bool,
    /// The lemma's hypotheses are not all verified, so the bound is informational only.
    pub advisory: bool,
}

fn bisect(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut g_lo = g(lo);
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-12 * (1.0 + lo.abs()) {
            break;
        }
        if gc < gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - r * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + r * (hi - lo);
            gd = g(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, g(t))
}

/// First zero of A after the initial point.
pub fn detect_conjugate(evo: &JacobiEvolution) -> FocusReport {
    let nodes = &evo.nodes;
    let scale = nodes.iter().map(|n| n.a.abs().max()).fold(1.0, f64::max);
    let thr = ZERO_TOL * scale;
    let kind = if nodes[0].sigma_min <= thr { FocusKind::Conjugate } else { FocusKind::Focal };
    let mut report =
        FocusReport { kind, first_parameter: None, detection: None, multiplicity: 0, bound: None, saturated: false, advisory: false };
    let Some(start) = nodes.iter().position(|n| n.sigma_min > thr) else { return report };
    let dir = if evo.path.end() >= evo.path.start() { 1.0 } else { -1.0 };

    let mut sign_change = None;
    for k in start..nodes.len().saturating_sub(1) {
        if nodes[k].det * nodes[k + 1].det < 0.0 {
            let root = bisect(|t| evo.a_at(t)[0].determinant(), nodes[k].param, nodes[k + 1].param);
            sign_change = Some(root);
            break;
        }
    }
    let mut minimum = None;
    for k in start + 1..nodes.len() {
        let s = nodes[k].sigma_min;
        let left = nodes[k - 1].sigma_min;
        let right = nodes.get(k + 1).map_or(f64::INFINITY, |n| n.sigma_min);
        if s <= left && s <= right && s < 1e-2 * scale {
            let hi = nodes.get(k + 1).map_or(nodes[k].param, |n| n.param);
            let (t, v) = golden_min(|t| sigma_min(&evo.a_at(t)[0]), nodes[k - 1].param, hi);
            if v < thr {
                minimum = Some(t);
                break;
            }
        }
    }
    let found = match (sign_change, minimum) {
        (Some(a), Some(b)) if (b - a) * dir < -1e-6 => Some((b, ZeroDetection::SingularValueMinimum)),
        (Some(a), _) => Some((a, ZeroDetection::SignChange)),
        (None, Some(b)) => Some((b, ZeroDetection::SingularValueMinimum)),
        (None, None) => None,
    };
    if let Some((t, how)) = found {
        let sv = evo.a_at(t)[0].clone().svd(false, false).singular_values;
        report.first_parameter = Some(t);
        report.detection = Some(how);
        report.multiplicity = sv.iter().filter(|s| **s < 1e-4 * scale).count();
    }
    report
}

/// Integrate the congruence with A(t0) = a0, A′(t0) = a0p (a0 invertible, θ_f(t0) = -δ < 0) and
/// compare its first focal point with the focusing bound for N.
pub fn focusing_bound_check(
    model: &SpacetimeModel,
    path: &GeodesicPath,
    a0: &DMatrix<f64>,
    a0p: &DMatrix<f64>,
    synthetic: SyntheticDimension,
) -> Result<FocusReport> {
    let mode = CongruenceMode::of(path.causal_type)?;
    let n = path.dim();
    synthetic.check_dim(n)?;
    let evo = propagate_jacobi(model, path, a0, a0p, mode)?;
    let first = &evo.nodes[0];
    let scalars =
        first.scalars.as_ref().ok_or_else(|| GeometryError::Invalid("the initial Jacobi tensor must be invertible".into()))?;
    let delta = -scalars.theta_f;
    if delta <= 0.0 {
        return Err(GeometryError::Invalid(format!("focusing needs θ_f < 0 at the start, got θ_f = {}", scalars.theta_f)));
    }
    let mut report = detect_conjugate(&evo);
    let a = mode.shift() as f64;
    let alpha = evo.alpha;
    let d = evo.rank() as f64;
    let t0 = first.param;

    let min_ric_f = evo.nodes.iter().map(|nd| nd.ric_f_along(synthetic)).fold(f64::INFINITY, f64::min);
    let curvature_holds = min_ric_f >= -1e-9;
    let dimension_in_range = synthetic.in_focusing_range(a);

    let above_n = synthetic.value().is_some_and(|v| v > n as f64);
    let (parameter, epsilon_n, value, first_in, span_in, f_complete) = if above_n {
        let nv = synthetic.value().unwrap_or_default();
        let first_in = report.first_parameter.map(|t| (t - t0).abs());
        (BoundParameter::Affine, 1.0, (nv - a) / delta, first_in, (evo.path.end() - t0).abs(), None)
    } else {
        let eps = (-2.0 * first.potential / alpha).exp();
        let table = evo.reparam(model, alpha)?;
        let first_in = report.first_parameter.map(|t| table.s_at(t).abs());
        let complete = match table.limit {
            LimitEstimate::Divergent { .. } => Some(true),
            LimitEstimate::Finite { .. } => Some(false),
            LimitEstimate::Undetermined { .. } => None,
        };
        (BoundParameter::Reparametrized, eps, alpha * eps / delta, first_in, table.values.last().unwrap().abs(), complete)
    };
    let holds = dimension_in_range && curvature_holds && f_complete != Some(false);
    let slack = 1e-6 * value.max(1.0);
    let within = match first_in {
        Some(x) => Some(x <= value + slack),
        None if span_in >= value => Some(false),
        None => None,
    };
    report.saturated = first_in.is_some_and(|x| (x - value).abs() < SATURATION_TOL * value);
    report.advisory = !holds;
    report.kind = FocusKind::Focal;
    report.bound = Some(FocusBound {
        delta,
        epsilon_n,
        parameter,
        value,
        normalized: d * epsilon_n / delta,
        unnormalized: epsilon_n / delta,
        first_in_parameter: first_in,
        span_in_parameter: span_in,
        within,
        hypothesis: FocusHypothesis { dimension_in_range, min_ric_f, curvature_holds, f_complete, holds },
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FGenericReport {
    pub first_hit: Option<f64>,
    pub max_norm: f64,
    pub nodes_scanned: usize,
    /// Nodes where Ric_f^N(γ′,γ′) > 0 with N ≤ a, N > n or N infinite, which force R_f ≠ 0.
    pub forced_nodes: usize,
    /// Every forced node is a hit.
    pub consistent: bool,
}

/// Scan the path's nodes for a nonzero R_f (timelike) or R̄_f (null).
pub fn f_generic_probe(model: &SpacetimeModel, path: &GeodesicPath, synthetic: SyntheticDimension) -> Result<FGenericReport> {
    let mode = CongruenceMode::of(path.causal_type)?;
    let a = mode.shift() as f64;
    let forcing_range = synthetic.in_focusing_range(a);
    let mut report = FGenericReport { first_hit: None, max_norm: 0.0, nodes_scanned: 0, forced_nodes: 0, consistent: true };
    for node in &path.nodes {
        let bundle = curvature_at(model, &node.point)?;
        let be = bakry_emery_from(&bundle, &node.velocity, synthetic)?;
        let norm = be.tidal.norm();
        let hit = norm > GENERIC_TOL;
        if hit && report.first_hit.is_none() {
            report.first_hit = Some(node.param);
        }
        if forcing_range && be.ric_f_n_along > GENERIC_TOL {
            report.forced_nodes += 1;
            report.consistent &= hit;
        }
        report.max_norm = report.max_norm.max(norm);
        report.nodes_scanned += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ads_orbit, geodesic, model, point_congruence};
    use super::*;
    use crate::spacetime::Builtin;

    #[test]
    fn no_conjugate_in_flat_space() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 4.0));
        let r = detect_conjugate(&point_congruence(&m, &p, CongruenceMode::Timelike));
        assert_eq!(r.kind, FocusKind::Conjugate);
        assert!(r.first_parameter.is_none());
    }

    #[test]
    fn anti_de_sitter_conjugate_at_pi() {
        let (m, p) = ads_orbit(3.3);
        let r = detect_conjugate(&point_congruence(&m, &p, CongruenceMode::Timelike));
        let t = r.first_parameter.unwrap();
        assert!((t - std::f64::consts::PI).abs() < 1e-6, "{t}");
        assert_eq!(r.detection, Some(ZeroDetection::SignChange));
        assert_eq!(r.multiplicity, 3);
    }

    fn sphere(m: &SpacetimeModel, r: f64, span: f64, synthetic: SyntheticDimension) -> FocusReport {
        let p = geodesic(m, vec![0.0, r, 0.0, 0.0], vec![1.0, -1.0, 0.0, 0.0], (0.0, span));
        let id = DMatrix::identity(2, 2);
        focusing_bound_check(m, &p, &id, &(&id * (-1.0 / r)), synthetic).unwrap()
    }

    #[test]
    fn flat_sphere_saturates() {
        let m = model(Builtin::Minkowski { n: 4 });
        for r in [1.0, 2.0] {
            let rep = sphere(&m, r, 1.5 * r, SyntheticDimension::infinite(4));
            assert!((rep.first_parameter.unwrap() - r).abs() < 1e-6);
            assert_eq!(rep.detection, Some(ZeroDetection::SingularValueMinimum));
            assert_eq!(rep.multiplicity, 2);
            let b = rep.bound.unwrap();
            assert!((b.value - r).abs() < 1e-12 && (b.unnormalized - r / 2.0).abs() < 1e-12);
            assert!(rep.saturated && b.within == Some(true) && !rep.advisory);
        }
    }

    #[test]
    fn constant_potential_bound_in_s() {
        let c: f64 = 0.7;
        let m = model(Builtin::MinkowskiWithF { n: 4, f: format!("{c}") });
        let rep = sphere(&m, 1.0, 1.5, SyntheticDimension::finite(1.0, 4).unwrap());
        let b = rep.bound.unwrap();
        assert!((rep.first_parameter.unwrap() - 1.0).abs() < 1e-6);
        assert!((b.epsilon_n - (-c).exp()).abs() < 1e-12);
        assert_eq!(b.parameter, BoundParameter::Reparametrized);
        assert!(b.hypothesis.holds && b.within == Some(true) && rep.saturated);
        // Measured in the affine parameter the focal point would lie beyond d ε_N/δ.
        assert!(rep.first_parameter.unwrap() > b.normalized);
    }

    #[test]
    fn generic_probe() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        let r = f_generic_probe(&m, &p, SyntheticDimension::infinite(4)).unwrap();
        assert!(r.first_hit.is_none());
        let m = model(Builtin::DeSitter { n: 4 });
        let p = geodesic(&m, vec![0.0, 1.0, 1.2, 0.3], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        let r = f_generic_probe(&m, &p, SyntheticDimension::infinite(4)).unwrap();
        assert_eq!(r.first_hit, Some(0.0));
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "t".into() });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        for nv in [1.0, 3.0, 7.0] {
            let r = f_generic_probe(&m, &p, SyntheticDimension::finite(nv, 4).unwrap()).unwrap();
            assert_eq!(r.first_hit, Some(0.0));
            assert!(r.consistent);
            assert!((r.max_norm - 3f64.sqrt() / 9.0).abs() < 1e-12);
        }
    }
}
