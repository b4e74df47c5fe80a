//! Drift Laplacian of a closed-form Lorentzian distance function against the comparison bound
//! -(n-1) e^{-2f(q)/(n-1)}/s(ρ).

use serde::Serialize;

use crate::curvature::curvature_at;
use crate::error::{GeometryError, Result};
use crate::expr::Expression;
use crate::geodesic::{integrate_geodesic, reparametrize, ConnectionKind};
use crate::ode::IntegrationControl;
use crate::spacetime::{inner, SpacetimeModel, TangentVector};

/// Allowed shortfall of the drift Laplacian below the bound.
pub const COMPARISON_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianReport {
    /// d(q) from the closed form.
    pub distance: f64,
    /// s(ρ) along the straight geodesic from the base point to q.
    pub s_rho: f64,
    /// □d = g^{ij}(∂i∂j d - Γ^k_ij ∂k d)
    pub laplacian: f64,
    /// g(∇f, ∇d)
    pub drift_term: f64,
    /// □d - g(∇f, ∇d)
    pub drift_laplacian: f64,
    pub bound: f64,
    /// drift_laplacian - bound
    pub slack: f64,
    pub holds: bool,
    /// |σ(ρ) - q| for the integrated geodesic.
    pub endpoint_error: f64,
}

/// Compare Δ_f d at q with the bound, where `distance` is a closed form (in chart coordinates) of
/// the Lorentzian distance to `base` and the maximal geodesic from `base` to q is the coordinate
/// straight line.
pub fn laplacian_comparison_check(
    model: &SpacetimeModel,
    distance: &Expression,
    base: &[f64],
    q: &[f64],
) -> Result<LaplacianReport> {
    let n = model.dim();
    for p in [base, q] {
        if p.len() != n {
            return Err(GeometryError::CoordinateCount { expected: n, got: p.len() });
        }
    }
    let dj = distance.jet(q)?;
    if !dj.is_finite() || dj.value <= 0.0 {
        return Err(GeometryError::Invalid(format!("distance is not differentiable at {q:?} (value {})", dj.value)));
    }
    let rho = dj.value;
    let b = curvature_at(model, q)?;
    let g_inv = &b.metric.g_inv;
    let mut laplacian = 0.0;
    for i in 0..n {
        for j in 0..n {
            let conn: f64 = (0..n).map(|k| b.christoffel.gamma(k, i, j) * dj.gradient[k]).sum();
            laplacian += g_inv[(i, j)] * (dj.hessian(i, j) - conn);
        }
    }
    let drift_term: f64 = b.grad_f.iter().zip(&dj.gradient).map(|(p, q)| p * q).sum();

    let velocity: Vec<f64> = q.iter().zip(base).map(|(a, c)| (a - c) / rho).collect();
    let g0 = model.metric_matrix(base)?;
    let speed = inner(&g0, &velocity, &velocity);
    if (speed + 1.0).abs() > 1e-8 {
        return Err(GeometryError::Invalid(format!(
            "closed-form distance {rho} does not match the proper time of the segment to q (g(v, v) = {speed})"
        )));
    }
    let init = TangentVector::new(base.to_vec(), velocity)?;
    let path = integrate_geodesic(model, ConnectionKind::LeviCivita, &init, (0.0, rho), &IntegrationControl::default())?;
    let end = &path.nodes.last().unwrap().point;
    let endpoint_error = end.iter().zip(q).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    if path.truncated || endpoint_error > 1e-6 * (1.0 + rho) {
        return Err(GeometryError::Invalid(format!("the straight segment to {q:?} is not a geodesic of the model")));
    }
    let alpha = (n - 1) as f64;
    let table = reparametrize(model, &path, alpha)?;
    let s_rho = *table.values.last().unwrap();
    let bound = -alpha * (-2.0 * b.potential / alpha).exp() / s_rho;
    let drift_laplacian = laplacian - drift_term;
    let slack = drift_laplacian - bound;
    Ok(LaplacianReport {
        distance: rho,
        s_rho,
        laplacian,
        drift_term,
        drift_laplacian,
        bound,
        slack,
        holds: slack >= -COMPARISON_TOL,
        endpoint_error,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::model;
    use super::*;
    use crate::expr::parse_expr;
    use crate::spacetime::Builtin;

    fn distance(m: &SpacetimeModel, r: f64) -> Expression {
        parse_expr(&format!("sqrt(({r} - t)^2 - x^2 - y^2 - z^2)"), m.coords()).unwrap()
    }

    fn fd_dalembertian(e: &Expression, q: &[f64]) -> f64 {
        let h = 1e-4;
        let d0 = e.eval(q).unwrap();
        (0..4)
            .map(|i| {
                let mut p = q.to_vec();
                p[i] += h;
                let up = e.eval(&p).unwrap();
                p[i] -= 2.0 * h;
                let dn = e.eval(&p).unwrap();
                let second = (up - 2.0 * d0 + dn) / (h * h);
                if i == 0 { -second } else { second }
            })
            .sum()
    }

    #[test]
    fn flat_cone_distance_saturates() {
        let m = model(Builtin::Minkowski { n: 4 });
        let d = distance(&m, 2.0);
        for q in [[0.0, 0.0, 0.0, 0.0], [0.3, 0.4, -0.2, 0.1]] {
            let r = laplacian_comparison_check(&m, &d, &[2.0, 0.0, 0.0, 0.0], &q).unwrap();
            assert!((r.laplacian - fd_dalembertian(&d, &q)).abs() < 1e-6);
            assert!((r.laplacian + 3.0 / r.distance).abs() < 1e-12);
            assert!((r.s_rho - r.distance).abs() < 1e-12);
            assert!(r.slack.abs() < 1e-10 && r.holds);
        }
        let r = laplacian_comparison_check(&m, &d, &[2.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert!((r.bound + 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_potential_keeps_slack() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "0.8".into() });
        let d = distance(&m, 2.0);
        let q = [0.3, 0.4, -0.2, 0.1];
        let r = laplacian_comparison_check(&m, &d, &[2.0, 0.0, 0.0, 0.0], &q).unwrap();
        assert_eq!(r.drift_term, 0.0);
        assert!(r.slack.abs() < 1e-10 && (r.bound + 3.0 / r.distance).abs() < 1e-10);
    }

    #[test]
    fn light_cone_and_wrong_oracle_rejected() {
        let m = model(Builtin::Minkowski { n: 4 });
        let d = distance(&m, 2.0);
        assert!(laplacian_comparison_check(&m, &d, &[2.0, 0.0, 0.0, 0.0], &[0.0, 2.0, 0.0, 0.0]).is_err());
        let wrong = parse_expr("2*sqrt((2 - t)^2 - x^2 - y^2 - z^2)", m.coords()).unwrap();
        assert!(laplacian_comparison_check(&m, &wrong, &[2.0, 0.0, 0.0, 0.0], &[0.0; 4]).is_err());
    }
}
