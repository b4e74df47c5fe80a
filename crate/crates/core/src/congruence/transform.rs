//! Jacobi tensors under the f-reparametrization, and the index form with its weighted rewrite.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{propagate_jacobi, CongruenceMode, JacobiEvolution};
use crate::curvature::{curvature_at, weighted_tidal, ConnectionKind};
use crate::error::{GeometryError, Result};
use crate::expr::{parse_expr, Expression};
use crate::geodesic::GeodesicPath;
use crate::ode::GAUSS5;
use crate::spacetime::{CausalCharacter, SpacetimeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformNode {
    pub t: f64,
    pub s: f64,
    pub det_a: f64,
    pub det_hat: f64,
    pub theta_f: Option<f64>,
    pub theta_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    pub connection: ConnectionKind,
    pub alpha: f64,
    pub nodes: Vec<TransformNode>,
    /// max |d²Â/ds² + e^{4f/α} M̂ Â| relative to the size of either term, with M̂ the tidal matrix of
    /// the target connection along γ′.
    pub jacobi_residual: f64,
    /// max |M̂ - R_f|
    pub tidal_difference: f64,
    /// max |dÂ/ds Â⁻¹ - e^{2f/α} B_f|
    pub b_residual: f64,
    /// max |(dÂ/ds Â⁻¹ - (df/ds) id) - e^{2f/α} B_f|: the shifted definition does not match.
    pub b_shifted_residual: f64,
    /// max |θ̃ - e^{2f/α} θ_f|
    pub theta_residual: f64,
    /// max |σ̃ - e^{2f/α} σ_f|
    pub sigma_residual: f64,
    /// max |σ̃ - σ_f|
    pub sigma_unscaled_residual: f64,
    /// max |det Â - e^{-d f/α} det A| / (1 + |det A|)
    pub det_residual: f64,
    /// θ̃ and θ_f share a sign at every node.
    pub sign_agreement: bool,
    /// B̃ vanishes at every node where B_f does.
    pub vanishing_consistent: bool,
    pub nodes_checked: usize,
}

fn trace_free_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    &sym - DMatrix::identity(d, d) * (sym.trace() / d as f64)
}

/// Â = e^{-f/α}A along the s-reparametrized geodesic and the relations between its expansion data
/// and those of A. α must be n - 1 for timelike (weighted connection) or n - 2 for null (conformal).
pub fn transform_jacobi(model: &SpacetimeModel, evo: &JacobiEvolution, alpha: f64) -> Result<TransformReport> {
    let n = evo.dim();
    let mode = evo.mode();
    let kind = match mode {
        CongruenceMode::Timelike => ConnectionKind::Weighted,
        CongruenceMode::Null => ConnectionKind::Conformal,
    };
    if alpha != evo.alpha {
        return Err(GeometryError::Invalid(format!(
            "a {} congruence in dimension {n} transforms with α = {}, got {alpha}",
            if mode == CongruenceMode::Timelike { "timelike" } else { "null" },
            evo.alpha
        )));
    }
    let table = evo.reparam(model, alpha)?;
    let d = evo.rank();
    let id = DMatrix::<f64>::identity(d, d);
    let mut report = TransformReport {
        connection: kind,
        alpha,
        nodes: Vec::with_capacity(evo.nodes.len()),
        jacobi_residual: 0.0,
        tidal_difference: 0.0,
        b_residual: 0.0,
        b_shifted_residual: 0.0,
        theta_residual: 0.0,
        sigma_residual: 0.0,
        sigma_unscaled_residual: 0.0,
        det_residual: 0.0,
        sign_agreement: true,
        vanishing_consistent: true,
        nodes_checked: 0,
    };
    for (k, node) in evo.nodes.iter().enumerate() {
        let (f, fp) = (node.potential, node.f_prime);
        let rate = table.rates[k];
        let scale = (f / alpha).exp();
        let a_hat = &node.a / scale;
        // dÂ/dt, then the chain rule with the tabulated ds/dt.
        let a_hat_t = (&node.a_prime - &node.a * (fp / alpha)) / scale;
        let a_hat_s = &a_hat_t / rate;
        let a_hat_tt_scaled = &node.a_second - &node.a * (node.f_second / alpha + fp * fp / (alpha * alpha));
        // d/dt(dÂ/ds) = e^{f/α}(A″ - (f″/α + f′²/α²)A), divided by ds/dt once more.
        let a_hat_ss = &a_hat_tt_scaled * scale / rate;

        let bundle = curvature_at(model, &node.point)?;
        let riemann = bundle.connection(kind)?.riemann();
        let v = &node.velocity;
        let m_hat = DMatrix::from_fn(d, d, |i, j| {
            let r = riemann.apply(&node.transverse[j], v, v);
            crate::spacetime::inner(&bundle.metric.g, &node.transverse[i], &r)
        });
        let r_f = weighted_tidal(&node.tidal, node.hess_along, fp, alpha);
        report.tidal_difference = report.tidal_difference.max((&m_hat - &r_f).abs().max());
        let weight = (4.0 * f / alpha).exp();
        let forcing = &m_hat * &a_hat * weight;
        let res = (&a_hat_ss + &forcing).abs().max() / (1.0 + a_hat_ss.abs().max().max(forcing.abs().max()));
        report.jacobi_residual = report.jacobi_residual.max(res);

        let det_a = node.a.determinant();
        let det_hat = a_hat.determinant();
        let expected = (-(d as f64) * f / alpha).exp() * det_a;
        report.det_residual = report.det_residual.max((det_hat - expected).abs() / (1.0 + det_a.abs()));

        let mut out = TransformNode { t: node.param, s: table.values[k], det_a, det_hat, theta_f: None, theta_tilde: None };
        if let (Some(s), Some(inv)) = (&node.scalars, a_hat.clone().try_inverse()) {
            let e2 = (2.0 * f / alpha).exp();
            let b_tilde = &a_hat_s * inv;
            let target = &s.b_f * e2;
            let b_scale = 1.0 + target.abs().max();
            report.b_residual = report.b_residual.max((&b_tilde - &target).abs().max() / b_scale);
            let f_dot = e2 * fp;
            let shifted = &b_tilde - &id * f_dot;
            report.b_shifted_residual = report.b_shifted_residual.max((&shifted - &target).abs().max() / b_scale);
            let theta_tilde = b_tilde.trace();
            report.theta_residual = report.theta_residual.max((theta_tilde - e2 * s.theta_f).abs() / b_scale);
            let sigma_tilde = trace_free_sym(&b_tilde);
            report.sigma_residual = report.sigma_residual.max((&sigma_tilde - &s.sigma_f * e2).abs().max() / b_scale);
            report.sigma_unscaled_residual =
                report.sigma_unscaled_residual.max((&sigma_tilde - &s.sigma_f).abs().max() / b_scale);
            if theta_tilde.signum() != s.theta_f.signum() && s.theta_f.abs() > 1e-12 {
                report.sign_agreement = false;
            }
            if s.b_f.abs().max() < 1e-12 && b_tilde.abs().max() >= 1e-12 {
                report.vanishing_consistent = false;
            }
            out.theta_f = Some(s.theta_f);
            out.theta_tilde = Some(theta_tilde);
            report.nodes_checked += 1;
        }
        report.nodes.push(out);
    }
    Ok(report)
}

/// Transverse vector field along a timelike geodesic, as frame components in the path parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    components: Vec<Expression>,
}

impl FrameField {
    pub fn parse(sources: &[&str]) -> Result<Self> {
        let vars = ["t".to_string()];
        let components = sources.iter().map(|s| parse_expr(s, &vars)).collect::<std::result::Result<_, _>>()?;
        Ok(Self { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// Components and their t-derivatives.
    pub fn eval(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut c = Vec::with_capacity(self.rank());
        let mut dc = Vec::with_capacity(self.rank());
        for e in &self.components {
            let j = e.jet(&[t])?;
            c.push(j.value);
            dc.push(j.gradient[0]);
        }
        Ok((c, dc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexFormReport {
    /// ∫ (|c′|² - cᵀ T c) dt
    pub value: f64,
    /// (ḟ/α)|w|² between the endpoints, ḟ = df/ds.
    pub boundary_term: f64,
    /// ∫ (|ẇ|² - e^{4f/α} wᵀ R_f w) ds with w = e^{-f/α} c.
    pub weighted_integral: f64,
    /// |value - boundary_term - weighted_integral| / (1 + |value|)
    pub weighted_identity_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(m: &DMatrix<f64>, c: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(c);
    v.dot(&(m * &v))
}

/// I(v, v) over the whole path, with v given in a parallel orthonormal frame of γ′⊥.
pub fn index_form(model: &SpacetimeModel, path: &GeodesicPath, field: &FrameField) -> Result<IndexFormReport> {
    if path.causal_type != CausalCharacter::Timelike {
        return Err(GeometryError::WrongCausalType { expected: "timelike", got: path.causal_type.name() });
    }
    let n = path.dim();
    let d = n - 1;
    if field.rank() != d {
        return Err(GeometryError::CoordinateCount { expected: d, got: field.rank() });
    }
    let evo = propagate_jacobi(model, path, &DMatrix::zeros(d, d), &DMatrix::identity(d, d), CongruenceMode::Timelike)?;
    let alpha = evo.alpha;
    let table = evo.reparam(model, alpha)?;

    // Potential data at parameter t: f, f′, Hess f(γ′, γ′).
    let along = |t: f64| -> Result<(f64, f64, f64)> {
        let st = evo.path.state_at(t);
        let j = model.potential().jet(&st.point)?;
        let fp = dot(&j.gradient, &st.velocity);
        let mut h = 0.0;
        for i in 0..n {
            for k in 0..n {
                h += j.hessian(i, k) * st.velocity[i] * st.velocity[k];
            }
        }
        Ok((j.value, fp, h))
    };

    let mut value = 0.0;
    let mut weighted = 0.0;
    for w in evo.nodes.windows(2) {
        let (a, b) = (w[0].param, w[1].param);
        for (xi, wt) in GAUSS5 {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let (c, dc) = field.eval(t)?;
            let tidal = evo.tidal_at(model, t)?;
            value += 0.5 * (b - a) * wt * (dot(&dc, &dc) - quad(&tidal, &c));
        }
        let (sa, sb) = (table.s_at(a), table.s_at(b));
        for (xi, wt) in GAUSS5 {
            let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * xi;
            let t = table.t_at(model, &evo.path, s);
            let (c, dc) = field.eval(t)?;
            let (f, fp, h) = along(t)?;
            let e = (f / alpha).exp();
            let w: Vec<f64> = c.iter().map(|x| x / e).collect();
            let w_dot: Vec<f64> = c.iter().zip(&dc).map(|(x, dx)| e * (dx - fp * x / alpha)).collect();
            let r_f = weighted_tidal(&evo.tidal_at(model, t)?, h, fp, alpha);
            let integrand = dot(&w_dot, &w_dot) - (4.0 * f / alpha).exp() * quad(&r_f, &w);
            weighted += 0.5 * (sb - sa) * wt * integrand;
        }
    }
    let boundary = |t: f64| -> Result<f64> {
        let (c, _) = field.eval(t)?;
        let (_, fp, _) = along(t)?;
        // (ḟ/α)|w|² = (e^{2f/α} f′/α) e^{-2f/α}|c|²
        Ok(fp / alpha * dot(&c, &c))
    };
    let boundary_term = boundary(evo.path.end())? - boundary(evo.path.start())?;
    let residual = (value - boundary_term - weighted).abs() / (1.0 + value.abs());
    Ok(IndexFormReport { value, boundary_term, weighted_integral: weighted, weighted_identity_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{geodesic, model, point_congruence};
    use super::*;
    use crate::spacetime::Builtin;

    #[test]
    fn flat_sine_field() {
        let m = model(Builtin::Minkowski { n: 4 });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        let r = index_form(&m, &p, &FrameField::parse(&["sin(pi*t)", "0", "0"]).unwrap()).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        assert!((r.value - exact).abs() < 1e-10, "{}", r.value);
        assert!(r.weighted_identity_residual < 1e-10);
        let z = index_form(&m, &p, &FrameField::parse(&["0", "0", "0"]).unwrap()).unwrap();
        assert_eq!((z.value, z.weighted_identity_residual), (0.0, 0.0));
    }

    #[test]
    fn weighted_identity_holds() {
        for f in ["0.4", "t", "0.3*x*x + 0.2*t"] {
            let m = model(Builtin::MinkowskiWithF { n: 4, f: f.into() });
            let p = geodesic(&m, vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
            let field = FrameField::parse(&["sin(pi*t)", "t*t", "1 + t"]).unwrap();
            let r = index_form(&m, &p, &field).unwrap();
            assert!(r.weighted_identity_residual < 1e-8, "{f}: {}", r.weighted_identity_residual);
        }
        let m = model(Builtin::DeSitter { n: 4 });
        let p = geodesic(&m, vec![0.0, 1.0, 1.2, 0.3], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        let r = index_form(&m, &p, &FrameField::parse(&["sin(pi*t)", "0", "0"]).unwrap()).unwrap();
        // T = -id adds ∫ sin² = 1/2.
        assert!((r.value - (std::f64::consts::PI.powi(2) / 2.0 + 0.5)).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn null_linear_potential_scales_expansion() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "t".into() });
        let p = geodesic(&m, vec![0.0; 4], vec![1.0, 1.0, 0.0, 0.0], (0.0, 2.0));
        let evo = point_congruence(&m, &p, CongruenceMode::Null);
        let r = transform_jacobi(&m, &evo, 2.0).unwrap();
        assert_eq!(r.connection, ConnectionKind::Conformal);
        for node in r.nodes.iter().filter(|n| n.theta_f.is_some()) {
            let expected = node.t.exp() * node.theta_f.unwrap();
            assert!((node.theta_tilde.unwrap() - expected).abs() < 1e-7 * (1.0 + expected.abs()));
        }
        assert!(r.jacobi_residual < 1e-6, "{}", r.jacobi_residual);
        assert!(r.theta_residual < 1e-7 && r.sigma_residual < 1e-7 && r.b_residual < 1e-7);
        assert!(r.b_shifted_residual > 0.1);
        assert!(r.det_residual < 1e-8 && r.sign_agreement && r.vanishing_consistent);
        assert!(transform_jacobi(&m, &evo, 3.0).is_err());
    }

    #[test]
    fn timelike_weighted_transform() {
        for f in ["0", "t", "0.3*x*x + 0.2*t"] {
            let m = model(Builtin::MinkowskiWithF { n: 4, f: f.into() });
            let v = [1.0, 0.3, 0.0, 0.0].map(|c| c / 0.91f64.sqrt()).to_vec();
            let p = geodesic(&m, vec![0.0; 4], v, (0.0, 2.0));
            let evo = point_congruence(&m, &p, CongruenceMode::Timelike);
            let r = transform_jacobi(&m, &evo, 3.0).unwrap();
            assert_eq!(r.connection, ConnectionKind::Weighted);
            assert!(r.jacobi_residual < 1e-6, "{f}: {}", r.jacobi_residual);
            assert!(r.tidal_difference < 1e-8, "{f}: {}", r.tidal_difference);
            assert!(r.theta_residual < 1e-7 && r.sigma_residual < 1e-7);
            if f == "0" {
                assert!(r.nodes.iter().all(|n| n.det_a == n.det_hat && (n.t - n.s).abs() < 1e-12));
                assert_eq!(r.sigma_unscaled_residual, 0.0);
            }
        }
    }
}
