//! Geodesics of the Levi-Civita, weighted and conformal connections.

mod lift;
mod reparam;
mod transport;

use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::ode::{integrate, quintic_hermite_eval, IntegrationControl};
use crate::spacetime::{classify_vector, inner, CausalCharacter, MetricJet, SpacetimeModel, TangentVector};

pub use crate::curvature::ConnectionKind;
pub use lift::{lift_twisted_geodesic, LiftReport, LiftSystem};
pub use reparam::{reparametrize, verify_reparam_lemma, LimitEstimate, LimitMethod, ReparamReport, ReparamTable};
pub use transport::{parallel_transport, transport_along_polygon, TransportSample, TransportedField};

/// Γ^k_ij u^i w^j of the Levi-Civita connection from a metric jet.
pub fn christoffel_pair(jet: &MetricJet, u: &[f64], w: &[f64]) -> Vec<f64> {
    let n = jet.dim();
    // First-kind contraction: ½(∂_u g_lj w^j + ∂_w g_lj u^j - ∂_l g(u, w)).
    let mut lowered = vec![0.0; n];
    for l in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            let gi = &jet.dg[i];
            for j in 0..n {
                acc += gi[(l, j)] * (u[i] * w[j] + w[i] * u[j]);
            }
        }
        let dl = &jet.dg[l];
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += dl[(i, j)] * u[i] * w[j];
            }
        }
        lowered[l] = 0.5 * (acc - quad);
    }
    jet.raise(&lowered)
}

/// Γ̂^k_ij u^i w^j for the requested connection at x.
pub fn connection_pair(model: &SpacetimeModel, kind: ConnectionKind, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let jet = model.metric_at(x)?;
    connection_pair_with(model, kind, &jet, x, u, w)
}

pub(crate) fn connection_pair_with(
    model: &SpacetimeModel,
    kind: ConnectionKind,
    jet: &MetricJet,
    x: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<Vec<f64>> {
    let mut out = christoffel_pair(jet, u, w);
    if kind == ConnectionKind::LeviCivita || model.potential().is_zero_literal() {
        return Ok(out);
    }
    let n = jet.dim();
    let df = model.potential().jet(x)?.gradient;
    let fu: f64 = df.iter().zip(u).map(|(a, b)| a * b).sum();
    let fw: f64 = df.iter().zip(w).map(|(a, b)| a * b).sum();
    match kind {
        ConnectionKind::Weighted => {
            let c = 1.0 / (n as f64 - 1.0);
            for k in 0..n {
                out[k] -= c * (fu * w[k] + fw * u[k]);
            }
        }
        ConnectionKind::Conformal => {
            kind.check_dim(n)?;
            let c = 1.0 / (n as f64 - 2.0);
            let guw = jet.inner(u, w);
            let grad = jet.raise(&df);
            for k in 0..n {
                out[k] -= c * (fu * w[k] + fw * u[k] - guw * grad[k]);
            }
        }
        ConnectionKind::LeviCivita => {}
    }
    Ok(out)
}

/// Geodesic acceleration -Γ̂(v, v).
pub fn acceleration(model: &SpacetimeModel, kind: ConnectionKind, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    Ok(connection_pair(model, kind, x, v, v)?.into_iter().map(|a| -a).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathNode {
    pub param: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

/// Running integrals ∫ e^{-2f/α} along the path, one per weight α.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightChannel {
    pub alpha: f64,
    pub values: Vec<f64>,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub connection: ConnectionKind,
    pub causal_type: CausalCharacter,
    pub nodes: Vec<PathNode>,
    pub truncated: bool,
    #[serde(skip)]
    pub control: IntegrationControl,
    #[serde(skip)]
    pub channels: Vec<WeightChannel>,
}

/// Reparametrization weights carried along every integration: n-1 and, for n ≥ 3, n-2.
pub(crate) fn default_alphas(n: usize) -> Vec<f64> {
    if n >= 3 {
        vec![n as f64 - 1.0, n as f64 - 2.0]
    } else {
        vec![n as f64 - 1.0]
    }
}

pub(crate) fn causal_type_of(g: &nalgebra::DMatrix<f64>, v: &[f64]) -> Result<CausalCharacter> {
    let scale: f64 = v.iter().map(|x| x * x).sum();
    classify_vector(g, v, 1e-9 * scale.max(1.0))
}

pub fn integrate_geodesic(
    model: &SpacetimeModel,
    kind: ConnectionKind,
    init: &TangentVector,
    span: (f64, f64),
    ctrl: &IntegrationControl,
) -> Result<GeodesicPath> {
    let n = model.dim();
    kind.check_dim(n)?;
    if init.base.len() != n || init.components.len() != n {
        return Err(GeometryError::CoordinateCount { expected: n, got: init.base.len() });
    }
    if !model.contains(&init.base) {
        return Err(GeometryError::Invalid(format!("initial point {:?} outside the domain", init.base)));
    }
    let g0 = model.metric_matrix(&init.base)?;
    let causal_type = causal_type_of(&g0, &init.components)?;
    let alphas = default_alphas(n);
    let m = alphas.len();
    let mut y0 = init.base.clone();
    y0.extend_from_slice(&init.components);
    y0.extend(std::iter::repeat_n(0.0, m));
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (x, v) = (&y[..n], &y[n..2 * n]);
        let a = acceleration(model, kind, x, v)?;
        dy[..n].copy_from_slice(v);
        dy[n..2 * n].copy_from_slice(&a);
        let f = model.potential().eval(x)?;
        for (c, alpha) in alphas.iter().enumerate() {
            dy[2 * n + c] = (-2.0 * f / alpha).exp();
        }
        Ok(())
    };
    let sol = integrate(rhs, span.0, &y0, span.1, ctrl, |y| model.contains(&y[..n]))?;
    let nodes = sol
        .t
        .iter()
        .zip(sol.y.iter().zip(&sol.dy))
        .map(|(t, (y, dy))| PathNode {
            param: *t,
            point: y[..n].to_vec(),
            velocity: y[n..2 * n].to_vec(),
            acceleration: dy[n..2 * n].to_vec(),
        })
        .collect();
    let channels = alphas
        .iter()
        .enumerate()
        .map(|(c, alpha)| WeightChannel {
            alpha: *alpha,
            values: sol.y.iter().map(|y| y[2 * n + c]).collect(),
            rates: sol.dy.iter().map(|dy| dy[2 * n + c]).collect(),
        })
        .collect();
    Ok(GeodesicPath { connection: kind, causal_type, nodes, truncated: sol.truncated, control: *ctrl, channels })
}

/// Interpolated point, velocity and acceleration on a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl GeodesicPath {
    pub fn dim(&self) -> usize {
        self.nodes[0].point.len()
    }

    pub fn params(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.param).collect()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0].param
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].param
    }

    pub fn segment(&self, t: f64) -> usize {
        let n = self.nodes.len();
        if n < 2 {
            return 0;
        }
        let increasing = self.nodes[n - 1].param >= self.nodes[0].param;
        let pos = if increasing {
            self.nodes.partition_point(|p| p.param <= t)
        } else {
            self.nodes.partition_point(|p| p.param >= t)
        };
        pos.saturating_sub(1).min(n - 2)
    }

    /// Quintic Hermite state from (x, v, a) at the bracketing nodes.
    pub fn state_at(&self, t: f64) -> PathState {
        if self.nodes.len() == 1 {
            let p = &self.nodes[0];
            return PathState { point: p.point.clone(), velocity: p.velocity.clone(), acceleration: p.acceleration.clone() };
        }
        let k = self.segment(t);
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        let n = a.point.len();
        let mut st = PathState { point: vec![0.0; n], velocity: vec![0.0; n], acceleration: vec![0.0; n] };
        for i in 0..n {
            let [x, v, acc] = quintic_hermite_eval(
                a.param,
                b.param,
                [a.point[i], a.velocity[i], a.acceleration[i]],
                [b.point[i], b.velocity[i], b.acceleration[i]],
                t,
            );
            st.point[i] = x;
            st.velocity[i] = v;
            st.acceleration[i] = acc;
        }
        st
    }

    pub fn channel(&self, alpha: f64) -> Option<&WeightChannel> {
        self.channels.iter().find(|c| (c.alpha - alpha).abs() < 1e-12)
    }

    /// Max |a + Γ̂(v, v)| at segment midpoints under `kind`.
    pub fn geodesic_residual(&self, model: &SpacetimeModel, kind: ConnectionKind) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.nodes.windows(2) {
            let st = self.state_at(0.5 * (w[0].param + w[1].param));
            let gamma = connection_pair(model, kind, &st.point, &st.velocity, &st.velocity)?;
            for (a, g) in st.acceleration.iter().zip(&gamma) {
                worst = worst.max((a + g).abs());
            }
        }
        Ok(worst)
    }

    /// Max |g(v,v)(t) - g(v,v)(t0)| over nodes.
    pub fn norm_drift(&self, model: &SpacetimeModel) -> Result<f64> {
        let first = &self.nodes[0];
        let q0 = inner(&model.metric_matrix(&first.point)?, &first.velocity, &first.velocity);
        let mut worst: f64 = 0.0;
        for node in &self.nodes {
            let q = inner(&model.metric_matrix(&node.point)?, &node.velocity, &node.velocity);
            worst = worst.max((q - q0).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{build_spacetime, Builtin, SpacetimeSpec};

    fn model(b: Builtin) -> SpacetimeModel {
        build_spacetime(&SpacetimeSpec::Builtin(b)).unwrap()
    }

    #[test]
    fn straight_line_in_minkowski() {
        let m = model(Builtin::Minkowski { n: 4 });
        let init = TangentVector::new(vec![0.0; 4], vec![1.0, 0.5, 0.0, 0.0]).unwrap();
        let path = integrate_geodesic(&m, ConnectionKind::LeviCivita, &init, (0.0, 2.0), &IntegrationControl::default())
            .unwrap();
        let last = path.nodes.last().unwrap();
        assert!((last.point[0] - 2.0).abs() < 1e-12 && (last.point[1] - 1.0).abs() < 1e-12);
        assert!(path.geodesic_residual(&m, ConnectionKind::LeviCivita).unwrap() < 1e-12);
        assert_eq!(path.causal_type, CausalCharacter::Timelike);
    }

    #[test]
    fn weighted_geodesic_closed_form() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "t".into() });
        let init = TangentVector::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let path =
            integrate_geodesic(&m, ConnectionKind::Weighted, &init, (0.0, 1.2), &IntegrationControl::default()).unwrap();
        for node in &path.nodes {
            let exact = -1.5 * (1.0 - 2.0 * node.param / 3.0).ln();
            assert!((node.point[0] - exact).abs() < 1e-8 * exact.abs().max(1.0), "{} {}", node.point[0], exact);
        }
        // The midpoint residual is interpolation-limited; keep away from the blow-up at 1.5.
        let short =
            integrate_geodesic(&m, ConnectionKind::Weighted, &init, (0.0, 0.75), &IntegrationControl::default()).unwrap();
        let r = short.geodesic_residual(&m, ConnectionKind::Weighted).unwrap();
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn comoving_de_sitter() {
        let m = model(Builtin::DeSitter { n: 4 });
        let init = TangentVector::new(vec![0.0, 1.0, 1.2, 0.3], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let path = integrate_geodesic(&m, ConnectionKind::LeviCivita, &init, (0.0, 3.0), &IntegrationControl::default())
            .unwrap();
        for node in &path.nodes {
            assert!((node.point[0] - node.param).abs() < 1e-9);
            assert!((node.point[1] - 1.0).abs() < 1e-12);
        }
        assert!(path.norm_drift(&m).unwrap() < 1e-9);
    }

    #[test]
    fn conformal_geodesic_matches_rescaled_levi_civita() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "0.3*t + 0.2*x*y".into() });
        let rescaled = crate::spacetime::conformal_rescale(&m).unwrap();
        let init = TangentVector::new(vec![0.1, 0.2, -0.1, 0.3], vec![1.0, 0.3, -0.2, 0.1]).unwrap();
        let ctrl = IntegrationControl::default();
        let a = integrate_geodesic(&m, ConnectionKind::Conformal, &init, (0.0, 1.5), &ctrl).unwrap();
        let b = integrate_geodesic(&rescaled, ConnectionKind::LeviCivita, &init, (0.0, 1.5), &ctrl).unwrap();
        let (pa, pb) = (a.state_at(1.5), b.state_at(1.5));
        for i in 0..4 {
            assert!((pa.point[i] - pb.point[i]).abs() < 1e-8);
        }
    }
}
