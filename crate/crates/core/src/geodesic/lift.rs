//! Lifting curves of the spatial factor (Σ, ĥ) of a twisted product -dt² + e^{2f/(n-1)} ĥ to
//! spacetime geodesics η(λ) = (t(λ), σ(s(λ))), with ds/dλ = e^{-2f/(n-1)}.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{causal_type_of, integrate_geodesic, ConnectionKind, GeodesicPath, PathNode, WeightChannel};
use crate::error::{GeometryError, Result};
use crate::ode::{integrate, IntegrationControl};
use crate::spacetime::{CausalCharacter, ProductStructure, SpacetimeModel, TangentVector};

/// Which right-hand side drives the lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftSystem {
    /// Derived from the Euler-Lagrange equations of the twisted metric:
    /// D̂_s σ′ = ĥ(σ′,σ′) D̂f/(n-1), t″ = -ĥ(σ′,σ′) e^{-2f/(n-1)} ∂_t f/(n-1).
    #[default]
    Corrected,
    /// D̂_s σ′ = -½ D̂ e^{2f/(n-1)}, t″ = ∂_t f/(n-1), the unit-normalized variant with the
    /// opposite signs; kept to show that it does not produce geodesics.
    FlippedSigns,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    pub system: LiftSystem,
    pub path: GeodesicPath,
    pub causal_type: CausalCharacter,
    /// Levi-Civita geodesic residual of the lift at midpoints.
    pub geodesic_residual: f64,
    /// ĥ(σ′,σ′) at each node.
    pub base_speed_sq: Vec<f64>,
    /// max over nodes of |ln ĥ(σ′,σ′) - 2f/(n-1) - (value at start)|; zero exactly when ∂_t f = 0 along the lift.
    pub unit_normalization_drift: f64,
    /// max |ĥ(σ′,σ′) - ĥ(σ′,σ′)(start)|; zero for warped products.
    pub base_speed_drift: f64,
    /// max pointwise distance to a direct integration of the full metric from η′(0).
    pub direct_difference: f64,
}

struct BaseJet {
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    /// dh[a] = ∂_{y^a} ĥ
    dh: Vec<DMatrix<f64>>,
}

fn base_jet(product: &ProductStructure, x: &[f64]) -> Result<BaseJet> {
    let m = x.len() - 1;
    let mut h = DMatrix::zeros(m, m);
    let mut dh = vec![DMatrix::zeros(m, m); m];
    for a in 0..m {
        for b in a..m {
            let expr = product.base_component(a, b);
            if expr.is_zero_literal() {
                continue;
            }
            let j = expr.jet(x)?;
            h[(a, b)] = j.value;
            h[(b, a)] = j.value;
            for c in 0..m {
                dh[c][(a, b)] = j.gradient[c + 1];
                dh[c][(b, a)] = j.gradient[c + 1];
            }
        }
    }
    let h_inv = h.clone().try_inverse().ok_or_else(|| GeometryError::Degenerate(x.to_vec()))?;
    Ok(BaseJet { h, h_inv, dh })
}

impl BaseJet {
    fn quad(&self, u: &[f64]) -> f64 {
        let m = u.len();
        (0..m).map(|a| (0..m).map(|b| self.h[(a, b)] * u[a] * u[b]).sum::<f64>()).sum()
    }

    /// Γ̂^c_ab u^a u^b
    fn christoffel(&self, u: &[f64]) -> Vec<f64> {
        let m = u.len();
        let lowered: Vec<f64> = (0..m)
            .map(|l| {
                let mut acc = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        acc += (self.dh[a][(l, b)] - 0.5 * self.dh[l][(a, b)]) * u[a] * u[b];
                    }
                }
                acc
            })
            .collect();
        (0..m).map(|c| (0..m).map(|l| self.h_inv[(c, l)] * lowered[l]).sum()).collect()
    }

    fn raise(&self, w: &[f64]) -> Vec<f64> {
        let m = w.len();
        (0..m).map(|c| (0..m).map(|l| self.h_inv[(c, l)] * w[l]).sum()).collect()
    }
}

/// State layout: [t, W, y (m), u (m), s].
fn lift_rhs(
    model: &SpacetimeModel,
    product: &ProductStructure,
    system: LiftSystem,
    y: &[f64],
    dy: &mut [f64],
) -> Result<()> {
    let n = model.dim();
    let m = n - 1;
    let c = m as f64;
    let x: Vec<f64> = std::iter::once(y[0]).chain(y[2..2 + m].iter().copied()).collect();
    let u = &y[2 + m..2 + 2 * m];
    let fj = product.twist.jet(&x)?;
    let base = base_jet(product, &x)?;
    let decay = (-2.0 * fj.value / c).exp();
    let ft = fj.gradient[0];
    let grad_hat = base.raise(&fj.gradient[1..]);
    let gamma = base.christoffel(u);
    let speed = base.quad(u);
    dy[0] = y[1];
    match system {
        LiftSystem::Corrected => {
            dy[1] = -speed * decay * ft / c;
            for a in 0..m {
                dy[2 + m + a] = decay * (-gamma[a] + speed * grad_hat[a] / c);
            }
        }
        LiftSystem::FlippedSigns => {
            dy[1] = ft / c;
            for a in 0..m {
                dy[2 + m + a] = decay * (-gamma[a] - grad_hat[a] / (c * decay));
            }
        }
    }
    for a in 0..m {
        dy[2 + a] = u[a] * decay;
    }
    dy[2 + 2 * m] = decay;
    Ok(())
}

/// Lift the base curve with σ(0) = y0, σ′(0) = v0 and ω′(0) = w0, starting at chart point `start`.
pub fn lift_twisted_geodesic(
    model: &SpacetimeModel,
    start: &[f64],
    w0: f64,
    v0: &[f64],
    span: (f64, f64),
    ctrl: &IntegrationControl,
    system: LiftSystem,
) -> Result<LiftReport> {
    let product = model.product().ok_or_else(|| GeometryError::NotProduct(model.name.clone()))?;
    let n = model.dim();
    let m = n - 1;
    let c = m as f64;
    if start.len() != n {
        return Err(GeometryError::CoordinateCount { expected: n, got: start.len() });
    }
    if v0.len() != m {
        return Err(GeometryError::CoordinateCount { expected: m, got: v0.len() });
    }
    let mut y0 = vec![start[0], w0];
    y0.extend_from_slice(&start[1..]);
    y0.extend_from_slice(v0);
    y0.push(0.0);
    let rhs = |_l: f64, y: &[f64], dy: &mut [f64]| lift_rhs(model, product, system, y, dy);
    let point_of = |y: &[f64]| -> Vec<f64> { std::iter::once(y[0]).chain(y[2..2 + m].iter().copied()).collect() };
    let sol = integrate(rhs, span.0, &y0, span.1, ctrl, |y| model.contains(&point_of(y)))?;

    let mut nodes = Vec::with_capacity(sol.len());
    let mut base_speed_sq = Vec::with_capacity(sol.len());
    let mut normalization = Vec::with_capacity(sol.len());
    for ((lam, y), dy) in sol.t.iter().zip(&sol.y).zip(&sol.dy) {
        let x = point_of(y);
        let fj = product.twist.jet(&x)?;
        let decay = (-2.0 * fj.value / c).exp();
        let u = &y[2 + m..2 + 2 * m];
        let du = &dy[2 + m..2 + 2 * m];
        let mut velocity = vec![y[1]];
        velocity.extend(u.iter().map(|v| v * decay));
        let fdot: f64 = fj.gradient.iter().zip(&velocity).map(|(a, b)| a * b).sum();
        let mut acceleration = vec![dy[1]];
        acceleration.extend((0..m).map(|a| du[a] * decay - 2.0 / c * fdot * u[a] * decay));
        let base = base_jet(product, &x)?;
        let speed = base.quad(u);
        base_speed_sq.push(speed);
        normalization.push(speed.ln() - 2.0 * fj.value / c);
        nodes.push(PathNode { param: *lam, point: x, velocity, acceleration });
    }
    let g0 = model.metric_matrix(start)?;
    let causal_type = causal_type_of(&g0, &nodes[0].velocity)?;
    let channel = WeightChannel {
        alpha: c,
        values: sol.y.iter().map(|y| y[2 + 2 * m]).collect(),
        rates: sol.dy.iter().map(|dy| dy[2 + 2 * m]).collect(),
    };
    let path = GeodesicPath {
        connection: ConnectionKind::LeviCivita,
        causal_type,
        nodes,
        truncated: sol.truncated,
        control: *ctrl,
        channels: vec![channel],
    };
    let geodesic_residual = path.geodesic_residual(model, ConnectionKind::LeviCivita)?;
    let drift = |v: &[f64]| v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
    let unit_normalization_drift = if base_speed_sq.iter().all(|s| *s > 0.0) { drift(&normalization) } else { f64::NAN };
    let base_speed_drift = drift(&base_speed_sq);

    let init = TangentVector::new(start.to_vec(), path.nodes[0].velocity.clone())?;
    let direct = integrate_geodesic(model, ConnectionKind::LeviCivita, &init, (span.0, path.end()), ctrl)?;
    let mut direct_difference: f64 = 0.0;
    for node in &path.nodes {
        if (node.param - direct.end()) * (span.1 - span.0).signum() > 0.0 {
            break;
        }
        let st = direct.state_at(node.param);
        for (a, b) in st.point.iter().zip(&node.point) {
            direct_difference = direct_difference.max((a - b).abs());
        }
    }
    Ok(LiftReport {
        system,
        path,
        causal_type,
        geodesic_residual,
        base_speed_sq,
        unit_normalization_drift,
        base_speed_drift,
        direct_difference,
    })
}
