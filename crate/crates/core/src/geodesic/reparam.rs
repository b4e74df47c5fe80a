//! The f-reparametrization s(t) = ∫ e^{-2f/α} dt, completeness estimates, and the check that
//! reparametrized Levi-Civita geodesics solve the weighted or conformal geodesic equation.

use serde::Serialize;

use super::{connection_pair, ConnectionKind, GeodesicPath};
use crate::error::{GeometryError, Result};
use crate::ode::{hermite_eval, monotone_inverse, GAUSS5};
use crate::spacetime::{CausalCharacter, SpacetimeModel};

/// Partial integrals above this are reported as divergent when no closed form is available.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMethod {
    /// f is affine along the path; the tail integral is evaluated exactly.
    AffineTail,
    /// Heuristic: only the partial integral is known, compared against a divergence bound.
    PartialBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LimitEstimate {
    Finite { value: f64, method: LimitMethod },
    Divergent { method: LimitMethod },
    Undetermined { partial: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamTable {
    pub alpha: f64,
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    /// ds/dt = e^{-2f/α} at each sample.
    pub rates: Vec<f64>,
    pub limit: LimitEstimate,
}

pub fn reparametrize(model: &SpacetimeModel, path: &GeodesicPath, alpha: f64) -> Result<ReparamTable> {
    if alpha <= 0.0 {
        return Err(GeometryError::Invalid(format!("reparametrization weight must be positive, got {alpha}")));
    }
    let params = path.params();
    let rate_at = |x: &[f64]| -> Result<f64> { Ok((-2.0 * model.potential().eval(x)? / alpha).exp()) };
    let (values, rates) = match path.channel(alpha) {
        Some(c) => (c.values.clone(), c.rates.clone()),
        None => {
            // Composite Gauss-Legendre over the interpolated path.
            let mut values = vec![0.0];
            let mut rates = vec![rate_at(&path.nodes[0].point)?];
            for w in path.nodes.windows(2) {
                let (a, b) = (w[0].param, w[1].param);
                let mut acc = 0.0;
                for (xi, wt) in GAUSS5 {
                    let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                    acc += wt * rate_at(&path.state_at(t).point)?;
                }
                values.push(values.last().unwrap() + 0.5 * (b - a) * acc);
                rates.push(rate_at(&w[1].point)?);
            }
            (values, rates)
        }
    };
    let limit = estimate_limit(model, path, alpha, &values)?;
    Ok(ReparamTable { alpha, params, values, rates, limit })
}

fn estimate_limit(model: &SpacetimeModel, path: &GeodesicPath, alpha: f64, values: &[f64]) -> Result<LimitEstimate> {
    let partial = *values.last().unwrap();
    // (f∘γ)' and (f∘γ)'' at each node from coordinate jets.
    let mut first = Vec::with_capacity(path.nodes.len());
    let mut affine = true;
    for node in &path.nodes {
        let j = model.potential().jet(&node.point)?;
        let n = node.point.len();
        let d1: f64 = (0..n).map(|i| j.gradient[i] * node.velocity[i]).sum();
        let mut d2: f64 = (0..n).map(|i| j.gradient[i] * node.acceleration[i]).sum();
        for i in 0..n {
            for k in 0..n {
                d2 += j.hessian(i, k) * node.velocity[i] * node.velocity[k];
            }
        }
        if d2.abs() > 1e-10 * (1.0 + d1.abs()) {
            affine = false;
        }
        first.push(d1);
    }
    let forward = path.end() >= path.start();
    if affine && first.iter().all(|d| (d - first[0]).abs() <= 1e-10 * (1.0 + first[0].abs())) {
        let slope = if forward { first[0] } else { -first[0] };
        if slope <= 0.0 {
            return Ok(LimitEstimate::Divergent { method: LimitMethod::AffineTail });
        }
        let f_end = model.potential().eval(&path.nodes.last().unwrap().point)?;
        let tail = alpha * (-2.0 * f_end / alpha).exp() / (2.0 * slope);
        let value = if forward { partial + tail } else { partial - tail };
        return Ok(LimitEstimate::Finite { value, method: LimitMethod::AffineTail });
    }
    if partial.abs() > DIVERGENCE_BOUND {
        return Ok(LimitEstimate::Divergent { method: LimitMethod::PartialBound });
    }
    Ok(LimitEstimate::Undetermined { partial })
}

impl ReparamTable {
    /// s at an arbitrary path parameter (Hermite with exact slopes).
    pub fn s_at(&self, t: f64) -> f64 {
        let k = crate::ode::locate(&self.params, t);
        if self.params.len() == 1 {
            return self.values[0];
        }
        hermite_eval(
            self.params[k],
            self.params[k + 1],
            self.values[k],
            self.values[k + 1],
            self.rates[k],
            self.rates[k + 1],
            t,
        )
        .0
    }

    /// Path parameter t with s(t) = s, by monotone inverse interpolation polished with the
    /// exact integrand along the path.
    pub fn t_at(&self, model: &SpacetimeModel, path: &GeodesicPath, s: f64) -> f64 {
        let alpha = self.alpha;
        monotone_inverse(&self.params, &self.values, &self.rates, s, |t| {
            let x = path.state_at(t).point;
            let f = model.potential().eval(&x).ok()?;
            Some((self.s_at(t), (-2.0 * f / alpha).exp()))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamReport {
    pub target: ConnectionKind,
    pub alpha: f64,
    pub samples: usize,
    pub max_residual: f64,
    /// Largest |t(s(t)) - t| at the probe points, a check of the inversion.
    pub inversion_error: f64,
}

/// σ(s) = γ(t(s)) checked against the target connection's geodesic equation at midpoints in s.
pub fn verify_reparam_lemma(model: &SpacetimeModel, path: &GeodesicPath, target: ConnectionKind) -> Result<ReparamReport> {
    if path.connection != ConnectionKind::LeviCivita {
        return Err(GeometryError::Invalid("the reparametrization check needs a Levi-Civita geodesic".into()));
    }
    let n = path.dim();
    let alpha = match target {
        ConnectionKind::Weighted => n as f64 - 1.0,
        ConnectionKind::Conformal => {
            target.check_dim(n)?;
            if path.causal_type != CausalCharacter::Null {
                return Err(GeometryError::WrongCausalType { expected: "null", got: path.causal_type.name() });
            }
            n as f64 - 2.0
        }
        ConnectionKind::LeviCivita => {
            return Err(GeometryError::Invalid("target connection must be weighted or conformal".into()))
        }
    };
    let table = reparametrize(model, path, alpha)?;
    let mut worst: f64 = 0.0;
    let mut inversion_error: f64 = 0.0;
    let mut samples = 0;
    for k in 0..table.values.len().saturating_sub(1) {
        let s_mid = 0.5 * (table.values[k] + table.values[k + 1]);
        let t = table.t_at(model, path, s_mid);
        inversion_error = inversion_error.max((table.s_at(t) - s_mid).abs());
        let st = path.state_at(t);
        let jet = model.potential().jet(&st.point)?;
        let fp: f64 = jet.gradient.iter().zip(&st.velocity).map(|(a, b)| a * b).sum();
        let e2 = (2.0 * jet.value / alpha).exp();
        let sigma_p: Vec<f64> = st.velocity.iter().map(|v| e2 * v).collect();
        let sigma_pp: Vec<f64> =
            (0..n).map(|i| e2 * e2 * (st.acceleration[i] + 2.0 / alpha * fp * st.velocity[i])).collect();
        let gamma = connection_pair(model, target, &st.point, &sigma_p, &sigma_p)?;
        for i in 0..n {
            worst = worst.max((sigma_pp[i] + gamma[i]).abs());
        }
        samples += 1;
    }
    Ok(ReparamReport { target, alpha, samples, max_residual: worst, inversion_error })
}
