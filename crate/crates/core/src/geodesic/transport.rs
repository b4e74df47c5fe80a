//! Parallel transport V′ = -Γ̂(γ′, V) along geodesics and coordinate polygons.

use serde::Serialize;

use super::{acceleration, connection_pair, ConnectionKind, GeodesicPath};
use crate::error::{GeometryError, Result};
use crate::ode::{integrate, IntegrationControl};
use crate::spacetime::{inner, SpacetimeModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSample {
    pub param: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportedField {
    pub connection: ConnectionKind,
    pub samples: Vec<TransportSample>,
    /// max |g(V,V) - g(V,V)(start)|
    pub norm_drift: f64,
    /// max |g(V,γ′) - g(V,γ′)(start)|
    pub tangent_drift: f64,
}

impl TransportedField {
    pub fn last(&self) -> &TransportSample {
        self.samples.last().unwrap()
    }

    fn finish(model: &SpacetimeModel, connection: ConnectionKind, samples: Vec<TransportSample>) -> Result<Self> {
        let mut norm_drift: f64 = 0.0;
        let mut tangent_drift: f64 = 0.0;
        let mut first: Option<(f64, f64)> = None;
        for s in &samples {
            let g = model.metric_matrix(&s.point)?;
            let q = (inner(&g, &s.vector, &s.vector), inner(&g, &s.vector, &s.velocity));
            let (q0, t0) = *first.get_or_insert(q);
            norm_drift = norm_drift.max((q.0 - q0).abs());
            tangent_drift = tangent_drift.max((q.1 - t0).abs());
        }
        Ok(Self { connection, samples, norm_drift, tangent_drift })
    }
}

/// Transport v0 along a geodesic path with connection `kind`. The geodesic is re-integrated
/// jointly with the transported vector from the path's initial data and controls.
pub fn parallel_transport(
    model: &SpacetimeModel,
    kind: ConnectionKind,
    path: &GeodesicPath,
    v0: &[f64],
) -> Result<TransportedField> {
    let n = path.dim();
    kind.check_dim(n)?;
    if v0.len() != n {
        return Err(GeometryError::CoordinateCount { expected: n, got: v0.len() });
    }
    let start = &path.nodes[0];
    let mut y0 = start.point.clone();
    y0.extend_from_slice(&start.velocity);
    y0.extend_from_slice(v0);
    let path_kind = path.connection;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (x, v, w) = (&y[..n], &y[n..2 * n], &y[2 * n..]);
        let a = acceleration(model, path_kind, x, v)?;
        let gw = connection_pair(model, kind, x, v, w)?;
        dy[..n].copy_from_slice(v);
        dy[n..2 * n].copy_from_slice(&a);
        for k in 0..n {
            dy[2 * n + k] = -gw[k];
        }
        Ok(())
    };
    let sol = integrate(rhs, path.start(), &y0, path.end(), &path.control, |y| model.contains(&y[..n]))?;
    let samples = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(t, y)| TransportSample {
            param: *t,
            point: y[..n].to_vec(),
            velocity: y[n..2 * n].to_vec(),
            vector: y[2 * n..].to_vec(),
        })
        .collect();
    TransportedField::finish(model, kind, samples)
}

/// Transport along straight coordinate segments through `vertices`; each segment has unit
/// parameter length.
pub fn transport_along_polygon(
    model: &SpacetimeModel,
    kind: ConnectionKind,
    vertices: &[Vec<f64>],
    v0: &[f64],
    ctrl: &IntegrationControl,
) -> Result<TransportedField> {
    let n = model.dim();
    kind.check_dim(n)?;
    if vertices.len() < 2 {
        return Err(GeometryError::Invalid("a polygon needs at least two vertices".into()));
    }
    let mut w = v0.to_vec();
    let mut samples = Vec::new();
    for (seg, pair) in vertices.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dir: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            let x: Vec<f64> = (0..n).map(|i| a[i] + t * dir[i]).collect();
            let gw = connection_pair(model, kind, &x, &dir, y)?;
            for k in 0..n {
                dy[k] = -gw[k];
            }
            Ok(())
        };
        let sol = integrate(rhs, 0.0, &w, 1.0, ctrl, |_| true)?;
        if sol.truncated {
            return Err(GeometryError::Invalid(format!("transport failed on polygon segment {seg}")));
        }
        let skip = usize::from(seg > 0);
        for (t, y) in sol.t.iter().zip(&sol.y).skip(skip) {
            samples.push(TransportSample {
                param: seg as f64 + t,
                point: (0..n).map(|i| a[i] + t * dir[i]).collect(),
                velocity: dir.clone(),
                vector: y.clone(),
            });
        }
        w = sol.y.last().unwrap().clone();
    }
    TransportedField::finish(model, kind, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate_geodesic;
    use crate::spacetime::{build_spacetime, Base, Builtin, SpacetimeSpec, TangentVector};

    #[test]
    fn minkowski_components_constant() {
        let m = build_spacetime(&SpacetimeSpec::Builtin(Builtin::Minkowski { n: 4 })).unwrap();
        let init = TangentVector::new(vec![0.0; 4], vec![1.0, 0.3, 0.2, 0.0]).unwrap();
        let ctrl = IntegrationControl::default();
        let path = integrate_geodesic(&m, ConnectionKind::LeviCivita, &init, (0.0, 2.0), &ctrl).unwrap();
        let field = parallel_transport(&m, ConnectionKind::LeviCivita, &path, &[0.5, 1.0, -1.0, 2.0]).unwrap();
        for s in &field.samples {
            assert_eq!(s.vector, vec![0.5, 1.0, -1.0, 2.0]);
        }
    }

    #[test]
    fn levi_civita_preserves_inner_products() {
        let m = build_spacetime(&SpacetimeSpec::Builtin(Builtin::DeSitter { n: 4 })).unwrap();
        let init = TangentVector::new(vec![0.0, 1.0, 1.2, 0.3], vec![1.2, 0.3, -0.2, 0.4]).unwrap();
        let path =
            integrate_geodesic(&m, ConnectionKind::LeviCivita, &init, (0.0, 1.5), &IntegrationControl::default()).unwrap();
        let field = parallel_transport(&m, ConnectionKind::LeviCivita, &path, &[0.2, 1.0, 0.5, -0.3]).unwrap();
        assert!(field.norm_drift < 1e-8 && field.tangent_drift < 1e-8, "{} {}", field.norm_drift, field.tangent_drift);
    }

    #[test]
    fn weighted_parallel_time_field() {
        let m = build_spacetime(&SpacetimeSpec::Builtin(Builtin::WarpedProduct { n: 4, warp: "t".into(), base: Base::Flat }))
            .unwrap();
        let start = vec![-0.5, 0.1, 0.2, -0.3];
        let verts = vec![start.clone(), vec![0.3, 0.4, 0.2, -0.3], vec![0.8, -0.2, 0.5, 0.1]];
        let p0 = (2.0 * start[0] / 3.0f64).exp();
        let field =
            transport_along_polygon(&m, ConnectionKind::Weighted, &verts, &[p0, 0.0, 0.0, 0.0], &IntegrationControl::default())
                .unwrap();
        for s in &field.samples {
            let expected = (2.0 * s.point[0] / 3.0).exp();
            assert!((s.vector[0] - expected).abs() < 1e-9);
            assert!(s.vector[1..].iter().all(|x| x.abs() < 1e-12));
        }
    }
}
