//! Fixtures shared by the engine benchmarks.

use bakry_emery::geodesic::{integrate_geodesic, GeodesicPath};
use bakry_emery::spacetime::Base;
use bakry_emery::{build_spacetime, Builtin, ConnectionKind, IntegrationControl, SpacetimeModel, SpacetimeSpec, TangentVector};

pub fn model(b: Builtin) -> SpacetimeModel {
    build_spacetime(&SpacetimeSpec::Builtin(b)).expect("builtin builds")
}

/// Round warped product: nontrivial metric, and the warp doubles as the potential.
pub fn weighted_warped() -> SpacetimeModel {
    model(Builtin::WarpedProduct { n: 4, warp: "sin(t)".into(), base: Base::Round })
}

pub fn observer_path(m: &SpacetimeModel, span: f64) -> GeodesicPath {
    let init = TangentVector::new(vec![0.1, 1.0, 1.2, 0.3], vec![1.2, 0.3, 0.2, 0.1]).expect("tangent vector");
    integrate_geodesic(m, ConnectionKind::LeviCivita, &init, (0.0, span), &IntegrationControl::default())
        .expect("geodesic integrates")
}
