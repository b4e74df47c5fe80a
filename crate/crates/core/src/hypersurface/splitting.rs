//! Mixed t–y identities on twisted products -dt² + e^{2f/(n-1)}ĥ, and the additive-split test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{shape_at, Hypersurface, SurfaceCausality};
use crate::curvature::curvature_at;
use crate::error::{GeometryError, Result};
use crate::spacetime::SpacetimeModel;

/// f splits as F(t) + G(y) when every sampled mixed partial is below this.
pub const SPLIT_TOL: f64 = 1e-9;
const MEAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub slice: f64,
    pub points: usize,
    /// max |Ric(∂t, ∂y) + ((n-2)/(n-1)) ∂t∂y f|
    pub ricci_residual: f64,
    /// max |∂y H - ∂t∂y f| with H the mean curvature of the slice, differentiated along it.
    pub mean_curvature_residual: f64,
    /// max |Hess f(∂t, ∂y) + (1/(n-1)) ∂t f ∂y f - ∂t∂y f|
    pub hessian_residual: f64,
    /// max |Ric_f^1(∂t, ∂y) - (1/(n-1)) ∂t∂y f|
    pub ric_f1_residual: f64,
    /// max |∂t∂y f| over samples and spatial directions.
    pub max_mixed_partial: f64,
    pub splits: bool,
    /// Ric(∂t, ∂y_a) at the first sample, a = 1..n-1.
    pub first_ricci_mixed: Vec<f64>,
    /// Ric_f^1(∂t, ∂y_a) at the first sample.
    pub first_ric_f1_mixed: Vec<f64>,
}

/// Identities on the slice t = `slice`, at `points` random spatial points of the chart domain.
pub fn splitting_diagnostics(model: &SpacetimeModel, slice: f64, points: usize, seed: u64) -> Result<SplittingReport> {
    if model.product().is_none() {
        return Err(GeometryError::NotProduct(model.name.clone()));
    }
    let n = model.dim();
    let c = (n - 1) as f64;
    let ric1 = crate::spacetime::SyntheticDimension::finite(1.0, n)?;
    let params: Vec<String> = (1..n).map(|k| format!("u{k}")).collect();
    let param_refs: Vec<&str> = params.iter().map(String::as_str).collect();
    let slice_src = slice.to_string();
    let embedding: Vec<&str> = std::iter::once(slice_src.as_str()).chain(param_refs.iter().copied()).collect();
    let leaf = Hypersurface::new(&param_refs, &embedding, SurfaceCausality::Spacelike, model.domain()[1..].to_vec())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SplittingReport {
        slice,
        points: 0,
        ricci_residual: 0.0,
        mean_curvature_residual: 0.0,
        hessian_residual: 0.0,
        ric_f1_residual: 0.0,
        max_mixed_partial: 0.0,
        splits: true,
        first_ricci_mixed: Vec::new(),
        first_ric_f1_mixed: Vec::new(),
    };
    for _ in 0..points {
        let mut p = model.sample_point(&mut rng);
        p[0] = slice;
        let b = curvature_at(model, &p)?;
        let ric_f1 = b.ric_f(ric1);
        let y = &p[1..];
        for a in 1..n {
            let mixed = b.coordinate_hess_f[(0, a)];
            report.max_mixed_partial = report.max_mixed_partial.max(mixed.abs());
            report.ricci_residual = report.ricci_residual.max((b.ricci[(0, a)] + (c - 1.0) / c * mixed).abs());
            let hess = b.hess_f[(0, a)] + b.df[0] * b.df[a] / c;
            report.hessian_residual = report.hessian_residual.max((hess - mixed).abs());
            report.ric_f1_residual = report.ric_f1_residual.max((ric_f1[(0, a)] - mixed / c).abs());

            let mut mean = [0.0; 2];
            for (slot, sign) in mean.iter_mut().zip([1.0, -1.0]) {
                let mut u = y.to_vec();
                u[a - 1] += sign * MEAN_STEP;
                *slot = shape_at(model, &leaf, &u)?.normals[0].mean;
            }
            let dh = (mean[0] - mean[1]) / (2.0 * MEAN_STEP);
            report.mean_curvature_residual = report.mean_curvature_residual.max((dh - mixed).abs());
        }
        if report.points == 0 {
            report.first_ricci_mixed = (1..n).map(|a| b.ricci[(0, a)]).collect();
            report.first_ric_f1_mixed = (1..n).map(|a| ric_f1[(0, a)]).collect();
        }
        report.points += 1;
    }
    report.splits = report.max_mixed_partial < SPLIT_TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::tests::model;
    use super::*;
    use crate::spacetime::{Base, Builtin};

    #[test]
    fn twisted_linear_mixed_term() {
        for base in [Base::Flat, Base::Round] {
            let m = model(Builtin::TwistedProduct { n: 4, twist: "t*y1".into(), base });
            let r = splitting_diagnostics(&m, 0.4, 20, 1).unwrap();
            assert!(r.ricci_residual < 1e-7 && r.ric_f1_residual < 1e-7 && r.hessian_residual < 1e-10, "{r:?}");
            assert!(r.mean_curvature_residual < 1e-6, "{}", r.mean_curvature_residual);
            assert!(!r.splits && (r.max_mixed_partial - 1.0).abs() < 1e-12);
            assert!((r.first_ricci_mixed[0] + 2.0 / 3.0).abs() < 1e-9);
            assert!((r.first_ric_f1_mixed[0] - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn additive_potential_splits() {
        let m = model(Builtin::TwistedProduct { n: 4, twist: "sin(t) + 0.5*y1*y1".into(), base: Base::Flat });
        let r = splitting_diagnostics(&m, -0.2, 20, 2).unwrap();
        assert!(r.splits && r.max_mixed_partial < SPLIT_TOL);
        assert!(r.ricci_residual < 1e-7 && r.ric_f1_residual < 1e-7);
        let m = model(Builtin::WarpedProduct { n: 4, warp: "t".into(), base: Base::Round });
        let r = splitting_diagnostics(&m, 0.0, 10, 3).unwrap();
        assert_eq!(r.max_mixed_partial, 0.0);
        assert!(r.ricci_residual < 1e-9);
    }

    #[test]
    fn non_product_rejected() {
        let m = model(Builtin::DeSitter { n: 4 });
        assert!(matches!(splitting_diagnostics(&m, 0.0, 1, 0), Err(GeometryError::NotProduct(_))));
    }
}
