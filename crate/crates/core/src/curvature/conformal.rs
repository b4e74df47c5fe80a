//! Ricci tensor of e^{-2f/(n-2)} g compared against the Bakry-Emery tensors of (g, f).

use serde::Serialize;

use super::{curvature_at, quad, CAUSAL_TOL};
use crate::error::{GeometryError, Result};
use crate::spacetime::{classify_vector, conformal_rescale, CausalCharacter, SpacetimeModel, SyntheticDimension};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalIdentityReport {
    /// max |Ric_g̃ - Ric_f^2 - (Δf - |df|²)/(n-2) g| over components.
    pub ricci_residual: f64,
    /// Same with Δf + |df|² in place of the drift Laplacian; nonzero whenever |df|² ≠ 0.
    pub plus_sign_residual: f64,
    /// max |Ric_f^2 - Ric_f^N - (2-N)/((n-N)(n-2)) df⊗df|.
    pub dimension_shift_residual: f64,
    pub causal_character: CausalCharacter,
    pub ric_tilde_along: f64,
    pub ric_f_2_along: f64,
    pub ric_f_n_along: f64,
    /// For null X: |Ric_g̃(X,X) - Ric_f^N(X,X) - (2-N)/((n-N)(n-2)) df(X)²|.
    pub null_restriction_residual: Option<f64>,
    /// For null X: |Ric_g̃(X,X) - Ric_f^2(X,X)|.
    pub null_ric_f_2_residual: Option<f64>,
}

pub fn conformal_identity_check(
    model: &SpacetimeModel,
    p: &[f64],
    x: &[f64],
    synthetic: SyntheticDimension,
) -> Result<ConformalIdentityReport> {
    let n = model.dim();
    if n < 3 {
        return Err(GeometryError::DimensionTooSmall { what: "the conformal identity check", min: 3, n });
    }
    synthetic.check_dim(n)?;
    let rescaled = conformal_rescale(model)?;
    let base = curvature_at(model, p)?;
    let tilde = curvature_at(&rescaled, p)?;
    let w = 1.0 / (n as f64 - 2.0);
    let ric2 = base.ric_f(SyntheticDimension::finite(2.0, n)?);
    let ricn = base.ric_f(synthetic);
    let g = &base.metric.g;
    let drift = base.drift_laplacian_f;
    let plus = base.laplacian_f + base.norm_df_sq;
    let mut ricci_residual: f64 = 0.0;
    let mut plus_sign_residual: f64 = 0.0;
    let mut dimension_shift_residual: f64 = 0.0;
    let shift = synthetic.shifted_ratio(2.0) * w;
    for i in 0..n {
        for j in 0..n {
            let rt = tilde.ricci[(i, j)];
            ricci_residual = ricci_residual.max((rt - ric2[(i, j)] - w * drift * g[(i, j)]).abs());
            plus_sign_residual = plus_sign_residual.max((rt - ric2[(i, j)] - w * plus * g[(i, j)]).abs());
            let expected = ricn[(i, j)] + shift * base.df[i] * base.df[j];
            dimension_shift_residual = dimension_shift_residual.max((ric2[(i, j)] - expected).abs());
        }
    }
    let scale: f64 = x.iter().map(|v| v * v).sum();
    let causal_character = classify_vector(g, x, CAUSAL_TOL * scale.max(1.0))?;
    let ric_tilde_along = quad(&tilde.ricci, x, x);
    let ric_f_2_along = quad(&ric2, x, x);
    let ric_f_n_along = quad(&ricn, x, x);
    let fx = base.df_along(x);
    let (null_restriction_residual, null_ric_f_2_residual) = if causal_character == CausalCharacter::Null {
        (
            Some((ric_tilde_along - ric_f_n_along - shift * fx * fx).abs()),
            Some((ric_tilde_along - ric_f_2_along).abs()),
        )
    } else {
        (None, None)
    };
    Ok(ConformalIdentityReport {
        ricci_residual,
        plus_sign_residual,
        dimension_shift_residual,
        causal_character,
        ric_tilde_along,
        ric_f_2_along,
        ric_f_n_along,
        null_restriction_residual,
        null_ric_f_2_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{build_spacetime, Builtin, SpacetimeSpec};

    #[test]
    fn linear_potential_null_direction() {
        let m = build_spacetime(&SpacetimeSpec::Builtin(Builtin::MinkowskiWithF { n: 4, f: "t".into() })).unwrap();
        let x = [1.0, 0.6, 0.8, 0.0];
        let r = conformal_identity_check(&m, &[0.3, 0.1, 0.2, -0.4], &x, SyntheticDimension::finite(1.0, 4).unwrap())
            .unwrap();
        assert!(r.ricci_residual < 1e-8);
        assert!((r.ric_tilde_along - 0.5).abs() < 1e-8);
        assert!((r.ric_f_2_along - 0.5).abs() < 1e-12);
        assert!(r.null_restriction_residual.unwrap() < 1e-8);
        // |df|² = -1 here, so the plus-sign variant misses by 2|df|²/(n-2) = 1 on the diagonal.
        assert!((r.plus_sign_residual - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_potential_is_exact() {
        let m = build_spacetime(&SpacetimeSpec::Builtin(Builtin::DeSitter { n: 4 })).unwrap();
        let r = conformal_identity_check(&m, &[0.2, 1.0, 1.2, 0.3], &[1.0, 0.0, 0.0, 0.0], SyntheticDimension::infinite(4))
            .unwrap();
        assert_eq!(r.ricci_residual, 0.0);
        assert_eq!(r.dimension_shift_residual, 0.0);
    }
}
