//! Pointwise curvature: Levi-Civita data, Hess f, the Bakry-Emery tensors and tidal endomorphisms.

mod cd;
mod connection;
mod conformal;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::frame::{null_frame, timelike_frame, AdaptedFrame};
use crate::spacetime::{classify_vector, inner, CausalCharacter, MetricJet, SpacetimeModel, SyntheticDimension};

pub use cd::{cd_check, CdCondition, CdReport, CdVerdict, Sampling};
pub use conformal::{conformal_identity_check, ConformalIdentityReport};
pub use connection::{Connection, ConnectionKind, Riemann};

/// Tolerance for deciding the causal character of a supplied direction, relative to its size.
pub const CAUSAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub point: Vec<f64>,
    pub metric: MetricJet,
    pub christoffel: Connection,
    pub riemann: Riemann,
    pub ricci: DMatrix<f64>,
    pub scalar_curvature: f64,
    pub potential: f64,
    pub df: Vec<f64>,
    /// Plain second partials ∂i∂j f.
    pub coordinate_hess_f: DMatrix<f64>,
    pub hess_f: DMatrix<f64>,
    pub grad_f: Vec<f64>,
    pub norm_df_sq: f64,
    pub laplacian_f: f64,
    /// Δf - |df|²
    pub drift_laplacian_f: f64,
}

pub fn curvature_at(model: &SpacetimeModel, p: &[f64]) -> Result<CurvatureBundle> {
    let metric = model.metric_at(p)?;
    let n = metric.dim();
    let christoffel = Connection::levi_civita(&metric);
    let riemann = christoffel.riemann();
    let ricci = riemann.ricci();
    let scalar_curvature = metric.g_inv.component_mul(&ricci).sum();
    let fj = model.potential().jet(p)?;
    let df = fj.gradient.clone();
    let coordinate_hess_f = DMatrix::from_fn(n, n, |i, j| fj.hessian(i, j));
    let hess_f = DMatrix::from_fn(n, n, |i, j| {
        coordinate_hess_f[(i, j)] - (0..n).map(|k| christoffel.gamma(k, i, j) * df[k]).sum::<f64>()
    });
    let grad_f = metric.raise(&df);
    let norm_df_sq: f64 = df.iter().zip(&grad_f).map(|(a, b)| a * b).sum();
    let laplacian_f = metric.g_inv.component_mul(&hess_f).sum();
    Ok(CurvatureBundle {
        point: p.to_vec(),
        metric,
        christoffel,
        riemann,
        ricci,
        scalar_curvature,
        potential: fj.value,
        df,
        coordinate_hess_f,
        hess_f,
        grad_f,
        norm_df_sq,
        laplacian_f,
        drift_laplacian_f: laplacian_f - norm_df_sq,
    })
}

fn quad(m: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += m[(i, j)] * u[i] * v[j];
        }
    }
    s
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Ric + Hess f - df⊗df/(N-n); the df⊗df term is absent for infinite N.
    pub fn ric_f(&self, synthetic: SyntheticDimension) -> DMatrix<f64> {
        let c = synthetic.df_coefficient();
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.ricci[(i, j)] + self.hess_f[(i, j)] + c * self.df[i] * self.df[j])
    }

    /// Ric_f^N at a value of N that may equal n (then None).
    pub fn ric_f_at(&self, value: f64) -> Option<DMatrix<f64>> {
        SyntheticDimension::finite(value, self.dim()).ok().map(|s| self.ric_f(s))
    }

    pub fn df_along(&self, x: &[f64]) -> f64 {
        self.df.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn hess_along(&self, x: &[f64], y: &[f64]) -> f64 {
        quad(&self.hess_f, x, y)
    }

    pub fn bilinear(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
        quad(m, x, y)
    }

    pub fn connection(&self, kind: ConnectionKind) -> Result<Connection> {
        match kind {
            ConnectionKind::LeviCivita => Ok(self.christoffel.clone()),
            ConnectionKind::Weighted => Ok(Connection::weighted(&self.christoffel, &self.df, &self.coordinate_hess_f)),
            ConnectionKind::Conformal => {
                Connection::conformal(&self.christoffel, &self.metric, &self.df, &self.coordinate_hess_f)
            }
        }
    }

    /// Matrix g(e_a, R(e_b, x)x) over the transverse basis.
    pub fn tidal_matrix(&self, basis: &[Vec<f64>], x: &[f64]) -> DMatrix<f64> {
        let images: Vec<Vec<f64>> = basis.iter().map(|e| self.riemann.apply(e, x, x)).collect();
        DMatrix::from_fn(basis.len(), basis.len(), |a, b| inner(&self.metric.g, &basis[a], &images[b]))
    }

    /// Closed-form curvature of the weighted connection applied to (X, Y, Z).
    pub fn weighted_curvature_formula(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let w = 1.0 / (self.dim() as f64 - 1.0);
        let (fx, fy, fz) = (self.df_along(x), self.df_along(y), self.df_along(z));
        let cy = w * (self.hess_along(y, z) + w * fy * fz);
        let cx = w * (self.hess_along(x, z) + w * fx * fz);
        let r = self.riemann.apply(x, y, z);
        (0..self.dim()).map(|l| r[l] + cy * x[l] - cx * y[l]).collect()
    }

    /// Closed-form curvature of e^{-2f/(n-2)} g, as derived from the difference tensor of the
    /// two Levi-Civita connections. `flip_product_sign` flips the sign of the df(X)df(Z) term
    /// multiplying Y, reproducing the variant with inconsistent signs.
    pub fn conformal_curvature_formula(&self, x: &[f64], y: &[f64], z: &[f64], flip_product_sign: bool) -> Vec<f64> {
        let n = self.dim();
        let w = 1.0 / (n as f64 - 2.0);
        let g = &self.metric.g;
        let (fx, fy, fz) = (self.df_along(x), self.df_along(y), self.df_along(z));
        let cx_sign = if flip_product_sign { -1.0 } else { 1.0 };
        let coef_x = w * (self.hess_along(y, z) + w * fy * fz);
        let coef_y = w * (self.hess_along(x, z) + cx_sign * w * fx * fz);
        // ∇_V ∇f = g^{-1} Hess f(·, V)
        let hess_raise = |v: &[f64]| -> Vec<f64> {
            let lowered: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.hess_f[(i, j)] * v[j]).sum()).collect();
            self.metric.raise(&lowered)
        };
        let (hy, hx) = (hess_raise(y), hess_raise(x));
        let (gxz, gyz) = (inner(g, x, z), inner(g, y, z));
        let r = self.riemann.apply(x, y, z);
        (0..n)
            .map(|l| {
                r[l] + coef_x * x[l] - coef_y * y[l]
                    - w * (gxz * (hy[l] + w * self.grad_f[l] * fy) - gyz * (hx[l] + w * self.grad_f[l] * fx))
                    - w * w * (gyz * x[l] - gxz * y[l]) * self.norm_df_sq
            })
            .collect()
    }
}

/// R_f (timelike, α = n-1) or R̄_f (null, α = n-2) from the unweighted tidal matrix.
pub fn weighted_tidal(tidal: &DMatrix<f64>, hess_xx: f64, f_prime: f64, alpha: f64) -> DMatrix<f64> {
    let shift = (hess_xx + f_prime * f_prime / alpha) / alpha;
    let d = tidal.nrows();
    tidal + DMatrix::identity(d, d) * shift
}

#[derive(Debug, Clone, Serialize)]
pub struct BakryEmeryBundle {
    pub synthetic_dimension: SyntheticDimension,
    pub causal_character: CausalCharacter,
    pub direction: Vec<f64>,
    #[serde(skip)]
    pub ric_f_n: DMatrix<f64>,
    #[serde(skip)]
    pub ric_f_1: Option<DMatrix<f64>>,
    #[serde(skip)]
    pub ric_f_2: Option<DMatrix<f64>>,
    pub ric_f_n_along: f64,
    pub f_prime: f64,
    pub hess_along: f64,
    #[serde(skip)]
    pub frame: AdaptedFrame,
    /// R_f in the timelike case, R̄_f in the null case, in frame components.
    #[serde(skip)]
    pub tidal: DMatrix<f64>,
    pub trace: f64,
    /// Ric_f^N(γ′,γ′) + (a-N)/((n-N)(n-a)) f′², a = 1 or 2.
    pub trace_expected: f64,
    pub trace_residual: f64,
}

pub fn bakry_emery_at(
    model: &SpacetimeModel,
    p: &[f64],
    direction: &[f64],
    synthetic: SyntheticDimension,
) -> Result<BakryEmeryBundle> {
    let bundle = curvature_at(model, p)?;
    bakry_emery_from(&bundle, direction, synthetic)
}

pub fn bakry_emery_from(
    bundle: &CurvatureBundle,
    direction: &[f64],
    synthetic: SyntheticDimension,
) -> Result<BakryEmeryBundle> {
    let n = bundle.dim();
    synthetic.check_dim(n)?;
    if direction.len() != n {
        return Err(GeometryError::CoordinateCount { expected: n, got: direction.len() });
    }
    let g = &bundle.metric.g;
    let scale: f64 = direction.iter().map(|x| x * x).sum();
    let character = classify_vector(g, direction, CAUSAL_TOL * scale.max(1.0))?;
    let (frame, a) = match character {
        CausalCharacter::Timelike => {
            let norm = (-inner(g, direction, direction)).sqrt();
            let unit: Vec<f64> = direction.iter().map(|x| x / norm).collect();
            (timelike_frame(g, &unit, 1e-9)?, 1.0)
        }
        CausalCharacter::Null => {
            if n < 3 {
                return Err(GeometryError::DimensionTooSmall { what: "the null tidal endomorphism", min: 3, n });
            }
            (null_frame(g, &bundle.metric.g_inv, direction, CAUSAL_TOL)?, 2.0)
        }
        CausalCharacter::Spacelike => {
            return Err(GeometryError::WrongCausalType { expected: "timelike or null", got: "spacelike" })
        }
    };
    let alpha = n as f64 - a;
    let f_prime = bundle.df_along(direction);
    let hess_along = bundle.hess_along(direction, direction);
    let tidal = weighted_tidal(&bundle.tidal_matrix(frame.transverse_basis(), direction), hess_along, f_prime, alpha);
    let ric_f_n = bundle.ric_f(synthetic);
    let ric_f_n_along = quad(&ric_f_n, direction, direction);
    let trace = tidal.trace();
    let trace_expected = ric_f_n_along + synthetic.shifted_ratio(a) / alpha * f_prime * f_prime;
    Ok(BakryEmeryBundle {
        synthetic_dimension: synthetic,
        causal_character: character,
        direction: direction.to_vec(),
        ric_f_1: bundle.ric_f_at(1.0),
        ric_f_2: bundle.ric_f_at(2.0),
        ric_f_n,
        ric_f_n_along,
        f_prime,
        hess_along,
        frame,
        tidal,
        trace,
        trace_expected,
        trace_residual: (trace - trace_expected).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{build_spacetime, conformal_rescale, Base, Builtin, SpacetimeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(b: Builtin) -> SpacetimeModel {
        build_spacetime(&SpacetimeSpec::Builtin(b)).unwrap()
    }

    #[test]
    fn minkowski_is_flat() {
        let m = model(Builtin::Minkowski { n: 4 });
        let c = curvature_at(&m, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(c.ricci.abs().max(), 0.0);
        assert_eq!(c.hess_f.abs().max(), 0.0);
        assert_eq!(c.norm_df_sq, 0.0);
        for l in 0..4 {
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        assert_eq!(c.riemann.get(l, k, i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn de_sitter_ricci_is_three_g() {
        let m = model(Builtin::DeSitter { n: 4 });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = m.sample_point(&mut rng);
            let c = curvature_at(&m, &p).unwrap();
            let scale = c.metric.g.abs().max();
            assert!((&c.ricci - &c.metric.g * 3.0).abs().max() < 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn linear_potential_gradient() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "1*t".into() });
        let c = curvature_at(&m, &[0.2, 0.0, 0.1, 0.0]).unwrap();
        assert_eq!(c.hess_f.abs().max(), 0.0);
        assert_eq!(c.grad_f, vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.norm_df_sq, -1.0);
    }

    #[test]
    fn trace_identity_examples() {
        let m = model(Builtin::MinkowskiWithF { n: 4, f: "t".into() });
        let n1 = SyntheticDimension::finite(1.0, 4).unwrap();
        let b = bakry_emery_at(&m, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0], n1).unwrap();
        assert!((b.trace - 1.0 / 3.0).abs() < 1e-12);
        assert!((b.trace_expected - 1.0 / 3.0).abs() < 1e-12);
        assert!((b.ric_f_n_along - 1.0 / 3.0).abs() < 1e-12);

        let flat = model(Builtin::EinsteinStatic { n: 4 });
        let c = curvature_at(&flat, &[0.0, 1.0, 1.0, 0.5]).unwrap();
        let f_free = [SyntheticDimension::infinite(4), SyntheticDimension::finite(-5.0, 4).unwrap(), n1];
        for s in f_free {
            assert_eq!(c.ric_f(s), &c.ricci + &c.hess_f);
        }
    }

    #[test]
    fn spacelike_direction_rejected() {
        let m = model(Builtin::Minkowski { n: 4 });
        let r = bakry_emery_at(&m, &[0.0; 4], &[0.0, 1.0, 0.0, 0.0], SyntheticDimension::infinite(4));
        assert!(matches!(r, Err(GeometryError::WrongCausalType { .. })));
    }

    fn twisted() -> SpacetimeModel {
        model(Builtin::TwistedProduct { n: 4, twist: "0.3*t*y1 + 0.2*y2^2 - 0.1*t^2".into(), base: Base::Flat })
    }

    #[test]
    fn riemann_symmetries() {
        let m = twisted();
        let c = curvature_at(&m, &[0.3, 0.2, -0.4, 0.5]).unwrap();
        let low = c.riemann.lowered(&c.metric.g);
        let at = |l: usize, k: usize, i: usize, j: usize| low[((l * 4 + k) * 4 + i) * 4 + j];
        for l in 0..4 {
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        assert!((c.riemann.get(l, k, i, j) + c.riemann.get(l, k, j, i)).abs() < 1e-10);
                        assert!((at(l, k, i, j) + at(l, i, j, k) + at(l, j, k, i)).abs() < 1e-9);
                    }
                }
            }
        }
        assert!((&c.ricci - c.ricci.transpose()).abs().max() < 1e-10);
    }

    #[test]
    fn weighted_curvature_matches_closed_form() {
        let m = twisted();
        let c = curvature_at(&m, &[0.1, -0.3, 0.4, 0.2]).unwrap();
        let r = c.connection(ConnectionKind::Weighted).unwrap().riemann();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let [x, y, z]: [Vec<f64>; 3] = std::array::from_fn(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect());
            let numeric = r.apply(&x, &y, &z);
            let closed = c.weighted_curvature_formula(&x, &y, &z);
            for l in 0..4 {
                assert!((numeric[l] - closed[l]).abs() < 1e-10);
            }
        }
        let ric1 = c.ric_f_at(1.0).unwrap();
        assert!((r.ricci() - ric1).abs().max() < 1e-10);
    }

    #[test]
    fn conformal_connection_is_levi_civita_of_rescaled_metric() {
        let m = twisted();
        let p = [0.1, -0.3, 0.4, 0.2];
        let c = curvature_at(&m, &p).unwrap();
        let conn = c.connection(ConnectionKind::Conformal).unwrap();
        let tilde = curvature_at(&conformal_rescale(&m).unwrap(), &p).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    assert!((conn.gamma(k, i, j) - tilde.christoffel.gamma(k, i, j)).abs() < 1e-12);
                    for l in 0..4 {
                        assert!((conn.dgamma(l, k, i, j) - tilde.christoffel.dgamma(l, k, i, j)).abs() < 1e-11);
                    }
                }
            }
        }
        let x = [0.3, -0.2, 0.9, 0.1];
        let y = [1.0, 0.4, 0.0, -0.5];
        let z = [0.2, 0.7, 0.3, 0.6];
        let numeric = tilde.riemann.apply(&x, &y, &z);
        let closed = c.conformal_curvature_formula(&x, &y, &z, false);
        let flipped = c.conformal_curvature_formula(&x, &y, &z, true);
        let err = (0..4).map(|l| (numeric[l] - closed[l]).abs()).fold(0.0, f64::max);
        let flipped_err = (0..4).map(|l| (numeric[l] - flipped[l]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        assert!(flipped_err > 1e-4, "{flipped_err}");
    }
}
