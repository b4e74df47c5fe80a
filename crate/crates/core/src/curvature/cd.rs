//! Curvature-dimension checks by sampling unit timelike and null directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{curvature_at, quad};
use crate::error::Result;
use crate::frame::{complete_orthonormal, observer};
use crate::spacetime::{SpacetimeModel, SyntheticDimension, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CdCondition {
    /// Ric_f^N(X,X) ≥ λ for unit timelike X.
    Timelike { lambda: f64 },
    /// Ric_f^N(X,X) ≥ 0 for null X.
    Null,
}

impl CdCondition {
    pub fn bound(&self) -> f64 {
        match self {
            CdCondition::Timelike { lambda } => *lambda,
            CdCondition::Null => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub points: usize,
    /// Directions per point, in addition to the observer itself.
    pub directions: usize,
    pub rapidity_max: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { points: 50, directions: 40, rapidity_max: 5.0, seed: 0, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CdVerdict {
    Holds,
    Violated,
    /// No sampled violation, but the large-rapidity leading form is negative somewhere.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdReport {
    pub condition: CdCondition,
    pub synthetic_dimension: SyntheticDimension,
    pub samples: usize,
    pub rapidity_max: f64,
    pub min_value: f64,
    pub bound: f64,
    pub witness: TangentVector,
    /// Minimum of Ric_f^N(e0 + u, e0 + u) over sampled unit spatial u: the form that dominates
    /// at large rapidity.
    pub null_form_min: f64,
    pub tolerance: f64,
    pub verdict: CdVerdict,
}

/// Uniform direction on the unit sphere S^{d-1}.
pub(crate) fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|x| x * x).sum();
        if r2 > 1e-6 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

pub fn cd_check(
    model: &SpacetimeModel,
    condition: CdCondition,
    synthetic: SyntheticDimension,
    sampling: &Sampling,
) -> Result<CdReport> {
    let n = model.dim();
    synthetic.check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let bound = condition.bound();
    let mut min_value = f64::INFINITY;
    let mut witness = TangentVector { base: vec![0.0; n], components: vec![0.0; n] };
    let mut null_form_min = f64::INFINITY;
    let mut samples = 0;
    for _ in 0..sampling.points {
        let p = model.sample_point(&mut rng);
        let bundle = curvature_at(model, &p)?;
        let ric = bundle.ric_f(synthetic);
        let g = &bundle.metric.g;
        let e0 = observer(g, &bundle.metric.g_inv);
        let spatial = complete_orthonormal(g, std::slice::from_ref(&e0), n - 1)?;
        let combine = |a: f64, b: f64, u: &[f64]| -> Vec<f64> {
            (0..n).map(|i| a * e0[i] + b * (0..n - 1).map(|k| u[k] * spatial[k][i]).sum::<f64>()).collect()
        };
        // Frame axes first so the extremes along them are always probed.
        let mut units: Vec<Vec<f64>> = Vec::with_capacity(2 * (n - 1) + sampling.directions);
        for k in 0..n - 1 {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; n - 1];
                u[k] = s;
                units.push(u);
            }
        }
        for _ in 0..sampling.directions {
            units.push(random_unit(&mut rng, n - 1));
        }
        let mut consider = |x: Vec<f64>, min_value: &mut f64, witness: &mut TangentVector| {
            let v = quad(&ric, &x, &x);
            samples += 1;
            if v < *min_value {
                *min_value = v;
                *witness = TangentVector { base: p.clone(), components: x };
            }
        };
        for u in &units {
            let null_dir = combine(1.0, 1.0, u);
            let q = quad(&ric, &null_dir, &null_dir);
            null_form_min = null_form_min.min(q);
            if matches!(condition, CdCondition::Null) {
                consider(null_dir, &mut min_value, &mut witness);
            }
        }
        if let CdCondition::Timelike { .. } = condition {
            consider(e0.clone(), &mut min_value, &mut witness);
            for (idx, u) in units.iter().enumerate() {
                let chi = if idx < 2 * (n - 1) {
                    sampling.rapidity_max
                } else {
                    rng.random_range(0.0..sampling.rapidity_max)
                };
                consider(combine(chi.cosh(), chi.sinh(), u), &mut min_value, &mut witness);
            }
        }
    }
    let tol = sampling.tol;
    let verdict = if min_value < bound - tol {
        CdVerdict::Violated
    } else if matches!(condition, CdCondition::Timelike { .. }) && null_form_min < -tol {
        CdVerdict::Inconclusive
    } else {
        CdVerdict::Holds
    };
    Ok(CdReport {
        condition,
        synthetic_dimension: synthetic,
        samples,
        rapidity_max: sampling.rapidity_max,
        min_value,
        bound,
        witness,
        null_form_min,
        tolerance: tol,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{build_spacetime, Builtin, SpacetimeSpec};

    fn run(b: Builtin, condition: CdCondition) -> CdReport {
        let m = build_spacetime(&SpacetimeSpec::Builtin(b)).unwrap();
        let s = SyntheticDimension::infinite(m.dim());
        cd_check(&m, condition, s, &Sampling { points: 10, seed: 11, ..Sampling::default() }).unwrap()
    }

    #[test]
    fn einstein_static_holds_at_zero() {
        let r = run(Builtin::EinsteinStatic { n: 4 }, CdCondition::Timelike { lambda: 0.0 });
        assert_eq!(r.verdict, CdVerdict::Holds);
        assert!(r.min_value.abs() < 1e-8);
    }

    #[test]
    fn de_sitter_violated() {
        let r = run(Builtin::DeSitter { n: 4 }, CdCondition::Timelike { lambda: 0.0 });
        assert_eq!(r.verdict, CdVerdict::Violated);
        assert!((r.min_value + 3.0).abs() < 1e-6);
    }

    #[test]
    fn anti_de_sitter_holds() {
        let r = run(Builtin::AntiDeSitter { n: 4 }, CdCondition::Timelike { lambda: 0.0 });
        assert_eq!(r.verdict, CdVerdict::Holds);
        assert!((r.min_value - 3.0).abs() < 1e-6);
        let null = run(Builtin::AntiDeSitter { n: 4 }, CdCondition::Null);
        assert_eq!(null.verdict, CdVerdict::Holds);
    }
}
