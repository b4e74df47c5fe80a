//! Orthonormal and pseudo-orthonormal frames at a point.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::spacetime::inner;

/// Unit future timelike vector: the normal to the t-slices when dt is timelike, else the
/// negative eigendirection of g oriented with positive t component.
pub fn observer(g: &DMatrix<f64>, g_inv: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows();
    let g00 = g_inv[(0, 0)];
    let mut e0: Vec<f64> = if g00 < -1e-12 {
        (0..n).map(|i| -g_inv[(i, 0)]).collect()
    } else {
        let eig = SymmetricEigen::new(g.clone());
        let k = eig.eigenvalues.imin();
        eig.eigenvectors.column(k).iter().copied().collect()
    };
    let norm = (-inner(g, &e0, &e0)).sqrt();
    let sign = if e0[0] < 0.0 { -1.0 } else { 1.0 };
    for x in &mut e0 {
        *x *= sign / norm;
    }
    e0
}

/// Time orientation used throughout: future-directed means positive t component.
pub fn is_future(v: &[f64]) -> bool {
    v[0] > 0.0
}

/// Extend `fixed` (mutually orthogonal, each with g(b,b) = ±1) by `count` orthonormal
/// spacelike vectors orthogonal to all of them, by Gram-Schmidt on the coordinate basis.
pub fn complete_orthonormal(g: &DMatrix<f64>, fixed: &[Vec<f64>], count: usize) -> Result<Vec<Vec<f64>>> {
    let n = g.nrows();
    let signs: Vec<f64> = fixed.iter().map(|b| inner(g, b, b)).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    while out.len() < count {
        // Pick the candidate with the largest residual norm for conditioning.
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (idx, c) in candidates.iter().enumerate() {
            let mut v = c.clone();
            for (b, s) in fixed.iter().zip(&signs) {
                let proj = inner(g, &v, b) / s;
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            for b in &out {
                let proj = inner(g, &v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let q = inner(g, &v, &v);
            if best.as_ref().is_none_or(|(_, _, bq)| q > *bq) {
                best = Some((idx, v, q));
            }
        }
        let (idx, mut v, q) = best.ok_or_else(|| GeometryError::Invalid("frame completion ran out of candidates".into()))?;
        if q <= 1e-12 {
            return Err(GeometryError::Invalid("could not complete a spacelike orthonormal frame".into()));
        }
        let norm = q.sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        out.push(v);
        candidates.swap_remove(idx);
    }
    Ok(out)
}

/// Frame adapted to a causal tangent at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AdaptedFrame {
    /// Orthonormal spacelike e_1..e_{n-1} orthogonal to the unit timelike tangent.
    Timelike { tangent: Vec<f64>, spatial: Vec<Vec<f64>> },
    /// k = tangent, L null with g(k, L) = -1, screen e_1..e_{n-2} orthonormal and orthogonal to both.
    Null { tangent: Vec<f64>, transverse: Vec<f64>, screen: Vec<Vec<f64>> },
}

impl AdaptedFrame {
    pub fn rank(&self) -> usize {
        match self {
            AdaptedFrame::Timelike { spatial, .. } => spatial.len(),
            AdaptedFrame::Null { screen, .. } => screen.len(),
        }
    }

    /// Vectors spanning the transverse space (γ′-orthogonal complement or null screen).
    pub fn transverse_basis(&self) -> &[Vec<f64>] {
        match self {
            AdaptedFrame::Timelike { spatial, .. } => spatial,
            AdaptedFrame::Null { screen, .. } => screen,
        }
    }

    pub fn tangent(&self) -> &[f64] {
        match self {
            AdaptedFrame::Timelike { tangent, .. } | AdaptedFrame::Null { tangent, .. } => tangent,
        }
    }

    /// All frame vectors, tangent first, flattened in order.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        match self {
            AdaptedFrame::Timelike { tangent, spatial } => {
                std::iter::once(tangent.clone()).chain(spatial.iter().cloned()).collect()
            }
            AdaptedFrame::Null { tangent, transverse, screen } => std::iter::once(tangent.clone())
                .chain(std::iter::once(transverse.clone()))
                .chain(screen.iter().cloned())
                .collect(),
        }
    }

    /// Gram matrix of `vectors()`; constant under parallel transport.
    pub fn gram(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let v = self.vectors();
        DMatrix::from_fn(v.len(), v.len(), |a, b| inner(g, &v[a], &v[b]))
    }
}

/// Frame for a unit timelike tangent (g(u,u) = -1 up to `tol`).
pub fn timelike_frame(g: &DMatrix<f64>, u: &[f64], tol: f64) -> Result<AdaptedFrame> {
    let q = inner(g, u, u);
    if (q + 1.0).abs() > tol {
        return Err(GeometryError::WrongCausalType { expected: "unit timelike", got: causal_name(q, tol) });
    }
    let n = g.nrows();
    let spatial = complete_orthonormal(g, &[u.to_vec()], n - 1)?;
    Ok(AdaptedFrame::Timelike { tangent: u.to_vec(), spatial })
}

/// Pseudo-orthonormal frame for a null tangent k. L is built from the reference observer
/// e0 as L = (e0 - m)/(2a) where k = a(e0 + m); it is future-directed with g(k, L) = -1.
pub fn null_frame(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, k: &[f64], tol: f64) -> Result<AdaptedFrame> {
    let n = g.nrows();
    if n < 3 {
        return Err(GeometryError::DimensionTooSmall { what: "a null screen", min: 3, n });
    }
    let q = inner(g, k, k);
    let scale: f64 = k.iter().map(|x| x * x).sum::<f64>();
    if q.abs() > tol * scale.max(1.0) {
        return Err(GeometryError::WrongCausalType { expected: "null", got: causal_name(q, tol) });
    }
    let e0 = observer(g, g_inv);
    let a = -inner(g, k, &e0);
    if a.abs() < 1e-14 {
        return Err(GeometryError::ZeroVector);
    }
    let m: Vec<f64> = k.iter().zip(&e0).map(|(x, e)| x / a - e).collect();
    let transverse: Vec<f64> = e0.iter().zip(&m).map(|(e, x)| (e - x) / (2.0 * a)).collect();
    let screen = complete_orthonormal(g, &[e0, m], n - 2)?;
    Ok(AdaptedFrame::Null { tangent: k.to_vec(), transverse, screen })
}

fn causal_name(q: f64, tol: f64) -> &'static str {
    if q < -tol {
        "timelike"
    } else if q.abs() <= tol {
        "null"
    } else {
        "spacelike"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn eta() -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]))
    }

    #[test]
    fn boosted_timelike_frame_is_orthonormal() {
        let g = eta();
        let chi: f64 = 0.7;
        let u = vec![chi.cosh(), chi.sinh(), 0.0, 0.0];
        let frame = timelike_frame(&g, &u, 1e-12).unwrap();
        let gram = frame.gram(&g);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        assert!((gram - expected).abs().max() < 1e-13);
    }

    #[test]
    fn null_frame_normalization() {
        let g = eta();
        let k = vec![2.0, 2.0, 0.0, 0.0];
        let frame = null_frame(&g, &g, &k, 1e-12).unwrap();
        let gram = frame.gram(&g);
        assert!((gram[(0, 1)] + 1.0).abs() < 1e-14);
        assert!(gram[(1, 1)].abs() < 1e-14);
        for a in 2..4 {
            assert!((gram[(a, a)] - 1.0).abs() < 1e-14);
            assert!(gram[(0, a)].abs() < 1e-14 && gram[(1, a)].abs() < 1e-14);
        }
        if let AdaptedFrame::Null { transverse, .. } = frame {
            assert!(is_future(&transverse));
        }
    }
}
