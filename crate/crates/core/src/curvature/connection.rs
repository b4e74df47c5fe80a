//! Affine connection coefficients with their first derivatives, and the curvature they induce.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::spacetime::MetricJet;

/// The three torsion-free connections compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    LeviCivita,
    /// Projectively related to Levi-Civita; reparametrization weight n-1.
    Weighted,
    /// Levi-Civita connection of e^{-2f/(n-2)} g; reparametrization weight n-2.
    Conformal,
}

impl ConnectionKind {
    /// Reparametrization weight: n-1 (weighted), n-2 (conformal), none for Levi-Civita.
    pub fn alpha(self, n: usize) -> Option<f64> {
        match self {
            ConnectionKind::LeviCivita => None,
            ConnectionKind::Weighted => Some(n as f64 - 1.0),
            ConnectionKind::Conformal => Some(n as f64 - 2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::LeviCivita => "levi_civita",
            ConnectionKind::Weighted => "weighted",
            ConnectionKind::Conformal => "conformal",
        }
    }

    pub fn check_dim(self, n: usize) -> Result<()> {
        if self == ConnectionKind::Conformal && n < 3 {
            return Err(GeometryError::DimensionTooSmall { what: "the conformal connection", min: 3, n });
        }
        Ok(())
    }
}

/// Coefficients Γ^k_ij (∇_{∂i} ∂j = Γ^k_ij ∂k) and their partials ∂_m Γ^k_ij at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    n: usize,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
}

impl Connection {
    pub fn zeros(n: usize) -> Self {
        Self { n, gamma: vec![0.0; n * n * n], dgamma: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[self.idx(k, i, j)]
    }

    /// ∂_m Γ^k_ij
    #[inline]
    pub fn dgamma(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        self.dgamma[m * self.n * self.n * self.n + self.idx(k, i, j)]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let idx = self.idx(k, i, j);
        self.gamma[idx] = v;
    }

    fn set_d(&mut self, m: usize, k: usize, i: usize, j: usize, v: f64) {
        let idx = m * self.n * self.n * self.n + self.idx(k, i, j);
        self.dgamma[idx] = v;
    }

    pub fn levi_civita(jet: &MetricJet) -> Self {
        let n = jet.dim();
        let mut out = Self::zeros(n);
        // First-kind symbols and their derivatives.
        let first = |l: usize, i: usize, j: usize| 0.5 * (jet.dg[i][(l, j)] + jet.dg[j][(l, i)] - jet.dg[l][(i, j)]);
        let dfirst = |m: usize, l: usize, i: usize, j: usize| {
            0.5 * (jet.ddg[m * n + i][(l, j)] + jet.ddg[m * n + j][(l, i)] - jet.ddg[m * n + l][(i, j)])
        };
        let dinv: Vec<DMatrix<f64>> = (0..n).map(|m| -(&jet.g_inv * &jet.dg[m] * &jet.g_inv)).collect();
        let mut c = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = first(l, i, j);
                    c[(l * n + i) * n + j] = v;
                    c[(l * n + j) * n + i] = v;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v: f64 = (0..n).map(|l| jet.g_inv[(k, l)] * c[(l * n + i) * n + j]).sum();
                    out.set(k, i, j, v);
                    out.set(k, j, i, v);
                    for m in 0..n {
                        let d: f64 = (0..n)
                            .map(|l| dinv[m][(k, l)] * c[(l * n + i) * n + j] + jet.g_inv[(k, l)] * dfirst(m, l, i, j))
                            .sum();
                        out.set_d(m, k, i, j, d);
                        out.set_d(m, k, j, i, d);
                    }
                }
            }
        }
        out
    }

    /// Γ^k_ij - (f_i δ^k_j + f_j δ^k_i)/(n-1), with `ddf` the coordinate Hessian of f.
    pub fn weighted(lc: &Connection, df: &[f64], ddf: &DMatrix<f64>) -> Self {
        let n = lc.n;
        let w = 1.0 / (n as f64 - 1.0);
        let mut out = lc.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let shift = df[i] * delta(k, j) + df[j] * delta(k, i);
                    out.set(k, i, j, lc.gamma(k, i, j) - w * shift);
                    for m in 0..n {
                        let dshift = ddf[(i, m)] * delta(k, j) + ddf[(j, m)] * delta(k, i);
                        out.set_d(m, k, i, j, lc.dgamma(m, k, i, j) - w * dshift);
                    }
                }
            }
        }
        out
    }

    /// Γ^k_ij - (f_i δ^k_j + f_j δ^k_i - g_ij ∇^k f)/(n-2): Levi-Civita of e^{-2f/(n-2)} g.
    pub fn conformal(lc: &Connection, jet: &MetricJet, df: &[f64], ddf: &DMatrix<f64>) -> Result<Self> {
        let n = lc.n;
        ConnectionKind::Conformal.check_dim(n)?;
        let w = 1.0 / (n as f64 - 2.0);
        let grad = jet.raise(df);
        // ∂_m ∇^k f = ∂_m g^{kl} f_l + g^{kl} f_lm
        let dgrad: Vec<Vec<f64>> = (0..n)
            .map(|m| {
                let dinv = -(&jet.g_inv * &jet.dg[m] * &jet.g_inv);
                (0..n)
                    .map(|k| (0..n).map(|l| dinv[(k, l)] * df[l] + jet.g_inv[(k, l)] * ddf[(l, m)]).sum())
                    .collect()
            })
            .collect();
        let mut out = lc.clone();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let shift = df[i] * delta(k, j) + df[j] * delta(k, i) - jet.g[(i, j)] * grad[k];
                    out.set(k, i, j, lc.gamma(k, i, j) - w * shift);
                    for m in 0..n {
                        let dshift = ddf[(i, m)] * delta(k, j) + ddf[(j, m)] * delta(k, i)
                            - jet.dg[m][(i, j)] * grad[k]
                            - jet.g[(i, j)] * dgrad[m][k];
                        out.set_d(m, k, i, j, lc.dgamma(m, k, i, j) - w * dshift);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Γ^k_ij u^i v^j
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    if u[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        s += self.gamma(k, i, j) * u[i] * v[j];
                    }
                }
                s
            })
            .collect()
    }

    /// R^l_kij = ∂_i Γ^l_jk - ∂_j Γ^l_ik + Γ^l_im Γ^m_jk - Γ^l_jm Γ^m_ik
    pub fn riemann(&self) -> Riemann {
        let n = self.n;
        let mut data = vec![0.0; n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut v = self.dgamma(i, l, j, k) - self.dgamma(j, l, i, k);
                        for m in 0..n {
                            v += self.gamma(l, i, m) * self.gamma(m, j, k) - self.gamma(l, j, m) * self.gamma(m, i, k);
                        }
                        data[((l * n + k) * n + i) * n + j] = v;
                        data[((l * n + k) * n + j) * n + i] = -v;
                    }
                }
            }
        }
        Riemann { n, data }
    }
}

/// Curvature tensor R^l_kij, the component of R(∂i, ∂j)∂k along ∂l.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    #[inline]
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.data[((l * n + k) * n + i) * n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ric_jk = R^i_kij (trace of X ↦ R(X, ∂j)∂k). Not symmetric for a general connection.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| self.get(i, k, i, j)).sum())
    }

    /// R(X, Y)Z
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for k in 0..n {
                    if z[k] == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        if x[i] == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            s += self.get(l, k, i, j) * z[k] * x[i] * y[j];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// R_lkij = g_lm R^m_kij
    pub fn lowered(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out[((l * n + k) * n + i) * n + j] = (0..n).map(|m| g[(l, m)] * self.get(m, k, i, j)).sum();
                    }
                }
            }
        }
        out
    }
}
