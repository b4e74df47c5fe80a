//! Dormand-Prince 5(4) integrator with PI step control and cubic Hermite dense output.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Five-point Gauss-Legendre nodes and weights on [-1, 1].
pub const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegrationControl {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-11, max_step: 0.02, max_steps: 200_000 }
    }
}

impl IntegrationControl {
    pub fn scaled(self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..self }
    }
}

/// Accepted steps of an integration: states and exact derivatives at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    /// The solution left the admissible region (or its right-hand side failed) before the end of the span.
    pub truncated: bool,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate y′ = rhs(t, y) from t0 to t1 (either direction). `admissible` is checked on every
/// accepted state; a rejected boundary crossing shrinks the step until it underflows, then the
/// solution is returned truncated.
pub fn integrate<F, P>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    ctrl: &IntegrationControl,
    admissible: P,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: Fn(&[f64]) -> bool,
{
    let dim = y0.len();
    let mut f0 = vec![0.0; dim];
    rhs(t0, y0, &mut f0)?;
    let mut sol = Solution { t: vec![t0], y: vec![y0.to_vec()], dy: vec![f0.clone()], truncated: false };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    k[0].clone_from(&f0);
    let mut h = initial_step(&y, &f0, ctrl).min(span.abs()) * dir;
    let mut err_old: f64 = 1e-4;
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut steps = 0;
    let min_step = |t: f64| 1e-13 * t.abs().max(1.0);
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > ctrl.max_steps {
            return Err(GeometryError::StepUnderflow { param: t, point: y });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let mut failed = false;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            if s == 6 {
                y_new.clone_from(&stage);
                if !admissible(&y_new) {
                    failed = true;
                    break;
                }
            }
            if rhs(t + C[s] * h, &stage, &mut k[s]).is_err() {
                failed = true;
                break;
            }
        }
        if failed {
            if h.abs() < min_step(t) {
                sol.truncated = true;
                return Ok(sol);
            }
            h *= 0.25;
            continue;
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let scale = ctrl.abs_tol + ctrl.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / dim as f64).sqrt();
        if err <= 1.0 || h.abs() <= min_step(t) {
            t += h;
            y.clone_from(&y_new);
            let last = k[6].clone();
            sol.t.push(t);
            sol.y.push(y.clone());
            sol.dy.push(last.clone());
            k[0] = last;
            let fac = (0.9 * err.max(1e-10).powf(-0.17) * err_old.powf(0.04)).clamp(0.2, 5.0);
            err_old = err.max(1e-4);
            h = (h * fac).abs().min(ctrl.max_step) * dir;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
            if h.abs() < min_step(t) {
                return Err(GeometryError::StepUnderflow { param: t, point: y });
            }
        }
    }
    Ok(sol)
}

fn initial_step(y: &[f64], f: &[f64], ctrl: &IntegrationControl) -> f64 {
    let scale = |v: f64, i: usize| v / (ctrl.abs_tol + ctrl.rel_tol * y[i].abs());
    let d0 = (y.iter().enumerate().map(|(i, v)| scale(*v, i).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (f.iter().enumerate().map(|(i, v)| scale(*v, i).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-4 } else { 0.01 * d0 / d1 };
    h.min(ctrl.max_step).max(1e-8)
}

/// Cubic Hermite basis on [0, 1] and its derivative.
fn hermite(u: f64) -> ([f64; 4], [f64; 4]) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        [2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2],
        [6.0 * u2 - 6.0 * u, 3.0 * u2 - 4.0 * u + 1.0, -6.0 * u2 + 6.0 * u, 3.0 * u2 - 2.0 * u],
    )
}

/// Value and derivative of the cubic Hermite interpolant through (t0, y0, d0), (t1, y1, d1).
pub fn hermite_eval(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let u = (t - t0) / h;
    let (b, db) = hermite(u);
    let value = b[0] * y0 + b[1] * h * d0 + b[2] * y1 + b[3] * h * d1;
    let deriv = (db[0] * y0 + db[1] * h * d0 + db[2] * y1 + db[3] * h * d1) / h;
    (value, deriv)
}

/// Quintic Hermite through value, first and second derivative at both ends. Returns the
/// interpolant and its first two derivatives at t.
pub fn quintic_hermite_eval(t0: f64, t1: f64, left: [f64; 3], right: [f64; 3], t: f64) -> [f64; 3] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3, s4, s5) = (s * s, s * s * s, s.powi(4), s.powi(5));
    // Basis, first and second derivatives in s.
    let basis = [
        [1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5, -30.0 * s2 + 60.0 * s3 - 30.0 * s4, -60.0 * s + 180.0 * s2 - 120.0 * s3],
        [s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5, 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4, -36.0 * s + 96.0 * s2 - 60.0 * s3],
        [
            0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
            s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
            1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3,
        ],
        [0.5 * s3 - s4 + 0.5 * s5, 1.5 * s2 - 4.0 * s3 + 2.5 * s4, 3.0 * s - 12.0 * s2 + 10.0 * s3],
        [-4.0 * s3 + 7.0 * s4 - 3.0 * s5, -12.0 * s2 + 28.0 * s3 - 15.0 * s4, -24.0 * s + 84.0 * s2 - 60.0 * s3],
        [10.0 * s3 - 15.0 * s4 + 6.0 * s5, 30.0 * s2 - 60.0 * s3 + 30.0 * s4, 60.0 * s - 180.0 * s2 + 120.0 * s3],
    ];
    let coeffs = [left[0], h * left[1], h * h * left[2], h * h * right[2], h * right[1], right[0]];
    let mut out = [0.0; 3];
    for (b, c) in basis.iter().zip(coeffs) {
        for d in 0..3 {
            out[d] += b[d] * c;
        }
    }
    out[1] /= h;
    out[2] /= h * h;
    out
}

impl Solution {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.t[0]
    }

    pub fn last(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Index k with t in [t_k, t_{k+1}] (clamped to the ends).
    pub fn segment(&self, t: f64) -> usize {
        locate(&self.t, t)
    }

    /// Interpolated state and derivative at t.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        if self.t.len() == 1 {
            return (self.y[0].clone(), self.dy[0].clone());
        }
        let k = self.segment(t);
        let dim = self.y[0].len();
        let mut value = vec![0.0; dim];
        let mut deriv = vec![0.0; dim];
        for i in 0..dim {
            let (v, d) = hermite_eval(
                self.t[k],
                self.t[k + 1],
                self.y[k][i],
                self.y[k + 1][i],
                self.dy[k][i],
                self.dy[k + 1][i],
                t,
            );
            value[i] = v;
            deriv[i] = d;
        }
        (value, deriv)
    }
}

/// Segment index for a monotone (increasing or decreasing) grid.
pub fn locate(grid: &[f64], t: f64) -> usize {
    let n = grid.len();
    if n < 2 {
        return 0;
    }
    let increasing = grid[n - 1] >= grid[0];
    let pos = if increasing {
        grid.partition_point(|x| *x <= t)
    } else {
        grid.partition_point(|x| *x >= t)
    };
    pos.saturating_sub(1).min(n - 2)
}

/// Inverse of a strictly increasing table (x_k, y_k) with slopes dy/dx, evaluated at y.
/// The slopes of the inverse are limited Fritsch-Carlson style so the interpolant stays
/// monotone; `refine` (value and slope of the exact forward map) polishes the result by Newton steps.
pub fn monotone_inverse<R>(xs: &[f64], ys: &[f64], slopes: &[f64], y: f64, mut refine: R) -> f64
where
    R: FnMut(f64) -> Option<(f64, f64)>,
{
    let k = locate(ys, y);
    if xs.len() == 1 {
        return xs[0];
    }
    let (y0, y1) = (ys[k], ys[k + 1]);
    let (x0, x1) = (xs[k], xs[k + 1]);
    let secant = (x1 - x0) / (y1 - y0);
    let mut d0 = 1.0 / slopes[k];
    let mut d1 = 1.0 / slopes[k + 1];
    let (a, b) = (d0 / secant, d1 / secant);
    let r2 = a * a + b * b;
    if r2 > 9.0 {
        let tau = 3.0 / r2.sqrt();
        d0 = tau * a * secant;
        d1 = tau * b * secant;
    }
    let (mut x, _) = hermite_eval(y0, y1, x0, x1, d0, d1, y);
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    for _ in 0..6 {
        let Some((fy, slope)) = refine(x) else { break };
        if slope <= 0.0 {
            break;
        }
        let step = (fy - y) / slope;
        let next = (x - step).clamp(lo, hi);
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |t: f64| [t.powi(5) - 2.0 * t * t + 1.0, 5.0 * t.powi(4) - 4.0 * t, 20.0 * t.powi(3) - 4.0];
        let (a, b) = (0.3, 1.1);
        for t in [0.3, 0.5, 0.77, 1.1] {
            let got = quintic_hermite_eval(a, b, p(a), p(b), t);
            for d in 0..3 {
                assert!((got[d] - p(t)[d]).abs() < 1e-11, "{t} {d}");
            }
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let ctrl = IntegrationControl::default();
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            3.0,
            &ctrl,
            |_| true,
        )
        .unwrap();
        let y = sol.y.last().unwrap();
        assert!((y[0] - 3f64.sin()).abs() < 1e-9);
        let (mid, _) = sol.eval(1.2345);
        assert!((mid[0] - 1.2345f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn truncates_at_boundary() {
        let sol = integrate(
            |_, _, dy| {
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            5.0,
            &IntegrationControl::default(),
            |y| y[0] < 1.0,
        )
        .unwrap();
        assert!(sol.truncated);
        assert!(sol.last() < 1.0 && sol.last() > 1.0 - 1e-9);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            -1.0,
            &IntegrationControl::default(),
            |_| true,
        )
        .unwrap();
        assert!((sol.y.last().unwrap()[0] - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn inverse_of_exponential_table() {
        let xs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let slopes = ys.clone();
        let x = monotone_inverse(&xs, &ys, &slopes, 3.0, |x| Some((x.exp(), x.exp())));
        assert!((x - 3f64.ln()).abs() < 1e-14);
        let rough = monotone_inverse(&xs, &ys, &slopes, 3.0, |_| None);
        assert!((rough - 3f64.ln()).abs() < 1e-6);
    }
}
