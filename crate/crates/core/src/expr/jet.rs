//! Second-order forward-mode dual numbers.

use std::ops::{Add, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar with respect to `n` coordinates.
///
/// The Hessian is stored as the packed upper triangle, so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    upper: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, gradient: vec![0.0; n], upper: vec![0.0; n * (n + 1) / 2] }
    }

    /// The coordinate function `x_k` evaluated at `value`.
    pub fn variable(value: f64, k: usize, n: usize) -> Self {
        let mut j = Self::constant(value, n);
        j.gradient[k] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.dim(), i, j)]
    }

    pub fn hessian_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.hessian(i, j)).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|x| x.is_finite())
            && self.upper.iter().all(|x| x.is_finite())
    }

    /// Compose with a scalar function given its value and first two derivatives at `self.value`.
    pub fn chain(&self, d0: f64, d1: f64, d2: f64) -> Self {
        let n = self.dim();
        let mut upper = Vec::with_capacity(self.upper.len());
        for i in 0..n {
            for j in i..n {
                let h = self.upper[packed_index(n, i, j)];
                upper.push(d1 * h + d2 * self.gradient[i] * self.gradient[j]);
            }
        }
        Self { value: d0, gradient: self.gradient.iter().map(|g| d1 * g).collect(), upper }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: c * self.value,
            gradient: self.gradient.iter().map(|g| c * g).collect(),
            upper: self.upper.iter().map(|h| c * h).collect(),
        }
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    /// `|x|`, taking derivative zero at the kink.
    pub fn abs(&self) -> Self {
        let s = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), s, 0.0)
    }

    /// `self^c` for a constant exponent.
    pub fn powf(&self, c: f64) -> Self {
        let x = self.value;
        if c == 0.0 {
            return Self::constant(1.0, self.dim());
        }
        let d1 = if c == 1.0 { 1.0 } else { c * x.powf(c - 1.0) };
        let d2 = if c == 1.0 {
            0.0
        } else if c == 2.0 {
            2.0
        } else {
            c * (c - 1.0) * x.powf(c - 2.0)
        };
        self.chain(x.powf(c), d1, d2)
    }

    pub fn is_constant(&self) -> bool {
        self.gradient.iter().all(|g| *g == 0.0) && self.upper.iter().all(|h| *h == 0.0)
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(&rhs.upper).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(a, b)| a - b).collect(),
            upper: self.upper.iter().zip(&rhs.upper).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        let (u, v) = (self.value, rhs.value);
        let mut upper = Vec::with_capacity(self.upper.len());
        for i in 0..n {
            for j in i..n {
                let k = packed_index(n, i, j);
                upper.push(
                    self.upper[k] * v
                        + u * rhs.upper[k]
                        + self.gradient[i] * rhs.gradient[j]
                        + rhs.gradient[i] * self.gradient[j],
                );
            }
        }
        Jet2 {
            value: u * v,
            gradient: self.gradient.iter().zip(&rhs.gradient).map(|(a, b)| a * v + u * b).collect(),
            upper,
        }
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_hessian() {
        let x = Jet2::variable(0.7, 0, 2);
        let y = Jet2::variable(-1.3, 1, 2);
        let a = &x.sin() * &y;
        let b = &y.exp() + &x;
        let p = &a * &b;
        for i in 0..2 {
            for j in 0..2 {
                let expected = a.hessian(i, j) * b.value
                    + a.value * b.hessian(i, j)
                    + a.gradient[i] * b.gradient[j]
                    + b.gradient[i] * a.gradient[j];
                assert!((p.hessian(i, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_via_powf() {
        let x = Jet2::variable(3.0, 0, 1);
        let s = x.powf(2.0);
        assert_eq!(s.value, 9.0);
        assert_eq!(s.gradient[0], 6.0);
        assert_eq!(s.hessian(0, 0), 2.0);
    }
}
