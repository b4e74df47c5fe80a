//! Scalar expressions over chart coordinates, evaluated with exact first and second derivatives.

mod ast;
mod jet;
mod parse;

use std::fmt;

pub use ast::{BinOp, Constant, Func, Node};
pub use jet::Jet2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expression has {expected} coordinates, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A parsed expression together with the coordinate names of its chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    coords: Vec<String>,
}

pub fn parse_expr(source: &str, coords: &[String]) -> Result<Expression, ExprError> {
    let root = parse::Parser::new(source, coords)?.parse_all()?;
    Ok(Expression { root, coords: coords.to_vec() })
}

pub fn eval_jet(expr: &Expression, point: &[f64]) -> Result<Jet2, ExprError> {
    expr.jet(point)
}

impl Expression {
    pub fn from_node(root: Node, coords: &[String]) -> Self {
        Self { root, coords: coords.to_vec() }
    }

    pub fn constant(v: f64, coords: &[String]) -> Self {
        Self::from_node(Node::Num(v), coords)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn depends_on(&self, k: usize) -> bool {
        self.root.uses_coord(k)
    }

    pub fn is_zero_literal(&self) -> bool {
        self.root.is_zero_literal()
    }

    /// `self * other` as a new tree.
    pub fn times(&self, other: &Expression) -> Expression {
        Self::from_node(Node::binary(BinOp::Mul, self.root.clone(), other.root.clone()), &self.coords)
    }

    fn check_dim(&self, point: &[f64]) -> Result<(), ExprError> {
        if point.len() != self.coords.len() {
            return Err(ExprError::DimensionMismatch { expected: self.coords.len(), got: point.len() });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.check_dim(point)?;
        let v = eval_value(&self.root, point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite value in {self}")))
        }
    }

    pub fn jet(&self, point: &[f64]) -> Result<Jet2, ExprError> {
        self.check_dim(point)?;
        let j = eval_node(&self.root, point)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(ExprError::Domain(format!("non-finite derivative in {self}")))
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.coords, f)
    }
}

fn domain_check(func: Func, x: f64) -> Result<(), ExprError> {
    let bad = match func {
        Func::Log => x <= 0.0,
        Func::Sqrt => x <= 0.0,
        Func::Tan => x.cos() == 0.0,
        _ => false,
    };
    if bad {
        Err(ExprError::Domain(format!("{}({x}) is outside the differentiable domain", func.name())))
    } else {
        Ok(())
    }
}

fn eval_value(node: &Node, p: &[f64]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Const(c) => c.value(),
        Node::Coord(k) => p[*k],
        Node::Neg(a) => -eval_value(a, p)?,
        Node::Binary(op, a, b) => {
            let (x, y) = (eval_value(a, p)?, eval_value(b, p)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(ExprError::Domain("division by zero".into()));
                    }
                    x / y
                }
                BinOp::Pow => x.powf(y),
            }
        }
        Node::Call(func, a) => {
            let x = eval_value(a, p)?;
            if *func == Func::Sqrt && x == 0.0 {
                return Ok(0.0);
            }
            domain_check(*func, x)?;
            match func {
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
            }
        }
    })
}

fn eval_node(node: &Node, p: &[f64]) -> Result<Jet2, ExprError> {
    let n = p.len();
    Ok(match node {
        Node::Num(v) => Jet2::constant(*v, n),
        Node::Const(c) => Jet2::constant(c.value(), n),
        Node::Coord(k) => Jet2::variable(p[*k], *k, n),
        Node::Neg(a) => -&eval_node(a, p)?,
        Node::Binary(op, a, b) => {
            let x = eval_node(a, p)?;
            let y = eval_node(b, p)?;
            match op {
                BinOp::Add => &x + &y,
                BinOp::Sub => &x - &y,
                BinOp::Mul => &x * &y,
                BinOp::Div => {
                    if y.value == 0.0 {
                        return Err(ExprError::Domain("division by zero".into()));
                    }
                    &x * &y.recip()
                }
                BinOp::Pow => power(&x, &y)?,
            }
        }
        Node::Call(func, a) => {
            let x = eval_node(a, p)?;
            domain_check(*func, x.value)?;
            match func {
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
            }
        }
    })
}

fn power(base: &Jet2, exponent: &Jet2) -> Result<Jet2, ExprError> {
    if exponent.is_constant() {
        let c = exponent.value;
        if base.value < 0.0 && c.fract() != 0.0 {
            return Err(ExprError::Domain(format!("negative base {} with non-integer exponent {c}", base.value)));
        }
        if base.value == 0.0 && c < 2.0 && c != 0.0 && c != 1.0 {
            return Err(ExprError::Domain(format!("0^{c} is not twice differentiable")));
        }
        return Ok(base.powf(c));
    }
    if base.value <= 0.0 {
        return Err(ExprError::Domain(format!("variable exponent needs a positive base, got {}", base.value)));
    }
    Ok((&exponent.clone() * &base.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn txyz() -> Vec<String> {
        ["t", "x", "y", "z"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn negative_literal() {
        let e = parse_expr("-1", &txyz()).unwrap();
        assert_eq!(*e.root(), Node::Num(-1.0));
    }

    #[test]
    fn exp_tree_shape() {
        let e = parse_expr("exp(2*t/3)", &txyz()).unwrap();
        let expected = Node::call(
            Func::Exp,
            Node::binary(BinOp::Div, Node::binary(BinOp::Mul, Node::Num(2.0), Node::Coord(0)), Node::Num(3.0)),
        );
        assert_eq!(*e.root(), expected);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        let e = parse_expr("-cosh(t)^2", &txyz()).unwrap();
        let expected = Node::Neg(Box::new(Node::binary(
            BinOp::Pow,
            Node::call(Func::Cosh, Node::Coord(0)),
            Node::Num(2.0),
        )));
        assert_eq!(*e.root(), expected);
        let v = e.eval(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v + 1f64.cosh().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse_expr("2^3^2", &txyz()).unwrap();
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 512.0);
        let e = parse_expr("2^-1", &txyz()).unwrap();
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 0.5);
    }

    #[test]
    fn polynomial_jet() {
        let e = parse_expr("t*t", &txyz()).unwrap();
        let j = eval_jet(&e, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 9.0);
        assert_eq!(j.gradient, vec![6.0, 0.0, 0.0, 0.0]);
        assert_eq!(j.hessian(0, 0), 2.0);
        assert_eq!(j.hessian(1, 1), 0.0);
    }

    #[test]
    fn chain_rule_jet() {
        let e = parse_expr("exp(2*t/3)", &txyz()).unwrap();
        let j = eval_jet(&e, &[0.0; 4]).unwrap();
        assert!((j.value - 1.0).abs() < 1e-15);
        assert!((j.gradient[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((j.hessian(0, 0) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expr("t + (x * 2", &txyz()) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("{other:?}"),
        }
        match parse_expr("t + w", &txyz()) {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "w");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        match parse_expr("foo(t)", &txyz()) {
            Err(ExprError::UnknownFunction { name, .. }) => assert_eq!(name, "foo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_errors() {
        let e = parse_expr("log(t)", &txyz()).unwrap();
        assert!(matches!(eval_jet(&e, &[-1.0, 0.0, 0.0, 0.0]), Err(ExprError::Domain(_))));
        let e = parse_expr("1/x", &txyz()).unwrap();
        assert!(matches!(e.eval(&[0.0; 4]), Err(ExprError::Domain(_))));
        assert!(matches!(eval_jet(&e, &[0.0; 3]), Err(ExprError::DimensionMismatch { .. })));
    }

    #[test]
    fn positional_aliases_and_constants() {
        let e = parse_expr("x0 + pi*e", &txyz()).unwrap();
        let v = e.eval(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v - (1.0 + std::f64::consts::PI * std::f64::consts::E)).abs() < 1e-15);
        assert!(parse_expr("x4", &txyz()).is_err());
        // No implicit multiplication: `2e` is a number followed by a stray identifier.
        assert!(matches!(parse_expr("2e", &txyz()), Err(ExprError::Syntax { offset: 1, .. })));
    }

    #[test]
    fn scientific_notation() {
        let e = parse_expr("1.5e-3*t + 2E2", &txyz()).unwrap();
        assert!((e.eval(&[2.0, 0.0, 0.0, 0.0]).unwrap() - 200.003).abs() < 1e-12);
    }
}
