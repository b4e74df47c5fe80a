use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Expression tree. Coordinates are referenced by chart index.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Coord(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn num(v: f64) -> Node {
        Node::Num(v)
    }

    pub fn binary(op: BinOp, a: Node, b: Node) -> Node {
        Node::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Node) -> Node {
        Node::Call(f, Box::new(a))
    }

    pub fn uses_coord(&self, k: usize) -> bool {
        match self {
            Node::Num(_) | Node::Const(_) => false,
            Node::Coord(i) => *i == k,
            Node::Neg(a) | Node::Call(_, a) => a.uses_coord(k),
            Node::Binary(_, a, b) => a.uses_coord(k) || b.uses_coord(k),
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Node::Num(v) if *v == 0.0)
    }

    pub(crate) fn write(&self, coords: &[String], out: &mut impl fmt::Write) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(out, "(-{:?})", -v)
            }
            Node::Num(v) => write!(out, "{v:?}"),
            Node::Const(c) => out.write_str(c.name()),
            Node::Coord(i) => out.write_str(&coords[*i]),
            Node::Neg(a) => {
                out.write_str("(-")?;
                a.write(coords, out)?;
                out.write_char(')')
            }
            Node::Binary(op, a, b) => {
                out.write_char('(')?;
                a.write(coords, out)?;
                write!(out, " {} ", op.symbol())?;
                b.write(coords, out)?;
                out.write_char(')')
            }
            Node::Call(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(coords, out)?;
                out.write_char(')')
            }
        }
    }
}
