//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use super::ast::{BinOp, Constant, Func, Node};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.as_bytes().get(self.pos + off).copied()
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while let Some(c) = self.peek_byte(0) {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_byte(0) else {
            return Ok((Tok::End, start));
        };
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Ok((Tok::Op(c as char), start))
            }
            b'(' => {
                self.pos += 1;
                Ok((Tok::LParen, start))
            }
            b')' => {
                self.pos += 1;
                Ok((Tok::RParen, start))
            }
            b'0'..=b'9' | b'.' => self.number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while let Some(c) = self.peek_byte(0) {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok((Tok::Ident(self.src[start..self.pos].to_string()), start))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ExprError::Syntax { offset: start, message: format!("unexpected character '{ch}'") })
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let digits = |lx: &mut Lexer| {
            let mut count = 0;
            while matches!(lx.peek_byte(0), Some(b'0'..=b'9')) {
                lx.pos += 1;
                count += 1;
            }
            count
        };
        let mut count = digits(self);
        if self.peek_byte(0) == Some(b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ExprError::Syntax { offset: start, message: "malformed number".into() });
        }
        // An exponent is only consumed when digits follow; otherwise `e` is left for the constant.
        if matches!(self.peek_byte(0), Some(b'e' | b'E')) {
            let sign = matches!(self.peek_byte(1), Some(b'+' | b'-')) as usize;
            if matches!(self.peek_byte(1 + sign), Some(b'0'..=b'9')) {
                self.pos += 1 + sign;
                digits(self);
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| ExprError::Syntax { offset: start, message: format!("malformed number '{text}'") })
    }
}

pub(super) struct Parser<'c> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    coords: &'c [String],
}

impl<'c> Parser<'c> {
    pub(super) fn new(src: &str, coords: &'c [String]) -> Result<Self, ExprError> {
        Ok(Self { toks: Lexer::tokens(src)?, idx: 0, coords })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(ExprError::Syntax { offset: self.offset(), message: format!("expected {what}") })
        }
    }

    pub(super) fn parse_all(mut self) -> Result<Node, ExprError> {
        let node = self.expr()?;
        if *self.peek() != Tok::End {
            return Err(ExprError::Syntax { offset: self.offset(), message: "unexpected trailing input".into() });
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(match self.power()? {
                Node::Num(v) => Node::Num(-v),
                other => Node::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ExprError::UnknownFunction { name: name.clone(), offset: at })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')' after function argument")?;
                    return Ok(Node::call(func, arg));
                }
                self.identifier(&name, at)
            }
            Tok::End => Err(ExprError::Syntax { offset: at, message: "unexpected end of input".into() }),
            Tok::Op(c) => Err(ExprError::Syntax { offset: at, message: format!("unexpected operator '{c}'") }),
            Tok::RParen => Err(ExprError::Syntax { offset: at, message: "unexpected ')'".into() }),
        }
    }

    fn identifier(&self, name: &str, at: usize) -> Result<Node, ExprError> {
        if let Some(k) = self.coords.iter().position(|c| c == name) {
            return Ok(Node::Coord(k));
        }
        // Positional aliases x0..x{n-1} are always accepted.
        if let Some(k) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if k < self.coords.len() && name == format!("x{k}") {
                return Ok(Node::Coord(k));
            }
        }
        match name {
            "pi" => Ok(Node::Const(Constant::Pi)),
            "e" => Ok(Node::Const(Constant::E)),
            _ => Err(ExprError::UnknownIdentifier { name: name.to_string(), offset: at }),
        }
    }
}
