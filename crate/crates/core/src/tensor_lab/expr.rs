//! A small expression language for scalar functions of the coordinates.
//!
//! Variables are `x0..x3` (with `t` an alias of `x0`) and `r2`, the squared
//! Euclidean norm of the coordinates. Constants `pi` and `e`, the operators
//! `+ - * / ^` and the functions `sin cos exp log ln sqrt sinh cosh tanh sech`
//! are understood.

use crate::jet::Jet;

use super::conformal::ScalarFn;
use super::{Result, TensorError, DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Sech,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sech" => Func::Sech,
            _ => return None,
        })
    }

    fn apply(self, x: &Jet) -> Jet {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sech => x.sech(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    NormSq,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed scalar expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { s: src.as_bytes(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr { source: src.trim().to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval_jet(&self, x: &[Jet; DIM]) -> Jet {
        eval(&self.root, x)
    }

    pub fn eval(&self, p: [f64; DIM]) -> f64 {
        self.eval_jet(&Jet::seed(p, 0)).value()
    }
}

impl ScalarFn for Expr {
    fn eval(&self, x: &[Jet; DIM]) -> Jet {
        self.eval_jet(x)
    }
}

fn constant_value(n: &Node) -> Option<f64> {
    match n {
        Node::Num(v) => Some(*v),
        Node::Neg(a) => constant_value(a).map(|v| -v),
        _ => None,
    }
}

fn eval(n: &Node, x: &[Jet; DIM]) -> Jet {
    let order = x[0].order();
    match n {
        Node::Num(v) => Jet::constant(*v, order),
        Node::Var(i) => x[*i].clone(),
        Node::NormSq => {
            let mut s = &x[0] * &x[0];
            for xi in &x[1..] {
                s += xi * xi;
            }
            s
        }
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, b) => {
            let base = eval(a, x);
            match constant_value(b) {
                Some(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                Some(p) => base.powf(p),
                None => (eval(b, x) * base.ln()).exp(),
            }
        }
        Node::Call(f, a) => f.apply(&eval(a, x)),
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> TensorError {
        TensorError::Expression(format!("{msg} at offset {} in `{}`", self.pos, String::from_utf8_lossy(self.s)))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                if let Some(f) = Func::lookup(name) {
                    if !self.eat(b'(') {
                        return Err(self.error("expected `(` after function name"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)`"));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name {
                    "x0" | "t" => Ok(Node::Var(0)),
                    "x1" => Ok(Node::Var(1)),
                    "x2" => Ok(Node::Var(2)),
                    "x3" => Ok(Node::Var(3)),
                    "r2" => Ok(Node::NormSq),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(TensorError::Expression(format!("unknown identifier `{name}`"))),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'+' || self.s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| self.error("malformed number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2*3 - 4/2 ^ 2").unwrap();
        assert_eq!(e.eval([0.0; 4]), 6.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval([0.0; 4]), -4.0);
        assert_eq!(Expr::parse("2^-1").unwrap().eval([0.0; 4]), 0.5);
        assert_eq!(Expr::parse("1.5e2").unwrap().eval([0.0; 4]), 150.0);
    }

    #[test]
    fn variables_and_functions() {
        let e = Expr::parse("log(sech(t)) + x1*x2 + r2").unwrap();
        let p = [0.5, 2.0, 3.0, 1.0];
        let expect = (1.0 / 0.5f64.cosh()).ln() + 6.0 + (0.25 + 4.0 + 9.0 + 1.0);
        assert!((e.eval(p) - expect).abs() < 1e-14);
    }

    #[test]
    fn derivatives_through_jets() {
        let e = Expr::parse("sin(x0) * exp(2*x1)").unwrap();
        let j = e.eval_jet(&Jet::seed([0.3, 0.1, 0.0, 0.0], 2));
        assert!((j.partial([1, 1, 0, 0]) - 2.0 * 0.3f64.cos() * 0.2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn errors_are_reported() {
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("y").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
