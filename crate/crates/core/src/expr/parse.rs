use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use super::{Expr, Node};
use crate::error::{Error, Result};

/// Named parameters available to the parser. A binding may be any
/// expression, so `Q = exp(2*pi*i*z)` can be spliced into a formula.
pub type Bindings = BTreeMap<String, Expr>;

/// Parses an expression with no parameter bindings.
pub fn parse(text: &str) -> Result<Expr> {
    parse_with(text, &Bindings::new())
}

/// Parses `text` in the expression grammar, substituting bound identifiers.
///
/// Grammar: `z` and `t` name the variable; `i` and `pi` are constants;
/// `+ - * /`, `^` with an integer exponent, `exp`, `sin`, `cos`, parentheses.
pub fn parse_with(text: &str, bindings: &Bindings) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        bindings,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    bindings: &'a Bindings,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", ch as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat(b'/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let n = self.int_exponent()?;
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn int_exponent(&mut self) -> Result<i32> {
        let paren = self.eat(b'(');
        let negative = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer exponent"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'.' | b'e' | b'E') {
            return Err(self.error("exponent must be an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: i32 = digits
            .parse()
            .map_err(|_| self.error("exponent out of range"))?;
        if paren {
            self.expect(b')')?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => self.number(),
            Some(ch) if ch.is_ascii_alphabetic() || ch == b'_' => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < s.len() && matches!(s[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && matches!(s[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                // `2e` followed by something else: not an exponent.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("malformed number `{text}`"),
        })?;
        Ok(Expr::real(value))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        match name {
            "z" | "t" => Ok(Expr::var()),
            "i" => Ok(Expr::i()),
            "pi" => Ok(Expr::real(PI)),
            "exp" | "sin" | "cos" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(match name {
                    "exp" => arg.exp(),
                    "sin" => arg.sin(),
                    _ => arg.cos(),
                })
            }
            _ => self.bindings.get(name).cloned().ok_or(Error::Syntax {
                pos: start,
                msg: format!("unbound identifier `{name}`"),
            }),
        }
    }
}

fn fmt_const(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 && c.re.is_sign_positive() && !c.im.is_sign_negative() {
        write!(f, "{:?}", c.re)
    } else {
        write!(f, "({:?} + {:?}*i)", c.re, c.im)
    }
}

impl Expr {
    fn fmt_in(&self, var: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| -> fmt::Result {
            write!(f, "(")?;
            a.fmt_in(var, f)?;
            write!(f, " {op} ")?;
            b.fmt_in(var, f)?;
            write!(f, ")")
        };
        let call = |f: &mut fmt::Formatter<'_>, name: &str, a: &Expr| -> fmt::Result {
            write!(f, "{name}(")?;
            a.fmt_in(var, f)?;
            write!(f, ")")
        };
        match self.node() {
            Node::Const(c) => fmt_const(*c, f),
            Node::Var => var(f),
            Node::Add(a, b) => bin(f, a, "+", b),
            Node::Sub(a, b) => bin(f, a, "-", b),
            Node::Mul(a, b) => bin(f, a, "*", b),
            Node::Div(a, b) => bin(f, a, "/", b),
            Node::Neg(a) => {
                write!(f, "(-")?;
                a.fmt_in(var, f)?;
                write!(f, ")")
            }
            Node::Pow(a, n) => {
                write!(f, "(")?;
                a.fmt_in(var, f)?;
                write!(f, "^{n})")
            }
            Node::Exp(a) => call(f, "exp", a),
            Node::Sin(a) => call(f, "sin", a),
            Node::Cos(a) => call(f, "cos", a),
            Node::Affine {
                scale,
                offset,
                inner,
            } => {
                // Printed as an explicit substitution so the parser rebuilds
                // the same arithmetic `scale * z + offset`.
                let (scale, offset) = (*scale, *offset);
                let sub = move |f: &mut fmt::Formatter<'_>| -> fmt::Result {
                    write!(f, "((")?;
                    fmt_const(scale, f)?;
                    write!(f, " * ")?;
                    var(f)?;
                    write!(f, ") + ")?;
                    fmt_const(offset, f)?;
                    write!(f, ")")
                };
                inner.fmt_in(&sub, f)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_in(&|f: &mut fmt::Formatter<'_>| write!(f, "z"), f)
    }
}
