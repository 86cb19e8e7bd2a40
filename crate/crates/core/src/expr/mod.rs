//! Closed-form expression trees over one complex variable.
//!
//! An [`Expr`] is an immutable, reference-counted tree built from a fixed node
//! set: constants, the variable, the four field operations, negation, integer
//! powers, `exp`, `sin`, `cos`, and affine substitution of the variable. The
//! node set is closed under the operations this crate needs: shifting
//! `z ↦ z + c`, rescaling `z ↦ t/ε`, substitution, and exact symbolic
//! differentiation.
//!
//! Evaluation never panics. A division by exact zero yields
//! [`Value::Infinite`]; `0/0`, `∞ − ∞`, `0·∞`, transcendental functions of
//! `∞`, and floating overflow yield [`Value::Undefined`].
//!
//! ```
//! use dn_core::expr::{Expr, Value};
//! use num_complex::Complex64;
//!
//! let z = Expr::var();
//! let f = (z.clone() * std::f64::consts::PI).sin();
//! let v = f.eval(Complex64::new(0.5, 0.0));
//! assert!(matches!(v, Value::Finite(c) if (c.re - 1.0).abs() < 1e-15));
//! ```

mod parse;
pub mod shape;

pub use parse::{parse, parse_with, Bindings};

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Result of evaluating an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(Complex64),
    /// A nonzero quantity was divided by exact zero.
    Infinite,
    /// `0/0` or an indeterminate combination; also floating overflow.
    Undefined,
}

impl Value {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Value::Finite(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Value::Infinite)
    }

    fn from_complex(c: Complex64) -> Value {
        if c.re.is_finite() && c.im.is_finite() {
            Value::Finite(c)
        } else {
            Value::Undefined
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var,
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Exp(Expr),
    Sin(Expr),
    Cos(Expr),
    /// `inner(scale · z + offset)`.
    Affine {
        scale: Complex64,
        offset: Complex64,
        inner: Expr,
    },
}

/// Immutable expression tree. Cloning is cheap (shared ownership).
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    /// Builds a node and folds it to a constant when every child is constant
    /// and the folded value is finite. Folding goes through [`Expr::eval`], so
    /// a folded tree evaluates bit-identically to the unfolded one.
    fn folded(node: Node) -> Expr {
        let e = Expr::raw(node);
        if e.is_constant() && !matches!(*e.0, Node::Const(_)) {
            if let Value::Finite(c) = e.eval(ZERO) {
                return Expr::constant(c);
            }
        }
        e
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn var() -> Expr {
        Expr::raw(Node::Var)
    }

    pub fn constant(c: impl Into<Complex64>) -> Expr {
        Expr::raw(Node::Const(c.into()))
    }

    pub fn real(x: f64) -> Expr {
        Expr::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::constant(ZERO)
    }

    pub fn one() -> Expr {
        Expr::constant(ONE)
    }

    /// The imaginary unit as a constant.
    pub fn i() -> Expr {
        Expr::constant(Complex64::i())
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn is_const_value(&self, v: Complex64) -> bool {
        self.as_const() == Some(v)
    }

    /// True when the tree does not reference the variable.
    pub fn is_constant(&self) -> bool {
        match &*self.0 {
            Node::Const(_) => true,
            Node::Var => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.is_constant()
            }
            Node::Affine { inner, .. } => inner.is_constant(),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_const_value(ZERO) {
            return b;
        }
        if b.is_const_value(ZERO) {
            return a;
        }
        Expr::folded(Node::Add(a, b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_const_value(ZERO) {
            return a;
        }
        if a.is_const_value(ZERO) {
            return Expr::neg(b);
        }
        Expr::folded(Node::Sub(a, b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_const_value(ZERO) || b.is_const_value(ZERO) {
            return Expr::zero();
        }
        if a.is_const_value(ONE) {
            return b;
        }
        if b.is_const_value(ONE) {
            return a;
        }
        if a.is_const_value(-ONE) {
            return Expr::neg(b);
        }
        if b.is_const_value(-ONE) {
            return Expr::neg(a);
        }
        Expr::folded(Node::Mul(a, b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if b.is_const_value(ONE) {
            return a;
        }
        if a.is_const_value(ZERO) && !b.is_const_value(ZERO) {
            return Expr::zero();
        }
        Expr::folded(Node::Div(a, b))
    }

    pub fn neg(a: Expr) -> Expr {
        match &*a.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::raw(Node::Neg(a)),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        match n {
            0 => Expr::one(),
            1 => self.clone(),
            _ => Expr::folded(Node::Pow(self.clone(), n)),
        }
    }

    pub fn exp(&self) -> Expr {
        Expr::folded(Node::Exp(self.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::folded(Node::Sin(self.clone()))
    }

    pub fn cos(&self) -> Expr {
        Expr::folded(Node::Cos(self.clone()))
    }

    /// `self(scale · z + offset)`. Nested substitutions collapse into one
    /// affine map.
    pub fn affine(&self, scale: Complex64, offset: Complex64) -> Expr {
        if scale == ONE && offset == ZERO {
            return self.clone();
        }
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Affine {
                scale: s1,
                offset: o1,
                inner,
            } => inner.affine(s1 * scale, s1 * offset + o1),
            _ => Expr::raw(Node::Affine {
                scale,
                offset,
                inner: self.clone(),
            }),
        }
    }

    /// `z ↦ self(z + c)`.
    pub fn shift(&self, c: impl Into<Complex64>) -> Expr {
        self.affine(ONE, c.into())
    }

    /// Rewrites the expression in the variable `t = ε z`: the result evaluated
    /// at `t` equals `self` evaluated at `t/ε`.
    pub fn substitute_scale(&self, eps: impl Into<Complex64>) -> Result<Expr> {
        let eps = eps.into();
        if eps == ZERO {
            return Err(Error::ZeroScale);
        }
        Ok(self.affine(eps.inv(), ZERO))
    }

    /// Replaces the variable with `sub`: the result is `self(sub(z))`.
    pub fn compose(&self, sub: &Expr) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var => sub.clone(),
            Node::Add(a, b) => Expr::add(a.compose(sub), b.compose(sub)),
            Node::Sub(a, b) => Expr::sub(a.compose(sub), b.compose(sub)),
            Node::Mul(a, b) => Expr::mul(a.compose(sub), b.compose(sub)),
            Node::Div(a, b) => Expr::div(a.compose(sub), b.compose(sub)),
            Node::Neg(a) => Expr::neg(a.compose(sub)),
            Node::Pow(a, n) => a.compose(sub).powi(*n),
            Node::Exp(a) => a.compose(sub).exp(),
            Node::Sin(a) => a.compose(sub).sin(),
            Node::Cos(a) => a.compose(sub).cos(),
            Node::Affine {
                scale,
                offset,
                inner,
            } => {
                let arg = Expr::add(Expr::mul(Expr::constant(*scale), sub.clone()), Expr::constant(*offset));
                inner.compose(&arg)
            }
        }
    }

    /// Exact symbolic derivative with respect to the variable.
    pub fn differentiate(&self) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var => Expr::one(),
            Node::Add(a, b) => Expr::add(a.differentiate(), b.differentiate()),
            Node::Sub(a, b) => Expr::sub(a.differentiate(), b.differentiate()),
            Node::Mul(a, b) => Expr::add(
                Expr::mul(a.differentiate(), b.clone()),
                Expr::mul(a.clone(), b.differentiate()),
            ),
            Node::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.differentiate(), b.clone()),
                    Expr::mul(a.clone(), b.differentiate()),
                ),
                b.powi(2),
            ),
            Node::Neg(a) => Expr::neg(a.differentiate()),
            Node::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::real(f64::from(*n)), a.powi(n - 1)),
                a.differentiate(),
            ),
            Node::Exp(a) => Expr::mul(a.exp(), a.differentiate()),
            Node::Sin(a) => Expr::mul(a.cos(), a.differentiate()),
            Node::Cos(a) => Expr::neg(Expr::mul(a.sin(), a.differentiate())),
            Node::Affine {
                scale,
                offset,
                inner,
            } => Expr::mul(
                Expr::constant(*scale),
                inner.differentiate().affine(*scale, *offset),
            ),
        }
    }

    /// Evaluates the tree at `z`. Deterministic: no reassociation or
    /// reordering happens at evaluation time.
    pub fn eval(&self, z: Complex64) -> Value {
        use Value::*;
        match &*self.0 {
            Node::Const(c) => Finite(*c),
            Node::Var => Finite(z),
            Node::Add(a, b) => match (a.eval(z), b.eval(z)) {
                (Finite(x), Finite(y)) => Value::from_complex(x + y),
                (Infinite, Finite(_)) | (Finite(_), Infinite) => Infinite,
                _ => Undefined,
            },
            Node::Sub(a, b) => match (a.eval(z), b.eval(z)) {
                (Finite(x), Finite(y)) => Value::from_complex(x - y),
                (Infinite, Finite(_)) | (Finite(_), Infinite) => Infinite,
                _ => Undefined,
            },
            Node::Mul(a, b) => match (a.eval(z), b.eval(z)) {
                (Finite(x), Finite(y)) => Value::from_complex(x * y),
                (Infinite, Finite(y)) | (Finite(y), Infinite) => {
                    if y == ZERO {
                        Undefined
                    } else {
                        Infinite
                    }
                }
                (Infinite, Infinite) => Infinite,
                _ => Undefined,
            },
            Node::Div(a, b) => match (a.eval(z), b.eval(z)) {
                (Finite(x), Finite(y)) => {
                    if y == ZERO {
                        if x == ZERO {
                            Undefined
                        } else {
                            Infinite
                        }
                    } else {
                        Value::from_complex(div_scaled(x, y))
                    }
                }
                (Finite(_), Infinite) => Finite(ZERO),
                (Infinite, Finite(_)) => Infinite,
                _ => Undefined,
            },
            Node::Neg(a) => match a.eval(z) {
                Finite(x) => Finite(-x),
                other => other,
            },
            Node::Pow(a, n) => match a.eval(z) {
                Finite(x) => int_pow(x, *n),
                Infinite if *n > 0 => Infinite,
                Infinite if *n < 0 => Finite(ZERO),
                _ => Undefined,
            },
            Node::Exp(a) => match a.eval(z) {
                Finite(x) => Value::from_complex(x.exp()),
                _ => Undefined,
            },
            Node::Sin(a) => match a.eval(z) {
                Finite(x) => Value::from_complex(x.sin()),
                _ => Undefined,
            },
            Node::Cos(a) => match a.eval(z) {
                Finite(x) => Value::from_complex(x.cos()),
                _ => Undefined,
            },
            Node::Affine {
                scale,
                offset,
                inner,
            } => match Value::from_complex(scale * z + offset) {
                Finite(w) => inner.eval(w),
                other => other,
            },
        }
    }

    /// Finite value at `z`, or `None` at poles and undefined points.
    pub fn eval_finite(&self, z: Complex64) -> Option<Complex64> {
        self.eval(z).finite()
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + match &*self.0 {
            Node::Const(_) | Node::Var => 0,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.size() + b.size()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => a.size(),
            Node::Affine { inner, .. } => inner.size(),
        }
    }
}

fn int_pow(x: Complex64, n: i32) -> Value {
    let mut base = x;
    let mut k = n.unsigned_abs();
    let mut acc = ONE;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        k >>= 1;
        if k > 0 {
            base = base * base;
        }
    }
    if n >= 0 {
        Value::from_complex(acc)
    } else if acc == ZERO {
        Value::Infinite
    } else {
        Value::from_complex(div_scaled(ONE, acc))
    }
}

/// Complex quotient without forming `|y|²`, so it stays finite when `|y|`
/// is beyond `1e154` (Smith's method).
fn div_scaled(x: Complex64, y: Complex64) -> Complex64 {
    if y.re.abs() >= y.im.abs() {
        let r = y.im / y.re;
        let d = y.re + y.im * r;
        Complex64::new((x.re + x.im * r) / d, (x.im - x.re * r) / d)
    } else {
        let r = y.re / y.im;
        let d = y.re * r + y.im;
        Complex64::new((x.re * r + x.im) / d, (x.im * r - x.re) / d)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::real(x)
    }
}

impl From<Complex64> for Expr {
    fn from(c: Complex64) -> Expr {
        Expr::constant(c)
    }
}

impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Expr {
        e.clone()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl<T: Into<Expr>> $trait<T> for Expr {
            type Output = Expr;
            fn $method(self, rhs: T) -> Expr {
                $ctor(self, rhs.into())
            }
        }
        impl<T: Into<Expr>> $trait<T> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: T) -> Expr {
                $ctor(self.clone(), rhs.into())
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::real(self), rhs)
            }
        }
        impl $trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(Expr::real(self), rhs.clone())
            }
        }
        impl $trait<Expr> for Complex64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
