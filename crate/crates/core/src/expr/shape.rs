//! Structural recognition of simple expression families.
//!
//! Catalog ledgers are derived analytically, which is only possible when a
//! parameter expression has a known shape: affine in `z`, or a constant plus a
//! single exponential `c0 + c1·e^{λz}`.

use num_complex::Complex64;

use super::{Expr, Node};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MAX_TERMS: usize = 16;

/// Returns `(a, b)` when the expression is structurally `a·z + b`.
pub fn as_affine(e: &Expr) -> Option<(Complex64, Complex64)> {
    if e.is_constant() {
        return e.eval_finite(ZERO).map(|v| (ZERO, v));
    }
    match e.node() {
        Node::Var => Some((ONE, ZERO)),
        Node::Add(x, y) => {
            let (a1, b1) = as_affine(x)?;
            let (a2, b2) = as_affine(y)?;
            Some((a1 + a2, b1 + b2))
        }
        Node::Sub(x, y) => {
            let (a1, b1) = as_affine(x)?;
            let (a2, b2) = as_affine(y)?;
            Some((a1 - a2, b1 - b2))
        }
        Node::Neg(x) => {
            let (a, b) = as_affine(x)?;
            Some((-a, -b))
        }
        Node::Mul(x, y) => {
            let (a1, b1) = as_affine(x)?;
            let (a2, b2) = as_affine(y)?;
            match (a1 == ZERO, a2 == ZERO) {
                (true, _) => Some((b1 * a2, b1 * b2)),
                (_, true) => Some((a1 * b2, b1 * b2)),
                _ => None,
            }
        }
        Node::Div(x, y) => {
            let (a1, b1) = as_affine(x)?;
            let (a2, b2) = as_affine(y)?;
            if a2 != ZERO || b2 == ZERO {
                return None;
            }
            Some((a1 / b2, b1 / b2))
        }
        Node::Pow(x, 1) => as_affine(x),
        Node::Affine {
            scale,
            offset,
            inner,
        } => {
            let (a, b) = as_affine(inner)?;
            Some((a * scale, a * offset + b))
        }
        _ => None,
    }
}

/// A finite sum `Σ cₖ e^{rₖ z}` with distinct rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    pub terms: Vec<(Complex64, Complex64)>,
}

impl ExpPoly {
    fn constant(c: Complex64) -> ExpPoly {
        ExpPoly {
            terms: vec![(c, ZERO)],
        }
        .normalized()
    }

    fn normalized(mut self) -> ExpPoly {
        let mut out: Vec<(Complex64, Complex64)> = Vec::new();
        for (c, r) in self.terms.drain(..) {
            if let Some(slot) = out.iter_mut().find(|(_, r2)| *r2 == r) {
                slot.0 += c;
            } else {
                out.push((c, r));
            }
        }
        out.retain(|(c, _)| *c != ZERO);
        ExpPoly { terms: out }
    }

    fn add(self, other: ExpPoly) -> ExpPoly {
        let mut terms = self.terms;
        terms.extend(other.terms);
        ExpPoly { terms }.normalized()
    }

    fn scale(self, k: Complex64) -> ExpPoly {
        ExpPoly {
            terms: self.terms.into_iter().map(|(c, r)| (c * k, r)).collect(),
        }
        .normalized()
    }

    fn mul(&self, other: &ExpPoly) -> Option<ExpPoly> {
        let mut terms = Vec::new();
        for (c1, r1) in &self.terms {
            for (c2, r2) in &other.terms {
                terms.push((c1 * c2, r1 + r2));
            }
        }
        let p = ExpPoly { terms }.normalized();
        (p.terms.len() <= MAX_TERMS).then_some(p)
    }

    fn as_constant(&self) -> Option<Complex64> {
        match self.terms.as_slice() {
            [] => Some(ZERO),
            [(c, r)] if *r == ZERO => Some(*c),
            _ => None,
        }
    }
}

/// Recognizes `Σ cₖ e^{rₖ z}`.
pub fn as_exp_poly(e: &Expr) -> Option<ExpPoly> {
    if e.is_constant() {
        return e.eval_finite(ZERO).map(ExpPoly::constant);
    }
    match e.node() {
        Node::Exp(arg) => {
            let (a, b) = as_affine(arg)?;
            Some(
                ExpPoly {
                    terms: vec![(b.exp(), a)],
                }
                .normalized(),
            )
        }
        Node::Add(x, y) => Some(as_exp_poly(x)?.add(as_exp_poly(y)?)),
        Node::Sub(x, y) => Some(as_exp_poly(x)?.add(as_exp_poly(y)?.scale(-ONE))),
        Node::Neg(x) => Some(as_exp_poly(x)?.scale(-ONE)),
        Node::Mul(x, y) => as_exp_poly(x)?.mul(&as_exp_poly(y)?),
        Node::Div(x, y) => {
            let d = as_exp_poly(y)?.as_constant()?;
            if d == ZERO {
                return None;
            }
            Some(as_exp_poly(x)?.scale(d.inv()))
        }
        Node::Pow(x, n) if *n >= 0 => {
            let base = as_exp_poly(x)?;
            let mut acc = ExpPoly::constant(ONE);
            for _ in 0..*n {
                acc = acc.mul(&base)?;
            }
            Some(acc)
        }
        Node::Affine {
            scale,
            offset,
            inner,
        } => {
            let p = as_exp_poly(inner)?;
            Some(
                ExpPoly {
                    terms: p
                        .terms
                        .into_iter()
                        .map(|(c, r)| (c * (r * offset).exp(), r * scale))
                        .collect(),
                }
                .normalized(),
            )
        }
        _ => None,
    }
}

/// `c0 + c1·e^{rate·z}`; a constant has `c1 = 0` and `rate = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpLinear {
    pub c0: Complex64,
    pub c1: Complex64,
    pub rate: Complex64,
}

impl ExpLinear {
    pub fn is_constant(&self) -> bool {
        self.c1 == ZERO || self.rate == ZERO
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c0 + self.c1 * (self.rate * z).exp()
    }

    /// The integer `m` with `rate = 2πi·m`, when it exists.
    pub fn period_one_multiple(&self) -> Option<i64> {
        let m = self.rate / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let k = m.re.round();
        ((m.re - k).abs() < 1e-12 && m.im.abs() < 1e-12 && k != 0.0).then_some(k as i64)
    }
}

pub fn as_exp_linear(e: &Expr) -> Option<ExpLinear> {
    let p = as_exp_poly(e)?;
    let mut c0 = ZERO;
    let mut exp_term = None;
    for (c, r) in p.terms {
        if r == ZERO {
            c0 = c;
        } else if exp_term.replace((c, r)).is_some() {
            return None;
        }
    }
    let (c1, rate) = exp_term.unwrap_or((ZERO, ZERO));
    Some(ExpLinear { c0, c1, rate })
}
