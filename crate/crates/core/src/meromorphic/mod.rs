//! Meromorphic functions as expressions paired with declared singularity
//! ledgers.
//!
//! A ledger is analytical knowledge: finite point records, infinite lattices
//! `base + k·step` (all integers `k`), and root families of
//! `αz + γ = c·e^{λz}` enumerated through Lambert W branches. Nothing here is
//! discovered numerically; [`contour`] validates ledgers with the argument
//! principle.

pub mod contour;
pub mod roots;

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

pub use contour::{argument_principle_count, validate_ledger, LedgerReport, Rect};

/// Lattice expansion stops at this modulus.
pub const LATTICE_LIMIT: f64 = 1e6;

/// Locations closer than this (relative) are the same point when merging.
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Pole,
    Zero,
}

impl Kind {
    pub fn flipped(self) -> Kind {
        match self {
            Kind::Pole => Kind::Zero,
            Kind::Zero => Kind::Pole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub location: Complex64,
    pub multiplicity: u32,
    pub kind: Kind,
}

impl Singularity {
    /// Zeros count positive, poles negative.
    pub fn signed_multiplicity(&self) -> i64 {
        match self.kind {
            Kind::Zero => i64::from(self.multiplicity),
            Kind::Pole => -i64::from(self.multiplicity),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Point(Singularity),
    Lattice {
        base: Complex64,
        step: Complex64,
        multiplicity: u32,
        kind: Kind,
    },
    /// Every root of `alpha·z + gamma = c·e^{lambda·z}`.
    LinearExp {
        alpha: Complex64,
        gamma: Complex64,
        c: Complex64,
        lambda: Complex64,
        multiplicity: u32,
        kind: Kind,
    },
}

impl Family {
    fn multiplicity_mut(&mut self) -> &mut u32 {
        match self {
            Family::Point(s) => &mut s.multiplicity,
            Family::Lattice { multiplicity, .. } | Family::LinearExp { multiplicity, .. } => multiplicity,
        }
    }

    fn kind_mut(&mut self) -> &mut Kind {
        match self {
            Family::Point(s) => &mut s.kind,
            Family::Lattice { kind, .. } | Family::LinearExp { kind, .. } => kind,
        }
    }

    /// Members with `|location| <= radius`, unmerged.
    fn members(&self, radius: f64, out: &mut Vec<Singularity>) {
        match *self {
            Family::Point(s) => {
                if s.location.norm() <= radius {
                    out.push(s);
                }
            }
            Family::Lattice {
                base,
                step,
                multiplicity,
                kind,
            } => {
                let radius = radius.min(LATTICE_LIMIT);
                // |base + k step|² <= r² is a quadratic inequality in real k.
                let s2 = step.norm_sqr();
                let center = -(base * step.conj()).re / s2;
                let dist2 = (base + step * center).norm_sqr();
                if dist2 > radius * radius {
                    return;
                }
                let half = ((radius * radius - dist2) / s2).sqrt();
                let lo = (center - half).floor() as i64 - 1;
                let hi = (center + half).ceil() as i64 + 1;
                for k in lo..=hi {
                    let location = base + step * k as f64;
                    if location.norm() <= radius {
                        out.push(Singularity {
                            location,
                            multiplicity,
                            kind,
                        });
                    }
                }
            }
            Family::LinearExp {
                alpha,
                gamma,
                c,
                lambda,
                multiplicity,
                kind,
            } => {
                for location in roots::linear_exp_roots(alpha, gamma, c, lambda, radius) {
                    out.push(Singularity {
                        location,
                        multiplicity,
                        kind,
                    });
                }
            }
        }
    }

    /// The same family for `g(z) = f(scale·z + offset)`.
    fn pulled_back(&self, scale: Complex64, offset: Complex64) -> Family {
        // A point p of f is a point (p − offset)/scale of g.
        let map = |p: Complex64| (p - offset) / scale;
        match *self {
            Family::Point(s) => Family::Point(Singularity {
                location: map(s.location),
                ..s
            }),
            Family::Lattice {
                base,
                step,
                multiplicity,
                kind,
            } => Family::Lattice {
                base: map(base),
                step: step / scale,
                multiplicity,
                kind,
            },
            Family::LinearExp {
                alpha,
                gamma,
                c,
                lambda,
                multiplicity,
                kind,
            } => Family::LinearExp {
                alpha: alpha * scale,
                gamma: alpha * offset + gamma,
                c: c * (lambda * offset).exp(),
                lambda: lambda * scale,
                multiplicity,
                kind,
            },
        }
    }
}

/// Declared zeros and poles of a meromorphic function.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityLedger {
    families: Vec<Family>,
    zeros_declared: bool,
}

impl Default for SingularityLedger {
    fn default() -> Self {
        SingularityLedger::new()
    }
}

impl SingularityLedger {
    /// An empty ledger that declares both zeros and poles (none of either).
    pub fn new() -> SingularityLedger {
        SingularityLedger {
            families: Vec::new(),
            zeros_declared: true,
        }
    }

    /// A ledger that only promises to list poles.
    pub fn poles_only() -> SingularityLedger {
        SingularityLedger {
            families: Vec::new(),
            zeros_declared: false,
        }
    }

    pub fn zeros_declared(&self) -> bool {
        self.zeros_declared
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    fn check_multiplicity(multiplicity: u32) -> Result<()> {
        if multiplicity == 0 {
            return Err(Error::Invalid("multiplicity must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_point(mut self, location: Complex64, multiplicity: u32, kind: Kind) -> Result<Self> {
        Self::check_multiplicity(multiplicity)?;
        self.families.push(Family::Point(Singularity {
            location,
            multiplicity,
            kind,
        }));
        Ok(self)
    }

    pub fn with_lattice(
        mut self,
        base: Complex64,
        step: Complex64,
        multiplicity: u32,
        kind: Kind,
    ) -> Result<Self> {
        Self::check_multiplicity(multiplicity)?;
        if step.norm() == 0.0 || !step.norm().is_finite() {
            return Err(Error::Invalid("lattice step must be nonzero and finite".into()));
        }
        self.families.push(Family::Lattice {
            base,
            step,
            multiplicity,
            kind,
        });
        Ok(self)
    }

    pub fn with_linear_exp(
        mut self,
        alpha: Complex64,
        gamma: Complex64,
        c: Complex64,
        lambda: Complex64,
        multiplicity: u32,
        kind: Kind,
    ) -> Result<Self> {
        Self::check_multiplicity(multiplicity)?;
        if alpha.norm() == 0.0 {
            return Err(Error::Invalid("linear-exponential family needs alpha != 0".into()));
        }
        self.families.push(Family::LinearExp {
            alpha,
            gamma,
            c,
            lambda,
            multiplicity,
            kind,
        });
        Ok(self)
    }

    /// Ledger of the product of the two functions.
    pub fn product(&self, other: &SingularityLedger) -> SingularityLedger {
        let mut families = self.families.clone();
        families.extend(other.families.iter().cloned());
        SingularityLedger {
            families,
            zeros_declared: self.zeros_declared && other.zeros_declared,
        }
    }

    /// Ledger of `1/f`.
    pub fn reciprocal(&self) -> SingularityLedger {
        let mut out = self.clone();
        for fam in &mut out.families {
            let k = fam.kind_mut();
            *k = k.flipped();
        }
        out
    }

    /// Ledger of `f^n`.
    pub fn powi(&self, n: i32) -> SingularityLedger {
        if n == 0 {
            return SingularityLedger::new();
        }
        let mut out = if n < 0 { self.reciprocal() } else { self.clone() };
        for fam in &mut out.families {
            *fam.multiplicity_mut() *= n.unsigned_abs();
        }
        out
    }

    /// Ledger of `f(scale·z + offset)`.
    pub fn pulled_back(&self, scale: Complex64, offset: Complex64) -> SingularityLedger {
        SingularityLedger {
            families: self.families.iter().map(|f| f.pulled_back(scale, offset)).collect(),
            zeros_declared: self.zeros_declared,
        }
    }

    /// Ledger of `f(z + c)`.
    pub fn shifted(&self, c: Complex64) -> SingularityLedger {
        self.pulled_back(Complex64::new(1.0, 0.0), c)
    }

    /// Ledger of `f(t/ε)` in the variable `t = εz`.
    pub fn scaled(&self, eps: Complex64) -> SingularityLedger {
        self.pulled_back(eps.inv(), Complex64::new(0.0, 0.0))
    }

    /// All declared singularities in the closed disk `|z| <= radius`, with
    /// coincident records merged into one net zero or pole, sorted by modulus
    /// then argument.
    pub fn expand(&self, radius: f64) -> Vec<Singularity> {
        let mut raw = Vec::new();
        for fam in &self.families {
            fam.members(radius, &mut raw);
        }
        let mut merged: Vec<(Complex64, i64)> = Vec::new();
        for s in raw {
            let tol = MERGE_TOL * (1.0 + s.location.norm());
            if let Some(slot) = merged.iter_mut().find(|(p, _)| (p - s.location).norm() <= tol) {
                slot.1 += s.signed_multiplicity();
            } else {
                merged.push((s.location, s.signed_multiplicity()));
            }
        }
        let mut out: Vec<Singularity> = merged
            .into_iter()
            .filter(|(_, m)| *m != 0)
            .map(|(location, m)| Singularity {
                location,
                multiplicity: m.unsigned_abs() as u32,
                kind: if m > 0 { Kind::Zero } else { Kind::Pole },
            })
            .collect();
        out.sort_by(|a, b| compare_locations(a.location, b.location));
        out
    }

    /// Declared singularities inside the closed rectangle.
    pub fn in_rect(&self, rect: &Rect) -> Vec<Singularity> {
        self.expand(rect.enclosing_radius())
            .into_iter()
            .filter(|s| rect.contains(s.location))
            .collect()
    }

    /// Distance from `z` to the nearest declared singularity (zeros included
    /// when `include_zeros`), searching no further than `limit`.
    pub fn nearest(&self, z: Complex64, limit: f64, include_zeros: bool) -> Option<(Singularity, f64)> {
        self.expand(z.norm() + limit)
            .into_iter()
            .filter(|s| include_zeros || s.kind == Kind::Pole)
            .map(|s| (s, (s.location - z).norm()))
            .filter(|(_, d)| *d <= limit)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Sort key: modulus, then argument in (−π, π].
pub fn compare_locations(a: Complex64, b: Complex64) -> Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then_with(|| a.arg().total_cmp(&b.arg()))
}

/// Where the ledger came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerStatus {
    /// Declared from closed-form knowledge of the function.
    Declared,
    /// Produced by a transformation; validate before relying on it.
    Derived,
}

#[derive(Debug, Clone)]
pub struct MeromorphicFunction {
    pub expr: Expr,
    pub ledger: SingularityLedger,
    pub label: String,
    pub status: LedgerStatus,
}

impl MeromorphicFunction {
    pub fn new(label: impl Into<String>, expr: Expr, ledger: SingularityLedger) -> Self {
        MeromorphicFunction {
            expr,
            ledger,
            label: label.into(),
            status: LedgerStatus::Declared,
        }
    }

    /// A constant function; its ledger is empty unless the constant is zero.
    pub fn constant(label: impl Into<String>, value: Complex64) -> Self {
        MeromorphicFunction::new(label, Expr::constant(value), SingularityLedger::new())
    }

    /// An entire function whose zeros are not tracked.
    pub fn entire_untracked_zeros(label: impl Into<String>, expr: Expr) -> Self {
        MeromorphicFunction::new(label, expr, SingularityLedger::poles_only())
    }

    pub fn reciprocal(&self) -> MeromorphicFunction {
        MeromorphicFunction {
            expr: Expr::div(Expr::one(), self.expr.clone()),
            ledger: self.ledger.reciprocal(),
            label: format!("1/({})", self.label),
            status: self.status,
        }
    }

    pub fn shifted(&self, c: Complex64) -> MeromorphicFunction {
        MeromorphicFunction {
            expr: self.expr.shift(c),
            ledger: self.ledger.shifted(c),
            label: format!("{}(z+{c})", self.label),
            status: self.status,
        }
    }

    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        self.expr.eval_finite(z)
    }
}

/// Poles with `|location| < r` (open disk), lattices expanded, sorted by
/// modulus then argument.
pub fn poles_in_disk(f: &MeromorphicFunction, r: f64) -> Vec<(Complex64, u32)> {
    f.ledger
        .expand(r)
        .into_iter()
        .filter(|s| s.kind == Kind::Pole && s.location.norm() < r)
        .map(|s| (s.location, s.multiplicity))
        .collect()
}

/// On-disk ledger record. A ledger file is a JSON list of these, or an object
/// `{"entries": [...], "zeros_declared": bool}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LedgerEntry {
    LinearExp {
        alpha_x: f64,
        alpha_y: f64,
        gamma_x: f64,
        gamma_y: f64,
        c_x: f64,
        c_y: f64,
        lambda_x: f64,
        lambda_y: f64,
        multiplicity: u32,
        kind: Kind,
    },
    Lattice {
        base_x: f64,
        base_y: f64,
        step_x: f64,
        step_y: f64,
        multiplicity: u32,
        kind: Kind,
    },
    Point {
        x: f64,
        y: f64,
        multiplicity: u32,
        kind: Kind,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LedgerFile {
    List(Vec<LedgerEntry>),
    Object {
        entries: Vec<LedgerEntry>,
        #[serde(default = "default_true")]
        zeros_declared: bool,
    },
}

fn default_true() -> bool {
    true
}

impl LedgerEntry {
    pub fn kind(&self) -> Kind {
        match *self {
            LedgerEntry::LinearExp { kind, .. } | LedgerEntry::Lattice { kind, .. } | LedgerEntry::Point { kind, .. } => kind,
        }
    }
}

impl SingularityLedger {
    pub fn to_entries(&self) -> Vec<LedgerEntry> {
        self.families
            .iter()
            .map(|f| match *f {
                Family::Point(s) => LedgerEntry::Point {
                    x: s.location.re,
                    y: s.location.im,
                    multiplicity: s.multiplicity,
                    kind: s.kind,
                },
                Family::Lattice {
                    base,
                    step,
                    multiplicity,
                    kind,
                } => LedgerEntry::Lattice {
                    base_x: base.re,
                    base_y: base.im,
                    step_x: step.re,
                    step_y: step.im,
                    multiplicity,
                    kind,
                },
                Family::LinearExp {
                    alpha,
                    gamma,
                    c,
                    lambda,
                    multiplicity,
                    kind,
                } => LedgerEntry::LinearExp {
                    alpha_x: alpha.re,
                    alpha_y: alpha.im,
                    gamma_x: gamma.re,
                    gamma_y: gamma.im,
                    c_x: c.re,
                    c_y: c.im,
                    lambda_x: lambda.re,
                    lambda_y: lambda.im,
                    multiplicity,
                    kind,
                },
            })
            .collect()
    }

    pub fn from_entries(entries: &[LedgerEntry], zeros_declared: bool) -> Result<SingularityLedger> {
        let mut ledger = if zeros_declared {
            SingularityLedger::new()
        } else {
            SingularityLedger::poles_only()
        };
        for e in entries {
            ledger = match *e {
                LedgerEntry::Point {
                    x,
                    y,
                    multiplicity,
                    kind,
                } => ledger.with_point(Complex64::new(x, y), multiplicity, kind)?,
                LedgerEntry::Lattice {
                    base_x,
                    base_y,
                    step_x,
                    step_y,
                    multiplicity,
                    kind,
                } => ledger.with_lattice(
                    Complex64::new(base_x, base_y),
                    Complex64::new(step_x, step_y),
                    multiplicity,
                    kind,
                )?,
                LedgerEntry::LinearExp {
                    alpha_x,
                    alpha_y,
                    gamma_x,
                    gamma_y,
                    c_x,
                    c_y,
                    lambda_x,
                    lambda_y,
                    multiplicity,
                    kind,
                } => ledger.with_linear_exp(
                    Complex64::new(alpha_x, alpha_y),
                    Complex64::new(gamma_x, gamma_y),
                    Complex64::new(c_x, c_y),
                    Complex64::new(lambda_x, lambda_y),
                    multiplicity,
                    kind,
                )?,
            };
        }
        Ok(ledger)
    }

    pub fn from_json(text: &str) -> Result<SingularityLedger> {
        match serde_json::from_str::<LedgerFile>(text)? {
            LedgerFile::List(entries) => SingularityLedger::from_entries(&entries, true),
            LedgerFile::Object {
                entries,
                zeros_declared,
            } => SingularityLedger::from_entries(&entries, zeros_declared),
        }
    }

    pub fn to_json(&self) -> String {
        let file = LedgerFile::Object {
            entries: self.to_entries(),
            zeros_declared: self.zeros_declared,
        };
        serde_json::to_string_pretty(&file).expect("ledger serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn integer_poles() -> SingularityLedger {
        SingularityLedger::new()
            .with_lattice(c(0.0, 0.0), c(1.0, 0.0), 1, Kind::Pole)
            .unwrap()
    }

    #[test]
    fn poles_in_disk_of_integer_lattice() {
        let f = MeromorphicFunction::new("f_b", Expr::var(), integer_poles());
        let poles = poles_in_disk(&f, 2.5);
        let locs: Vec<f64> = poles.iter().map(|(p, _)| p.re).collect();
        assert_eq!(locs, vec![0.0, 1.0, -1.0, 2.0, -2.0]);
        assert!(poles.iter().all(|(_, m)| *m == 1));
    }

    #[test]
    fn poles_in_disk_trivial_cases() {
        let entire = MeromorphicFunction::new("sin", Expr::var().sin(), SingularityLedger::poles_only());
        assert!(poles_in_disk(&entire, 100.0).is_empty());
        let ledger = SingularityLedger::new().with_point(c(0.0, 0.0), 2, Kind::Pole).unwrap();
        let f = MeromorphicFunction::new("1/z^2", Expr::var().powi(-2), ledger);
        assert_eq!(poles_in_disk(&f, 1.0), vec![(c(0.0, 0.0), 2)]);
    }

    #[test]
    fn coincident_records_merge_to_net_multiplicity() {
        let ledger = integer_poles()
            .with_point(c(0.0, 0.0), 1, Kind::Zero)
            .unwrap()
            .with_point(c(1.0, 0.0), 3, Kind::Zero)
            .unwrap();
        let s = ledger.expand(1.5);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].location, c(1.0, 0.0));
        assert_eq!((s[0].multiplicity, s[0].kind), (2, Kind::Zero));
        assert_eq!(s[1].location, c(-1.0, 0.0));
    }

    #[test]
    fn shifted_and_scaled_ledgers_move_points() {
        let ledger = integer_poles().with_point(c(0.5, 0.5), 1, Kind::Zero).unwrap();
        let shifted = ledger.shifted(c(0.25, 0.0));
        assert!(shifted
            .expand(1.0)
            .iter()
            .any(|s| (s.location - c(-0.25, 0.0)).norm() < 1e-15 && s.kind == Kind::Pole));
        assert!(shifted
            .expand(1.0)
            .iter()
            .any(|s| (s.location - c(0.25, 0.5)).norm() < 1e-15 && s.kind == Kind::Zero));
        let scaled = ledger.scaled(c(0.1, 0.0));
        let poles: Vec<_> = scaled.expand(0.25).into_iter().filter(|s| s.kind == Kind::Pole).collect();
        assert_eq!(poles.len(), 5);
    }

    #[test]
    fn json_round_trip_and_bare_list() {
        let ledger = integer_poles()
            .with_point(c(0.0, 2.0), 2, Kind::Zero)
            .unwrap()
            .with_linear_exp(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 6.0), 1, Kind::Zero)
            .unwrap();
        let back = SingularityLedger::from_json(&ledger.to_json()).unwrap();
        assert_eq!(back, ledger);

        let text = r#"[{"x": 0, "y": 0, "multiplicity": 2, "kind": "pole"},
                       {"base_x": 0.5, "base_y": 0, "step_x": 1, "step_y": 0, "multiplicity": 1, "kind": "zero"}]"#;
        let parsed = SingularityLedger::from_json(text).unwrap();
        assert_eq!(parsed.families().len(), 2);
        assert!(parsed.zeros_declared());
        assert!(SingularityLedger::from_json(r#"[{"x": 0, "y": 0, "multiplicity": 0, "kind": "pole"}]"#).is_err());
    }
}
