//! Argument-principle counting on rectangles and ledger validation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{Kind, MeromorphicFunction, Singularity};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Declared singularities closer than this to a contour are rejected.
pub const CONTOUR_GUARD: f64 = 1e-3;
const START_NODES: usize = 256;
const MAX_NODES: usize = 4096;
const STABLE_TOL: f64 = 0.05;
const INTEGER_TOL: f64 = 0.25;

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Rect> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid(format!("degenerate rectangle [{x0},{x1}]x[{y0},{y1}]")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    /// The square `[-h, h]²`.
    pub fn square(h: f64) -> Rect {
        Rect {
            x0: -h,
            x1: h,
            y0: -h,
            y1: h,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn enclosing_radius(&self) -> f64 {
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x0, self.y1),
            Complex64::new(self.x1, self.y0),
            Complex64::new(self.x1, self.y1),
        ]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
    }

    /// Distance from `z` to the boundary curve.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let dx = if z.re < self.x0 {
            self.x0 - z.re
        } else if z.re > self.x1 {
            z.re - self.x1
        } else {
            0.0
        };
        let dy = if z.im < self.y0 {
            self.y0 - z.im
        } else if z.im > self.y1 {
            z.im - self.y1
        } else {
            0.0
        };
        if self.contains(z) {
            (z.re - self.x0)
                .min(self.x1 - z.re)
                .min(z.im - self.y0)
                .min(self.y1 - z.im)
        } else {
            dx.hypot(dy)
        }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x1, self.y0),
            Complex64::new(self.x1, self.y1),
            Complex64::new(self.x0, self.y1),
        ]
    }
}

/// `(1/2πi)∮ f'/f` over the boundary with `n` trapezoid nodes per edge.
fn winding(f: &Expr, df: &Expr, rect: &Rect, n: usize) -> Result<Complex64> {
    let corners = rect.corners();
    let mut total = Complex64::new(0.0, 0.0);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let h = (b - a) / n as f64;
        let mut edge = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            let z = a + h * k as f64;
            let (fz, dz) = match (f.eval_finite(z), df.eval_finite(z)) {
                (Some(fz), Some(dz)) if fz.norm() > 0.0 => (fz, dz),
                _ => return Err(Error::SingularityOnContour(z)),
            };
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            edge += dz / fz * w;
        }
        total += edge * h;
    }
    Ok(total / Complex64::new(0.0, 2.0 * PI))
}

fn count_with_derivative(f: &MeromorphicFunction, df: &Expr, rect: &Rect) -> Result<i64> {
    let guard_radius = rect.enclosing_radius() + CONTOUR_GUARD;
    if let Some(s) = f
        .ledger
        .expand(guard_radius)
        .into_iter()
        .find(|s| rect.boundary_distance(s.location) < CONTOUR_GUARD)
    {
        return Err(Error::SingularityOnContour(s.location));
    }
    let mut n = START_NODES;
    let mut prev = winding(&f.expr, df, rect, n)?.re;
    loop {
        n *= 2;
        let cur = winding(&f.expr, df, rect, n)?.re;
        let stable = (cur - prev).abs() <= STABLE_TOL;
        if stable || n >= MAX_NODES {
            let k = cur.round();
            if !stable || (cur - k).abs() > INTEGER_TOL {
                return Err(Error::NonIntegerWinding { raw: cur, nodes: n });
            }
            return Ok(k as i64);
        }
        prev = cur;
    }
}

/// Zeros minus poles (with multiplicity) inside `rect`.
pub fn argument_principle_count(f: &MeromorphicFunction, rect: &Rect) -> Result<i64> {
    count_with_derivative(f, &f.expr.differentiate(), rect)
}

/// Ledger prediction of zeros minus poles inside `rect`.
pub fn predicted_count(f: &MeromorphicFunction, rect: &Rect) -> i64 {
    f.ledger.in_rect(rect).iter().map(Singularity::signed_multiplicity).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell: Rect,
    pub predicted: i64,
    pub counted: i64,
    /// More than one declared singularity fell in this cell.
    pub crowded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerReport {
    pub label: String,
    pub cells: Vec<CellResult>,
    /// Grid lines moved off a declared singularity.
    pub nudged_lines: usize,
}

impl LedgerReport {
    pub fn mismatches(&self) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.predicted != c.counted).collect()
    }

    pub fn crowded(&self) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.crowded).collect()
    }

    pub fn passed(&self) -> bool {
        self.mismatches().is_empty()
    }
}

/// Grid coordinates from `lo` to `hi` in steps of about `cell`, each moved
/// off the listed singular coordinates by at least `clearance` when a clear
/// spot exists within a quarter step. Boundary lines only move outward.
fn grid_lines(lo: f64, hi: f64, cell: f64, coords: &[f64], clearance: f64) -> (Vec<f64>, usize) {
    let count = ((hi - lo) / cell).ceil().max(1.0) as usize;
    let step = (hi - lo) / count as f64;
    let reach = 0.25 * step;
    // Offset by a small irrational fraction of a step so a moved line does
    // not land on another lattice coordinate.
    let pad = clearance + 0.0371 * step;
    let mut nudged = 0;
    let lines = (0..=count)
        .map(|k| {
            let x0 = lo + step * k as f64;
            let gap = |x: f64| coords.iter().map(|c| (c - x).abs()).fold(f64::INFINITY, f64::min);
            if gap(x0) >= clearance {
                return x0;
            }
            let allowed = |x: f64| {
                (x - x0).abs() <= reach && (k != 0 || x <= x0) && (k != count || x >= x0)
            };
            let mut candidates: Vec<f64> = coords
                .iter()
                .flat_map(|c| [c - pad, c + pad])
                .filter(|&x| allowed(x))
                .collect();
            let mut sorted: Vec<f64> = coords.iter().copied().filter(|&c| (c - x0).abs() <= reach + pad).collect();
            sorted.sort_by(f64::total_cmp);
            candidates.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).filter(|&x| allowed(x)));
            candidates.sort_by(|a, b| (a - x0).abs().total_cmp(&(b - x0).abs()).then(a.total_cmp(b)));
            let best = candidates
                .iter()
                .copied()
                .find(|&x| gap(x) >= clearance)
                .or_else(|| candidates.iter().copied().max_by(|a, b| gap(*a).total_cmp(&gap(*b))));
            match best {
                Some(x) => {
                    nudged += 1;
                    x
                }
                None => x0,
            }
        })
        .collect();
    (lines, nudged)
}

/// Tiles `region` into cells of side about `cell` and compares the winding
/// count of every cell with the ledger.
///
/// Grid lines passing near a declared singularity are moved off it, so the
/// tiling may differ slightly from a uniform one; the number of moved lines
/// is reported.
pub fn validate_ledger(f: &MeromorphicFunction, region: &Rect, cell: f64) -> Result<LedgerReport> {
    if !(cell > 0.0) {
        return Err(Error::Invalid("cell size must be positive".into()));
    }
    if !f.ledger.zeros_declared() {
        return Err(Error::IncompleteLedger(f.label.clone()));
    }
    let clearance = (0.02 * cell).max(CONTOUR_GUARD * 10.0);
    let reach = region.enclosing_radius() + cell;
    let singular: Vec<Singularity> = f.ledger.expand(reach);
    let xs: Vec<f64> = singular.iter().map(|s| s.location.re).collect();
    let ys: Vec<f64> = singular.iter().map(|s| s.location.im).collect();
    let (gx, nx) = grid_lines(region.x0, region.x1, cell, &xs, clearance);
    let (gy, ny) = grid_lines(region.y0, region.y1, cell, &ys, clearance);
    let df = f.expr.differentiate();
    let mut cells = Vec::new();
    for j in 0..gy.len() - 1 {
        for i in 0..gx.len() - 1 {
            let rect = Rect::new(gx[i], gx[i + 1], gy[j], gy[j + 1])?;
            let inside: Vec<&Singularity> = singular.iter().filter(|s| rect.contains(s.location)).collect();
            let predicted = inside.iter().map(|s| s.signed_multiplicity()).sum();
            let counted = count_with_derivative(f, &df, &rect)?;
            cells.push(CellResult {
                cell: rect,
                predicted,
                counted,
                crowded: inside.len() > 1,
            });
        }
    }
    Ok(LedgerReport {
        label: f.label.clone(),
        cells,
        nudged_lines: nx + ny,
    })
}

/// Convenience: does any declared singularity of kind `kind` lie in `rect`?
pub fn has_kind_in(f: &MeromorphicFunction, rect: &Rect, kind: Kind) -> bool {
    f.ledger.in_rect(rect).iter().any(|s| s.kind == kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::meromorphic::SingularityLedger;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn f_b1() -> MeromorphicFunction {
        let e = parse("(1 + exp(pi*i*z) - exp(2*pi*i*z))/(exp(2*pi*i*z) - 1)").unwrap();
        // Zeros: e^{πiz} = u with u² − u − 1 = 0.
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let z_plus = c(0.0, -phi.ln() / PI);
        let z_minus = c(1.0, -((1.0 / phi).ln() / PI));
        let ledger = SingularityLedger::new()
            .with_lattice(c(0.0, 0.0), c(1.0, 0.0), 1, Kind::Pole)
            .unwrap()
            .with_lattice(z_plus, c(2.0, 0.0), 1, Kind::Zero)
            .unwrap()
            .with_lattice(z_minus, c(2.0, 0.0), 1, Kind::Zero)
            .unwrap();
        MeromorphicFunction::new("f_b", e, ledger)
    }

    #[test]
    fn counts_simple_examples() {
        let z2 = MeromorphicFunction::new("z^2", parse("z^2").unwrap(), SingularityLedger::new());
        assert_eq!(argument_principle_count(&z2, &Rect::square(1.0)).unwrap(), 2);
        let sin = MeromorphicFunction::new("sin", parse("sin(z)").unwrap(), SingularityLedger::new());
        assert_eq!(argument_principle_count(&sin, &Rect::new(2.0, 4.0, -1.0, 1.0).unwrap()).unwrap(), 1);
    }

    #[test]
    fn f_b_small_boxes() {
        let f = f_b1();
        // The zero at −i·ln(φ)/π ≈ −0.1532i sits inside the larger box.
        assert_eq!(argument_principle_count(&f, &Rect::square(0.4)).unwrap(), 0);
        assert_eq!(argument_principle_count(&f, &Rect::square(0.1)).unwrap(), -1);
        assert_eq!(predicted_count(&f, &Rect::square(0.4)), 0);
    }

    #[test]
    fn singularity_on_contour_is_rejected() {
        let f = f_b1();
        let r = Rect::new(0.0, 0.5, -0.1, 0.1).unwrap();
        assert!(matches!(argument_principle_count(&f, &r), Err(Error::SingularityOnContour(_))));
    }

    #[test]
    fn validates_f_b_ledger_and_detects_corruption() {
        let f = f_b1();
        let region = Rect::square(2.5);
        let report = validate_ledger(&f, &region, 0.9).unwrap();
        assert!(report.passed(), "{:?}", report.mismatches());

        let mut bad = f.clone();
        bad.ledger = bad.ledger.with_point(c(0.0, 0.0), 1, Kind::Pole).unwrap();
        let report = validate_ledger(&bad, &region, 0.9).unwrap();
        let mism = report.mismatches();
        assert_eq!(mism.len(), 1);
        assert!(mism[0].cell.contains(c(0.0, 0.0)));
    }

    #[test]
    fn constant_function_has_no_singularities() {
        let f = MeromorphicFunction::constant("two", c(2.0, 0.0));
        let report = validate_ledger(&f, &Rect::square(1.0), 0.5).unwrap();
        assert!(report.cells.iter().all(|c| c.counted == 0 && c.predicted == 0));
        assert_eq!(report.cells.len(), 16);
    }
}
