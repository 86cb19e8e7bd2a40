//! Difference operators, Casoratians and periodicity defects.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::meromorphic::SingularityLedger;

/// Grid points closer than this to a declared singularity are rejected.
pub const GRID_GUARD: f64 = 0.05;

/// `f(z+1) − f(z)`.
pub fn delta(f: &Expr) -> Expr {
    Expr::sub(f.shift(1.0), f.clone())
}

/// `f(z+2) − 2f(z+1) + f(z)`.
pub fn delta2(f: &Expr) -> Expr {
    Expr::add(
        Expr::sub(f.shift(2.0), Expr::mul(Expr::real(2.0), f.shift(1.0))),
        f.clone(),
    )
}

/// `f1·Δf2 − f2·Δf1`.
pub fn casoratian(f1: &Expr, f2: &Expr) -> Expr {
    Expr::sub(
        Expr::mul(f1.clone(), delta(f2)),
        Expr::mul(f2.clone(), delta(f1)),
    )
}

/// Largest `|f(z+period) − f(z)|` over a grid, with the scale `1 + max|f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub value: f64,
    pub scale: f64,
}

impl Defect {
    pub fn relative(&self) -> f64 {
        self.value / self.scale
    }
}

/// Rejects grid points within [`GRID_GUARD`] of a declared singularity of
/// `ledger` or of its translate by `period`.
pub fn check_grid(ledger: &SingularityLedger, period: Complex64, grid: &[Complex64]) -> Result<()> {
    let shifted = ledger.shifted(period);
    for &z in grid {
        for l in [ledger, &shifted] {
            if l.nearest(z, GRID_GUARD, true).is_some() {
                return Err(Error::SingularGridPoint(z));
            }
        }
    }
    Ok(())
}

/// `max |f(z+period) − f(z)|` over the grid.
///
/// Only evaluation is checked here: a point where either value is not
/// finite is reported as [`Error::SingularGridPoint`]. Use [`check_grid`]
/// first to enforce the guard distance against a ledger.
pub fn periodicity_defect(f: &Expr, period: Complex64, grid: &[Complex64]) -> Result<Defect> {
    let mut value: f64 = 0.0;
    let mut fmax: f64 = 0.0;
    if period == Complex64::new(0.0, 0.0) {
        return Ok(Defect { value, scale: 1.0 });
    }
    for &z in grid {
        let a = f.eval_finite(z).ok_or(Error::SingularGridPoint(z))?;
        let b = f.eval_finite(z + period).ok_or(Error::SingularGridPoint(z))?;
        value = value.max((b - a).norm());
        fmax = fmax.max(a.norm()).max(b.norm());
    }
    Ok(Defect {
        value,
        scale: 1.0 + fmax,
    })
}
