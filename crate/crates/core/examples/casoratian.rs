//! Casoratian of the sin/cos pair: its value, its 1-periodicity and the
//! quartic relation it satisfies with the coefficients.
use dn_core::catalog;
use dn_core::diffops::{casoratian, periodicity_defect};
use dn_core::equations::relation_quartic_defect;
use dn_core::expr::Bindings;
use dn_core::grid::{regular_points, GUARD};
use dn_core::meromorphic::Rect;
use dn_core::Complex64;

fn main() -> dn_core::Result<()> {
    let entry = catalog::get("ex2_1", &Bindings::new())?;
    let (f1, f2) = (&entry.solutions[0], &entry.solutions[1]);
    let h = casoratian(&f1.expr, &f2.expr);
    let grid = regular_points(&Rect::square(3.0), 50, &[], GUARD, None)?;
    let period = periodicity_defect(&h, Complex64::new(1.0, 0.0), &grid)?;
    let mut quartic: f64 = 0.0;
    for &z in &grid {
        quartic = quartic.max(relation_quartic_defect(&entry.equation, f1, f2, &h, z)?.relative());
    }
    println!("H(0.2+0.1i) = {:?}", h.eval_finite(Complex64::new(0.2, 0.1)));
    println!("1-periodicity defect {:.2e}", period.relative());
    println!("quartic relation defect {quartic:.2e}");
    Ok(())
}
