//! Compare declared zeros and poles against argument-principle counts, then
//! show that a ledger with a spurious pole is caught.
use dn_core::catalog;
use dn_core::expr::Bindings;
use dn_core::meromorphic::contour::validate_ledger;
use dn_core::meromorphic::{Kind, MeromorphicFunction, Rect};
use dn_core::Complex64;

fn main() -> dn_core::Result<()> {
    let entry = catalog::get("ex2_2", &Bindings::new())?;
    let f = &entry.solutions[0];
    let region = Rect::square(3.0);
    let rep = validate_ledger(f, &region, 0.5)?;
    println!("{}: {} cells, {} mismatches, {} nudged grid lines", rep.label, rep.cells.len(), rep.mismatches().len(), rep.nudged_lines);

    let bad_ledger = f.ledger.clone().with_point(Complex64::new(0.3, 0.2), 1, Kind::Pole)?;
    let bad = MeromorphicFunction::new(format!("{} (corrupted)", f.label), f.expr.clone(), bad_ledger);
    let rep = validate_ledger(&bad, &region, 0.5)?;
    for cell in rep.mismatches() {
        println!(
            "mismatch in [{}, {}]x[{}, {}]: declared {}, counted {}",
            cell.cell.x0, cell.cell.x1, cell.cell.y0, cell.cell.y1, cell.predicted, cell.counted
        );
    }
    Ok(())
}
