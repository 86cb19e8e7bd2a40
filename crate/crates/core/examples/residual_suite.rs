//! Residual suite over every catalog entry with default parameters.
use dn_core::catalog;
use dn_core::equations::TOL_RESIDUAL;
use dn_core::expr::Bindings;
use dn_core::meromorphic::Rect;

fn main() -> dn_core::Result<()> {
    let rect = Rect::square(3.0);
    for info in catalog::list() {
        let entry = catalog::get(info.id, &Bindings::new())?;
        if entry.is_ode() {
            println!("{:6} ordinary differential equation, see the continuous_limit example", info.id);
            continue;
        }
        for (k, f) in entry.solutions.iter().enumerate() {
            let rep = entry.residual_report(k, &rect, 200, None)?;
            println!(
                "{:6} {:24} max relative residual {:9.2e} {}",
                info.id,
                f.label,
                rep.max_relative,
                if rep.passes(TOL_RESIDUAL) { "pass" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
