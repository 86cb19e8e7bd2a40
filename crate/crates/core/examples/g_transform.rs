//! The G transform of solutions and counting of its odd-order points.
use dn_core::catalog;
use dn_core::equations::g_of;
use dn_core::expr::Bindings;
use dn_core::nevanlinna::{n_o_bar, odd_points};
use dn_core::Complex64;

fn main() -> dn_core::Result<()> {
    let z = Complex64::new(0.37, 0.21);
    let ex22 = catalog::get("ex2_2", &Bindings::new())?;
    println!("G(f_b)({z}) = {}", g_of(&ex22.equation, &ex22.solutions[0], z)?);

    let ex51 = catalog::get("ex5_1", &Bindings::new())?;
    for (f, g) in ex51.solutions.iter().zip(&ex51.g_images) {
        println!("{}: G = {}", f.label, g.expr);
        for r in [3.0, 5.0, 8.0] {
            let pts = odd_points(g, r)?;
            println!("    r = {r}: {} odd points, N_O bar = {:.4}", pts.len(), n_o_bar(g, r)?);
        }
    }
    println!("2 log 5 = {:.4}", 2.0 * 5f64.ln());
    Ok(())
}
