//! Continuous-limit experiments: residuals of the scaled difference equation
//! as eps shrinks, and the fitted convergence order.
use dn_core::catalog;
use dn_core::expr::Bindings;

fn main() -> dn_core::Result<()> {
    for id in ["ex3_1", "ex3_2"] {
        let entry = catalog::get(id, &Bindings::new())?;
        for x in &entry.limits {
            let rep = x.run()?;
            println!("{}: {:?}", rep.label, rep.status);
            for r in &rep.records {
                println!("    eps {:.3e}  max residual {:.3e}  floor {:.1e}", r.eps.norm(), r.max_residual, r.floor);
            }
        }
    }
    Ok(())
}
