//! List catalog entries and build one with a custom parameter.
use dn_core::catalog;
use dn_core::Complex64;

fn main() -> dn_core::Result<()> {
    for info in catalog::list() {
        let params: Vec<String> = info.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        println!("{:6} {}  [{}]", info.id, info.provenance, params.join(", "));
    }
    let entry = catalog::get_with_text("ex2_1", &[("a".into(), "0.7".into())])?;
    let f = &entry.solutions[0];
    println!("{} at 1: {:?}", f.label, f.eval(Complex64::new(1.0, 0.0)));
    match catalog::get_with_text("ex2_2", &[("b".into(), "0".into())]) {
        Err(e) => println!("b = 0 rejected: {e}"),
        Ok(_) => println!("b = 0 unexpectedly accepted"),
    }
    Ok(())
}
