//! Parse an expression, print it back, differentiate, shift and take differences.
use dn_core::diffops::{casoratian, delta, delta2};
use dn_core::expr::parse;
use dn_core::Complex64;

fn main() -> dn_core::Result<()> {
    let f = parse("exp(pi*i*z) / (1 + z^2)")?;
    let z = Complex64::new(0.3, -0.2);
    println!("f          = {f}");
    println!("f'         = {}", f.differentiate());
    println!("f(z+1)     = {}", f.shift(1.0));
    println!("f({z})   = {:?}", f.eval_finite(z));
    println!("Δf({z})  = {:?}", delta(&f).eval_finite(z));
    println!("Δ²f({z}) = {:?}", delta2(&f).eval_finite(z));

    let s = parse("sin(pi/3*z)")?;
    let c = parse("cos(pi/3*z)")?;
    let h = casoratian(&s, &c);
    println!("C(sin, cos)({z}) = {:?}  (-sin(pi/3) = {})", h.eval_finite(z), -(std::f64::consts::PI / 3.0).sin());
    Ok(())
}
