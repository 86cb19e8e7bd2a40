//! Nevanlinna characteristic of the sin/cos pair and of f_b, with an SVG of T(r).
use dn_core::catalog;
use dn_core::expr::{parse, Bindings};
use dn_core::meromorphic::{MeromorphicFunction, SingularityLedger};
use dn_core::nevanlinna::{characteristic_t, counting, fit_line, growth_ratio, proximity_m, radii, DEFAULT_NODES};
use dn_core::report::{AxisScale, Plot, Series};

fn main() -> dn_core::Result<()> {
    let e = MeromorphicFunction::new("exp(z)", parse("exp(z)")?, SingularityLedger::new());
    let (m, err) = proximity_m(&e, 20.0, DEFAULT_NODES)?;
    println!("m(20, e^z) = {m:.6} (r/pi = {:.6}, quadrature error {err:.1e})", 20.0 / std::f64::consts::PI);

    let pair = catalog::get("ex2_1", &Bindings::new())?;
    let rs = radii(5.0, 50.0, 10);
    let g = growth_ratio(&pair.solutions[0], &pair.solutions[1], &rs, DEFAULT_NODES)?;
    for row in &g.rows {
        println!("r = {:5.1}  T1 = {:9.4}  T2 = {:9.4}  ratio {:.5}", row.r, row.t1, row.t2, row.ratio);
    }

    let f_b = catalog::get("ex2_2", &Bindings::new())?.solutions[0].clone();
    let rs: Vec<f64> = (0..9).map(|k| 20.5 + 10.0 * k as f64).collect();
    let ns = rs.iter().map(|&r| counting(&f_b, r).map(|c| c.big_n)).collect::<dn_core::Result<Vec<_>>>()?;
    if let Some((slope, _)) = fit_line(&rs, &ns) {
        println!("N(r, f_b) grows with slope {slope:.3} in r");
    }

    let curve = rs
        .iter()
        .map(|&r| characteristic_t(&f_b, r, DEFAULT_NODES).map(|c| (r, c.t)))
        .collect::<dn_core::Result<Vec<_>>>()?;
    let plot = Plot {
        title: "T(r, f_b)".into(),
        x_label: "r".into(),
        y_label: "T".into(),
        x_scale: AxisScale::Linear,
        y_scale: AxisScale::Linear,
        series: vec![Series { label: "f_b".into(), points: curve }],
    };
    let path = std::env::temp_dir().join("dn_t_f_b.svg");
    std::fs::write(&path, plot.to_svg())?;
    println!("wrote {}", path.display());
    Ok(())
}
