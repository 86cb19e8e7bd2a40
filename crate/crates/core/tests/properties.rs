use dn_core::catalog;
use dn_core::diffops::{casoratian, delta, delta2};
use dn_core::equations::TOL_RESIDUAL;
use dn_core::expr::{parse, Bindings, Expr};
use dn_core::meromorphic::{poles_in_disk, Rect};
use dn_core::nevanlinna::{characteristic_t, counting};
use dn_core::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Pole-free expression trees of bounded depth.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::var()),
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Expr::constant(c(re, im))),
        (-3.0..3.0f64).prop_map(Expr::real),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), 0..4i32).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| Expr::mul(Expr::real(0.3), a).exp()),
            // Denominators stay away from zero near the origin.
            inner.prop_map(|a| Expr::div(a, Expr::add(Expr::real(4.0), Expr::mul(Expr::var(), Expr::var())))),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = Complex64> {
    (-0.8..0.8f64, -0.8..0.8f64).prop_map(|(x, y)| c(x, y))
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in arb_expr(), z in arb_point()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        if let (Some(a), Some(b)) = (e.eval_finite(z), back.eval_finite(z)) {
            prop_assert!(close(a, b, 1e-12), "{text}: {a} vs {b}");
        }
    }

    #[test]
    fn shifts_compose(e in arb_expr(), s in -1.5..1.5f64, t in -1.5..1.5f64, z in arb_point()) {
        let lhs = e.shift(s).shift(t).eval_finite(z);
        let rhs = e.shift(s + t).eval_finite(z);
        if let (Some(a), Some(b)) = (lhs, rhs) {
            prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn second_difference_is_iterated_difference(e in arb_expr(), z in arb_point()) {
        if let (Some(a), Some(b)) = (delta2(&e).eval_finite(z), delta(&delta(&e)).eval_finite(z)) {
            prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn casoratian_is_antisymmetric(f in arb_expr(), g in arb_expr(), z in arb_point()) {
        let fg = casoratian(&f, &g).eval_finite(z);
        let gf = casoratian(&g, &f).eval_finite(z);
        if let (Some(a), Some(b)) = (fg, gf) {
            prop_assert!(close(a, -b, 1e-12), "{a} vs {b}");
        }
        if let Some(v) = casoratian(&f, &f).eval_finite(z) {
            prop_assert!(v.norm() <= 1e-12 * (1.0 + f.eval_finite(z).map_or(0.0, |x| x.norm()).powi(2)));
        }
    }
}

fn f_b(b: &str) -> dn_core::meromorphic::MeromorphicFunction {
    catalog::get_with_text("ex2_2", &[("b".into(), b.into())]).unwrap().solutions[0].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pole_counts_grow_with_radius(r in 0.3..15.0f64, dr in 0.0..5.0f64) {
        let f = f_b("1");
        prop_assert!(poles_in_disk(&f, r).len() <= poles_in_disk(&f, r + dr).len());
    }

    #[test]
    fn counting_and_characteristic_grow_with_radius(k in 1u32..15, u in 0.2..0.8f64, steps in 1u32..6) {
        // Radii avoid the integer poles of f_b.
        let f = f_b("0.5+0.5*i");
        let r1 = k as f64 + u;
        let r2 = r1 + steps as f64;
        let (n1, n2) = (counting(&f, r1).unwrap(), counting(&f, r2).unwrap());
        prop_assert!(n1.big_n <= n2.big_n && n1.n <= n2.n);
        let (t1, t2) = (characteristic_t(&f, r1, 1024).unwrap(), characteristic_t(&f, r2, 1024).unwrap());
        prop_assert!(t1.t <= t2.t + t1.quad_error + t2.quad_error, "{} > {}", t1.t, t2.t);
    }
}

fn max_residual(entry: &catalog::CatalogEntry) -> f64 {
    (0..entry.solutions.len())
        .map(|k| entry.residual_report(k, &Rect::square(3.0), 200, None).unwrap().max_relative)
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn sin_cos_entry_holds_for_other_frequencies(a in 0.2..2.9f64) {
        let e = catalog::get_with_text("ex2_1", &[("a".into(), a.to_string())]).unwrap();
        prop_assert!(max_residual(&e) <= TOL_RESIDUAL);
    }

    #[test]
    fn f_b_entry_holds_for_complex_b(re in -2.0..2.0f64, im in 0.1..2.0f64) {
        let b = format!("{re}+{im}*i");
        let b2 = format!("{}-{im}*i", re / 2.0);
        let e = catalog::get_with_text("ex2_2", &[("b".into(), b), ("b2".into(), b2)]).unwrap();
        prop_assert!(max_residual(&e) <= TOL_RESIDUAL);
    }

    #[test]
    fn periodic_beta_entry_holds(c0 in 0.5..1.5f64, c1 in 0.1..0.4f64) {
        let beta = format!("{c0} + {c1}*exp(2*pi*i*z)");
        let e = catalog::get_with_text("ex2_3", &[("beta".into(), beta)]).unwrap();
        prop_assert!(max_residual(&e) <= TOL_RESIDUAL);
    }

    #[test]
    fn h_q_entry_holds_for_affine_h(alpha in 0.5..2.0f64, gamma in 0.1..1.0f64, m in 1u32..3) {
        let h = format!("{alpha}*z + {gamma}");
        let q = format!("exp(2*pi*i*{m}*z)");
        let e = catalog::get_with_text("ex5_1", &[("h".into(), h), ("Q".into(), q)]).unwrap();
        prop_assert!(max_residual(&e) <= TOL_RESIDUAL);
    }
}

#[test]
fn catalog_entries_build_with_defaults() {
    for info in catalog::list() {
        let e = catalog::get(info.id, &Bindings::new()).unwrap();
        assert!(!e.solutions.is_empty(), "{}", info.id);
    }
}
