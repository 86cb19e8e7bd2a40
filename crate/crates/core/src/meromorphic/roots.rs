//! Closed-form root families used to declare ledgers analytically: the
//! Lambert W function on every branch, roots of `αz + γ = c·e^{λz}`, and
//! roots of small complex polynomials.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Branch `k` of the Lambert W function: the solution `w` of `w·e^w = x`
/// with the standard branch numbering.
pub fn lambert_w(k: i64, x: Complex64) -> Complex64 {
    if x == ZERO {
        return if k == 0 {
            ZERO
        } else {
            Complex64::new(f64::NEG_INFINITY, 0.0)
        };
    }
    let mut w = initial_guess(k, x);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + ONE;
        // Halley step for w e^w - x.
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        w -= step;
        if step.norm() <= 1e-15 * (1.0 + w.norm()) {
            break;
        }
    }
    w
}

fn initial_guess(k: i64, x: Complex64) -> Complex64 {
    let branch_dist = (x + 1.0 / E).norm();
    let series = |p: Complex64| -ONE + p - p * p / 3.0 + p * p * p * (11.0 / 72.0);
    let p = (2.0 * (E * x + 1.0)).sqrt();
    if branch_dist < 0.25 {
        match k {
            0 => return series(p),
            -1 if x.im >= 0.0 => return series(-p),
            1 if x.im < 0.0 => return series(-p),
            _ => {}
        }
    }
    if k == 0 {
        if x.norm() < 0.5 {
            return x * (ONE - x);
        }
        if x.norm() < 3.0 {
            let one_plus = ONE + x;
            return if one_plus.norm() < 0.1 { series(p) } else { one_plus.ln() };
        }
    }
    let l1 = x.ln() + Complex64::new(0.0, 2.0 * PI * k as f64);
    let l2 = l1.ln();
    l1 - l2 + l2 / l1
}

/// Roots of `α·z + γ = c·e^{λz}` with `|z| ≤ radius`, each listed once per
/// multiplicity (a double root appears twice).
///
/// With `u = αz + γ` and `μ = λ/α` the equation becomes `u·e^{−μu} = c'`,
/// whose solutions are `u = −W_k(−μc')/μ` over all branches `k`.
pub fn linear_exp_roots(
    alpha: Complex64,
    gamma: Complex64,
    c: Complex64,
    lambda: Complex64,
    radius: f64,
) -> Vec<Complex64> {
    if alpha == ZERO {
        return Vec::new();
    }
    if c == ZERO {
        let z = -gamma / alpha;
        return if z.norm() <= radius { vec![z] } else { Vec::new() };
    }
    if lambda == ZERO {
        let z = (c - gamma) / alpha;
        return if z.norm() <= radius { vec![z] } else { Vec::new() };
    }
    let mu = lambda / alpha;
    let c_prime = c * (-lambda * gamma / alpha).exp();
    let x = -mu * c_prime;
    let w_bound = mu.norm() * (alpha.norm() * radius + gamma.norm()) + x.norm().ln().abs() + 1.0;
    let kmax = (w_bound / (2.0 * PI)).ceil() as i64 + 2;
    let mut roots: Vec<Complex64> = Vec::new();
    for k in -kmax..=kmax {
        let w = lambert_w(k, x);
        let u = -w / mu;
        let z = (u - gamma) / alpha;
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > radius {
            continue;
        }
        // Two branches meeting at the branch point give the same double root;
        // any other coincidence is a duplicate from a misrouted branch guess.
        let double_root = (w + ONE).norm() < 1e-6;
        if roots.iter().any(|r| (r - z).norm() < 1e-9 * (1.0 + z.norm())) && !double_root {
            continue;
        }
        roots.push(z);
    }
    roots
}

/// Roots of `Σ coeffs[j]·u^j` with multiplicities. Leading zero coefficients
/// are ignored.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<(Complex64, u32)> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last() == Some(&ZERO) {
        c.pop();
    }
    let mut zero_mult = 0u32;
    while c.len() > 1 && c[0] == ZERO {
        c.remove(0);
        zero_mult += 1;
    }
    let mut out = Vec::new();
    if zero_mult > 0 {
        out.push((ZERO, zero_mult));
    }
    let deg = c.len().saturating_sub(1);
    match deg {
        0 => {}
        1 => out.push((-c[0] / c[1], 1)),
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc.norm() <= 1e-14 * (b * b).norm().max((a * cc).norm()) {
                out.push((-b / (2.0 * a), 2));
            } else {
                let sq = disc.sqrt();
                // Pick the sign that avoids cancellation.
                let q = if (b.conj() * sq).re >= 0.0 {
                    -(b + sq) / 2.0
                } else {
                    -(b - sq) / 2.0
                };
                out.push((q / a, 1));
                out.push((cc / q, 1));
            }
        }
        _ => out.extend(cluster(aberth(&c))),
    }
    out
}

fn horner(c: &[Complex64], u: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in c.iter().rev() {
        dp = dp * u + p;
        p = p * u + a;
    }
    (p, dp)
}

fn aberth(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let lead = c[n];
    let bound = 1.0 + c[..n].iter().map(|a| (a / lead).norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(0.5 * bound, 2.0 * PI * (j as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for j in 0..n {
            let (p, dp) = horner(c, z[j]);
            if p == ZERO {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&m| m != j)
                .map(|m| ONE / (z[j] - z[m]))
                .sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[j] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[j].norm()));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    z
}

fn cluster(roots: Vec<Complex64>) -> Vec<(Complex64, u32)> {
    let mut groups: Vec<(Complex64, u32)> = Vec::new();
    for r in roots {
        if let Some(g) = groups
            .iter_mut()
            .find(|(c, _)| (c - r).norm() < 1e-6 * (1.0 + r.norm()))
        {
            let m = g.1 as f64;
            g.0 = (g.0 * m + r) / (m + 1.0);
            g.1 += 1;
        } else {
            groups.push((r, 1));
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn principal_branch_known_values() {
        let omega = lambert_w(0, ONE);
        assert!((omega - c(0.567_143_290_409_783_8, 0.0)).norm() < 1e-15);
        let w = lambert_w(0, c(-1.0 / E, 0.0));
        assert!((w + ONE).norm() < 1e-7);
        let w = lambert_w(-1, c(-0.2, 0.0));
        assert!((w - c(-2.542_641_357_773_526_4, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn every_branch_solves_the_defining_equation() {
        for x in [c(-2.0 * PI, 0.0), c(0.0, -2.0 * PI), c(0.0, 10.0 * PI), c(3.0, -0.5), c(-0.3, 0.01)] {
            for k in -12..=12 {
                let w = lambert_w(k, x);
                assert!((w * w.exp() - x).norm() < 1e-11 * x.norm(), "k={k} x={x}");
            }
            let mut ws: Vec<Complex64> = (-12..=12).map(|k| lambert_w(k, x)).collect();
            ws.sort_by(|a, b| a.im.total_cmp(&b.im));
            for pair in ws.windows(2) {
                assert!((pair[0] - pair[1]).norm() > 1e-6, "branches coincide for x={x}");
            }
        }
    }

    #[test]
    fn linear_exp_roots_solve_and_are_complete() {
        // z = e^{2πiz}: α = 1, γ = 0, c = 1, λ = 2πi.
        let lambda = c(0.0, 2.0 * PI);
        let roots = linear_exp_roots(ONE, ZERO, ONE, lambda, 6.0);
        for z in &roots {
            assert!((z - (lambda * z).exp()).norm() < 1e-10 * (1.0 + z.norm()));
        }
        // Argument-principle style count by brute force: winding of g(z) = z − e^{2πiz}
        // around |z| = 6 using a fine trapezoid.
        let n = 200_000;
        let mut total = ZERO;
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            let z = Complex64::from_polar(6.0, th);
            let g = z - (lambda * z).exp();
            let dg = ONE - lambda * (lambda * z).exp();
            total += dg / g * Complex64::i() * z * (2.0 * PI / n as f64);
        }
        let winding = (total / Complex64::new(0.0, 2.0 * PI)).re.round() as usize;
        assert_eq!(roots.len(), winding);
    }

    #[test]
    fn polynomial_roots_with_multiplicity() {
        // (u - 1)(u + 2)(u - i) = u^3 + (1 - i)u^2 + (-2 - i)u + 2i
        let coeffs = [c(0.0, 2.0), c(-2.0, -1.0), c(1.0, -1.0), ONE];
        let roots = poly_roots(&coeffs);
        assert_eq!(roots.len(), 3);
        for want in [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)] {
            assert!(roots.iter().any(|(r, m)| *m == 1 && (r - want).norm() < 1e-12));
        }
        // u^2 - 4iu - 4 = (u - 2i)^2
        let double = poly_roots(&[c(-4.0, 0.0), c(0.0, -4.0), ONE]);
        assert_eq!(double, vec![(c(0.0, 2.0), 2)]);
        // u (u - 3)
        let with_zero = poly_roots(&[ZERO, c(-3.0, 0.0), ONE]);
        assert!(with_zero.contains(&(ZERO, 1)));
        assert!(with_zero.contains(&(c(3.0, 0.0), 1)));
    }
}
