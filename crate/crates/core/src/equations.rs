//! Residuals and identity defects for `(Δf)² = A·(f(z)f(z+1) − B)` and the
//! relations derived from it.
//!
//! Every check returns a [`Residual`]: the raw complex defect together with
//! the scale `1 + max |term|` over the individual terms of the identity, so
//! that near poles the relative size is what gets compared to tolerances.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffops::{periodicity_defect, GRID_GUARD};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Bindings, Expr};
use crate::grid::{regular_points, Avoid, GUARD};
use crate::meromorphic::{LedgerEntry, LedgerStatus, MeromorphicFunction, Rect, SingularityLedger};

/// Tolerance for simple residuals.
pub const TOL_RESIDUAL: f64 = 1e-9;
/// Tolerance for the quartic relation and the quadratic in `Δg`.
pub const TOL_RELATION: f64 = 1e-8;
/// Tolerance for the discriminant identity.
pub const TOL_DISCRIMINANT: f64 = 1e-7;
/// Denominators below this fraction of their scale count as zero.
pub const TOL_DEGENERATE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `(Δf)² = A(f f(z+1) − B)`
    Main,
    /// `(Δf)² − AfΔf − Af² + AB = 0`
    Expanded,
    /// `Δ²f − AΔf − Af = 0`
    Linear,
    /// `(w′)² = A(w² − B)`
    Ode,
}

#[derive(Debug, Clone)]
pub struct DifferenceEquation {
    pub a: MeromorphicFunction,
    pub b: MeromorphicFunction,
    pub form: Form,
}

impl DifferenceEquation {
    /// Builds the equation, rejecting `A ≡ 0` on a probe grid.
    pub fn new(a: MeromorphicFunction, b: MeromorphicFunction, form: Form) -> Result<Self> {
        let probe = regular_points(&Rect::square(3.0), 24, &[Avoid::poles(&a.ledger, 0.0)], GUARD, None)?;
        let nonzero = probe
            .iter()
            .filter_map(|&z| a.eval(z))
            .any(|v| v.norm() > 1e-14);
        if !nonzero {
            return Err(Error::ZeroCoefficient);
        }
        Ok(DifferenceEquation { a, b, form })
    }

    /// Constant-coefficient equation.
    pub fn constant(a: Complex64, b: Complex64, form: Form) -> Result<Self> {
        DifferenceEquation::new(
            MeromorphicFunction::constant("A", a),
            MeromorphicFunction::constant("B", b),
            form,
        )
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.a.expr.is_constant() && self.b.expr.is_constant()
    }

    /// The equation's own residual for `f` at `z`, dispatched on the form.
    pub fn residual(&self, f: &MeromorphicFunction, z: Complex64) -> Result<Residual> {
        match self.form {
            Form::Main => residual_main(self, f, z),
            Form::Expanded => residual_expanded(self, f, z),
            Form::Linear => residual_linear(&self.a, f, z),
            Form::Ode => residual_ode(&self.a, &self.b, &f.expr, z),
        }
    }

    /// Poles of A and B seen from `z` and `z+1`, for grid construction.
    pub fn avoid(&self) -> Vec<Avoid<'_>> {
        vec![
            Avoid::poles(&self.a.ledger, 0.0),
            Avoid::poles(&self.b.ledger, 0.0),
        ]
    }
}

/// A defect with the magnitude of the largest term in its identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: Complex64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(value: Complex64, terms: &[Complex64]) -> Residual {
        let big = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        Residual {
            value,
            scale: 1.0 + big,
        }
    }

    pub fn relative(&self) -> f64 {
        self.value.norm() / self.scale
    }
}

/// Residuals of one check over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub label: String,
    pub grid: Vec<Complex64>,
    pub residuals: Vec<Complex64>,
    pub scales: Vec<f64>,
    pub max_relative: f64,
}

impl ResidualReport {
    pub fn build(
        label: impl Into<String>,
        grid: &[Complex64],
        mut check: impl FnMut(Complex64) -> Result<Residual>,
    ) -> Result<ResidualReport> {
        let mut residuals = Vec::with_capacity(grid.len());
        let mut scales = Vec::with_capacity(grid.len());
        let mut max_relative: f64 = 0.0;
        for &z in grid {
            let r = check(z)?;
            max_relative = max_relative.max(r.relative());
            residuals.push(r.value);
            scales.push(r.scale);
        }
        Ok(ResidualReport {
            label: label.into(),
            grid: grid.to_vec(),
            residuals,
            scales,
            max_relative,
        })
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative <= tol
    }
}

/// Evaluates `f(z + shift)` after checking the guard against declared poles.
pub fn value_at(f: &MeromorphicFunction, z: Complex64, shift: f64) -> Result<Complex64> {
    let p = z + shift;
    if let Some((s, _)) = f.ledger.nearest(p, GRID_GUARD, false) {
        return Err(Error::SingularPoint {
            point: z,
            singularity: s.location,
            guard: GRID_GUARD,
        });
    }
    f.eval(p).ok_or(Error::DomainError(p))
}

fn expr_at(e: &Expr, z: Complex64) -> Result<Complex64> {
    e.eval_finite(z).ok_or(Error::DomainError(z))
}

/// `(Δf)² − A(f·f(z+1) − B)`.
pub fn residual_main(eq: &DifferenceEquation, f: &MeromorphicFunction, z: Complex64) -> Result<Residual> {
    let a = value_at(&eq.a, z, 0.0)?;
    let b = value_at(&eq.b, z, 0.0)?;
    let f0 = value_at(f, z, 0.0)?;
    let f1 = value_at(f, z, 1.0)?;
    let d = f1 - f0;
    let t = [d * d, a * f0 * f1, a * b];
    Ok(Residual::from_terms(t[0] - t[1] + t[2], &t))
}

/// `(Δf)² − AfΔf − Af² + AB`.
pub fn residual_expanded(eq: &DifferenceEquation, f: &MeromorphicFunction, z: Complex64) -> Result<Residual> {
    let a = value_at(&eq.a, z, 0.0)?;
    let b = value_at(&eq.b, z, 0.0)?;
    let f0 = value_at(f, z, 0.0)?;
    let f1 = value_at(f, z, 1.0)?;
    let d = f1 - f0;
    let t = [d * d, a * f0 * d, a * f0 * f0, a * b];
    Ok(Residual::from_terms(t[0] - t[1] - t[2] + t[3], &t))
}

/// A polynomial in `g` whose coefficients are meromorphic functions of `z`,
/// lowest degree first.
#[derive(Debug, Clone, Default)]
pub struct GPolynomial(pub Vec<MeromorphicFunction>);

impl GPolynomial {
    pub fn eval(&self, z: Complex64, g: Complex64) -> Result<Complex64> {
        let mut acc = ZERO;
        for c in self.0.iter().rev() {
            acc = acc * g + value_at(c, z, 0.0)?;
        }
        Ok(acc)
    }
}

/// `(Δg)² + P(z, g)Δg + Q(z, g)`.
pub fn residual_first_order(
    p: &GPolynomial,
    q: &GPolynomial,
    g: &MeromorphicFunction,
    z: Complex64,
) -> Result<Residual> {
    let g0 = value_at(g, z, 0.0)?;
    let g1 = value_at(g, z, 1.0)?;
    let d = g1 - g0;
    let t = [d * d, p.eval(z, g0)? * d, q.eval(z, g0)?];
    Ok(Residual::from_terms(t[0] + t[1] + t[2], &t))
}

/// `Δ²f − AΔf − Af`.
pub fn residual_linear(a: &MeromorphicFunction, f: &MeromorphicFunction, z: Complex64) -> Result<Residual> {
    let av = value_at(a, z, 0.0)?;
    let f0 = value_at(f, z, 0.0)?;
    let f1 = value_at(f, z, 1.0)?;
    let f2 = value_at(f, z, 2.0)?;
    let t = [f2 - 2.0 * f1 + f0, av * (f1 - f0), av * f0];
    Ok(Residual::from_terms(t[0] - t[1] - t[2], &t))
}

/// Predicted `f(z+2)` from `f(z)`, `f(z+1)` on the non-2-periodic branch.
pub fn forward_step(b: &MeromorphicFunction, f0: Complex64, f1: Complex64, z: Complex64) -> Result<Complex64> {
    let bv = value_at(b, z, 0.0)?;
    let den = f0 * f1 - bv;
    let scale = 1.0 + (f0 * f1).norm().max(bv.norm());
    if den.norm() <= TOL_DEGENERATE * scale {
        return Err(Error::DegenerateDenominator {
            point: z,
            value: den.norm(),
            scale,
        });
    }
    Ok((f1 * f1 * f1 - (2.0 * f1 - f0) * bv) / den)
}

/// Which branch of the period-2 dichotomy a solution follows on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dichotomy {
    /// Max relative residual of the linear second-order equation.
    pub linear_defect: f64,
    /// Relative 2-periodicity defect.
    pub period2_defect: f64,
    pub satisfies_linear: bool,
    pub period_two: bool,
}

impl Dichotomy {
    pub fn neither(&self) -> bool {
        !self.satisfies_linear && !self.period_two
    }
}

/// Classifies `f` as satisfying the linear equation, being 2-periodic, both,
/// or neither, on the given grid.
pub fn classify_period_two(
    eq: &DifferenceEquation,
    f: &MeromorphicFunction,
    grid: &[Complex64],
) -> Result<Dichotomy> {
    let linear = ResidualReport::build("linear", grid, |z| residual_linear(&eq.a, f, z))?;
    let period = periodicity_defect(&f.expr, Complex64::new(2.0, 0.0), grid)?;
    Ok(Dichotomy {
        linear_defect: linear.max_relative,
        period2_defect: period.relative(),
        satisfies_linear: linear.max_relative <= TOL_RESIDUAL,
        period_two: period.relative() <= TOL_RESIDUAL,
    })
}

/// Defect of the quartic relation between two solutions and their
/// Casoratian `H`:
/// `A((A+4)f1²f2² − 2B(f1²+f2²))H² − (AB(f1²−f2²))² − H⁴`.
pub fn relation_quartic_defect(
    eq: &DifferenceEquation,
    f1: &MeromorphicFunction,
    f2: &MeromorphicFunction,
    h: &Expr,
    z: Complex64,
) -> Result<Residual> {
    let a = value_at(&eq.a, z, 0.0)?;
    let b = value_at(&eq.b, z, 0.0)?;
    let u = value_at(f1, z, 0.0)?;
    let v = value_at(f2, z, 0.0)?;
    let hv = expr_at(h, z)?;
    let (u2, v2, h2) = (u * u, v * v, hv * hv);
    let ab = a * b * (u2 - v2);
    let t = [
        a * (a + 4.0) * u2 * v2 * h2,
        2.0 * a * b * (u2 + v2) * h2,
        ab * ab,
        h2 * h2,
    ];
    Ok(Residual::from_terms(t[0] - t[1] - t[2] - t[3], &t))
}

/// `f1² + f2² − 1`, the reduced form of the quartic relation for the
/// trigonometric pair.
pub fn unit_circle_defect(f1: &MeromorphicFunction, f2: &MeromorphicFunction, z: Complex64) -> Result<Residual> {
    let u = value_at(f1, z, 0.0)?;
    let v = value_at(f2, z, 0.0)?;
    let t = [u * u, v * v, ONE];
    Ok(Residual::from_terms(t[0] + t[1] - t[2], &t))
}

/// The intermediate `Ξ = AHf1f2 − AB(f1²−f2²) + H²` together with the
/// defects of `Ξ = 2f1HΔf2` and `Ξ² = 4f1²H²A(f2Δf2 + f2² − B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiDefects {
    pub xi: Complex64,
    pub linear: Residual,
    pub squared: Residual,
}

pub fn xi_defect(
    eq: &DifferenceEquation,
    f1: &MeromorphicFunction,
    f2: &MeromorphicFunction,
    h: &Expr,
    z: Complex64,
) -> Result<XiDefects> {
    let a = value_at(&eq.a, z, 0.0)?;
    let b = value_at(&eq.b, z, 0.0)?;
    let u = value_at(f1, z, 0.0)?;
    let v = value_at(f2, z, 0.0)?;
    let v1 = value_at(f2, z, 1.0)?;
    let hv = expr_at(h, z)?;
    let dv = v1 - v;
    let xi_terms = [a * hv * u * v, a * b * (u * u - v * v), hv * hv];
    let xi = xi_terms[0] - xi_terms[1] + xi_terms[2];
    let rhs = 2.0 * u * hv * dv;
    let mut lin_terms = xi_terms.to_vec();
    lin_terms.push(rhs);
    let linear = Residual::from_terms(xi - rhs, &lin_terms);
    let inner = [v * dv, v * v, b];
    let k = 4.0 * u * u * hv * hv * a;
    let sq_terms = [xi * xi, k * inner[0], k * inner[1], k * inner[2]];
    let squared = Residual::from_terms(
        xi * xi - k * (inner[0] + inner[1] - inner[2]),
        &sq_terms,
    );
    Ok(XiDefects { xi, linear, squared })
}

/// `w1² + 2c·w1w2 + w2² − (1 − c²)`.
pub fn relation_a_defect(w1: &Expr, w2: &Expr, c: Complex64, t: Complex64) -> Result<Residual> {
    let u = expr_at(w1, t)?;
    let v = expr_at(w2, t)?;
    let terms = [u * u, 2.0 * c * u * v, v * v, ONE - c * c];
    Ok(Residual::from_terms(terms[0] + terms[1] + terms[2] - terms[3], &terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationFit {
    pub c: Complex64,
    /// Max relative defect after the fit.
    pub max_defect: f64,
}

/// Recovers the constant `c` of the relation `w1² + 2c·w1w2 + w2² = 1 − c²`
/// by least squares over the sample.
pub fn fit_relation_constant(w1: &Expr, w2: &Expr, sample: &[Complex64]) -> Result<RelationFit> {
    if sample.len() < 3 {
        return Err(Error::DegenerateSample("need at least 3 sample points".into()));
    }
    // Per point the defect is a + b·c + c² with a = w1² + w2² − 1, b = 2w1w2.
    let mut ab = Vec::with_capacity(sample.len());
    for &t in sample {
        let u = expr_at(w1, t)?;
        let v = expr_at(w2, t)?;
        ab.push((u * u + v * v - ONE, 2.0 * u * v, 1.0 + (u * u).norm().max((v * v).norm())));
    }
    let b0 = ab[0].1;
    if ab.iter().all(|(_, b, s)| (b - b0).norm() <= 1e-12 * s) {
        return Err(Error::DegenerateSample("w1·w2 is constant on the sample".into()));
    }
    let cost = |c: Complex64| -> f64 { ab.iter().map(|(a, b, _)| (a + b * c + c * c).norm_sqr()).sum() };
    let refine = |mut c: Complex64| -> Complex64 {
        for _ in 0..50 {
            let mut num = ZERO;
            let mut den = 0.0;
            for (a, b, _) in &ab {
                let r = a + b * c + c * c;
                let j = b + 2.0 * c;
                num += j.conj() * r;
                den += j.norm_sqr();
            }
            if den == 0.0 {
                break;
            }
            let step = num / den;
            let next = c - step;
            if cost(next) > cost(c) {
                break;
            }
            c = next;
            if step.norm() < 1e-16 * (1.0 + c.norm()) {
                break;
            }
        }
        c
    };
    // Start from the linear least-squares guess and from each pointwise
    // root pair; keep the best refinement.
    let (mut num, mut den) = (ZERO, 0.0);
    for (a, b, _) in &ab {
        num += b.conj() * a;
        den += b.norm_sqr();
    }
    let mut starts = vec![-num / den];
    for (a, b, _) in ab.iter().take(8) {
        let disc = (b * b - 4.0 * a).sqrt();
        starts.push((-b + disc) / 2.0);
        starts.push((-b - disc) / 2.0);
    }
    let best = starts
        .into_iter()
        .map(refine)
        .min_by(|x, y| cost(*x).total_cmp(&cost(*y)))
        .expect("at least one start");
    let mut max_defect: f64 = 0.0;
    for &t in sample {
        max_defect = max_defect.max(relation_a_defect(w1, w2, best, t)?.relative());
    }
    if max_defect > 1e-6 {
        return Err(Error::NoConsistentConstant { best, max_defect });
    }
    Ok(RelationFit { c: best, max_defect })
}

/// `(w′)² − Ã(w² − B̃)` with the symbolic derivative.
pub fn residual_ode(a: &MeromorphicFunction, b: &MeromorphicFunction, w: &Expr, t: Complex64) -> Result<Residual> {
    let av = value_at(a, t, 0.0)?;
    let bv = value_at(b, t, 0.0)?;
    let wv = expr_at(w, t)?;
    let dw = expr_at(&w.differentiate(), t)?;
    let terms = [dw * dw, av * wv * wv, av * bv];
    Ok(Residual::from_terms(terms[0] - terms[1] + terms[2], &terms))
}

/// `G(f) = (A+4)f² − 4B` at `z`.
pub fn g_of(eq: &DifferenceEquation, f: &MeromorphicFunction, z: Complex64) -> Result<Complex64> {
    let a = value_at(&eq.a, z, 0.0)?;
    let b = value_at(&eq.b, z, 0.0)?;
    let fv = value_at(f, z, 0.0)?;
    Ok((a + 4.0) * fv * fv - 4.0 * b)
}

/// `G(f)` as an expression; constant coefficients and a constant result fold.
pub fn g_expr(eq: &DifferenceEquation, f: &Expr) -> Expr {
    Expr::sub(
        Expr::mul(Expr::add(eq.a.expr.clone(), Expr::real(4.0)), f.powi(2)),
        Expr::mul(Expr::real(4.0), eq.b.expr.clone()),
    )
}

/// `(f − a)/(f + a)` from values.
pub fn g_transform_values(f: Complex64, a: Complex64, z: Complex64) -> Result<Complex64> {
    let den = f + a;
    let scale = 1.0 + f.norm().max(a.norm());
    if den.norm() <= TOL_DEGENERATE * scale {
        return Err(Error::DegenerateDenominator {
            point: z,
            value: den.norm(),
            scale,
        });
    }
    Ok((f - a) / den)
}

/// `g(z) = (f(z) − a(z))/(f(z) + a(z))`.
pub fn g_transform(f: &MeromorphicFunction, a: &MeromorphicFunction, z: Complex64) -> Result<Complex64> {
    g_transform_values(value_at(f, z, 0.0)?, value_at(a, z, 0.0)?, z)
}

/// Inverse of [`g_transform`]: `f = −a(g+1)/(g−1)`.
pub fn g_inverse(g: Complex64, a: Complex64) -> Complex64 {
    -a * (g + 1.0) / (g - 1.0)
}

/// Coefficients `(C0, C1, C2)` of the quadratic in `Δg` satisfied by
/// `g = (f − a)/(f + a)` when `f` and `a` solve the same equation.
pub fn quadratic_coeffs(
    eq: &DifferenceEquation,
    a: &MeromorphicFunction,
    g: Complex64,
    z: Complex64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let av = value_at(&eq.a, z, 0.0)?;
    let bv = value_at(&eq.b, z, 0.0)?;
    let a0 = value_at(a, z, 0.0)?;
    let da = value_at(a, z, 1.0)? - a0;
    let c0 = 4.0 * av * bv * (g - 1.0) * (g - 1.0) * g;
    let c1 = 2.0
        * (g - 1.0)
        * (2.0 * av * bv * (g - 1.0) + a0 * a0 * av * (g + 1.0) + da * (av + 2.0) * a0 * (g + 1.0));
    let c2 = 2.0 * a0 * (a0 * av + da * (av + 2.0)) * g - 2.0 * a0 * (2.0 * a0 + a0 * av + da * (av + 2.0));
    Ok((c0, c1, c2))
}

/// `C2(Δg)² + C1Δg + C0` for `g` built from the solutions `f` and `a`.
pub fn quadratic_residual(
    eq: &DifferenceEquation,
    a: &MeromorphicFunction,
    f: &MeromorphicFunction,
    z: Complex64,
) -> Result<Residual> {
    let g0 = g_transform_values(value_at(f, z, 0.0)?, value_at(a, z, 0.0)?, z)?;
    let g1 = g_transform_values(value_at(f, z, 1.0)?, value_at(a, z, 1.0)?, z)?;
    let dg = g1 - g0;
    let (c0, c1, c2) = quadratic_coeffs(eq, a, g0, z)?;
    let t = [c2 * dg * dg, c1 * dg, c0];
    Ok(Residual::from_terms(t[0] + t[1] + t[2], &t))
}

/// `(C1² − 4C0C2) − 64a⁴a(z+1)²A·G(f)/(f + a)⁴`.
pub fn discriminant_identity_defect(
    eq: &DifferenceEquation,
    a: &MeromorphicFunction,
    f: &MeromorphicFunction,
    z: Complex64,
) -> Result<Residual> {
    let fv = value_at(f, z, 0.0)?;
    let a0 = value_at(a, z, 0.0)?;
    let a1 = value_at(a, z, 1.0)?;
    let g = g_transform_values(fv, a0, z)?;
    let (c0, c1, c2) = quadratic_coeffs(eq, a, g, z)?;
    let av = value_at(&eq.a, z, 0.0)?;
    let gf = g_of(eq, f, z)?;
    let s = fv + a0;
    let rhs = 64.0 * a0.powi(4) * a1 * a1 * av * gf / s.powi(4);
    let t = [c1 * c1, 4.0 * c0 * c2, rhs];
    Ok(Residual::from_terms(t[0] - t[1] - t[2], &t))
}

/// `f(κ(z) + z)` for 1-periodic `κ`; a solution again when `A` and `B` are
/// constant. The returned ledger is empty and marked derived.
pub fn periodic_reparam(eq: &DifferenceEquation, f: &MeromorphicFunction, kappa: &Expr) -> Result<MeromorphicFunction> {
    if !eq.has_constant_coefficients() {
        return Err(Error::NonConstantCoefficients);
    }
    let probe = regular_points(&Rect::square(3.0), 100, &[], GUARD, None)?;
    let d = periodicity_defect(kappa, ONE, &probe)?;
    if d.relative() > TOL_RESIDUAL {
        return Err(Error::NonPeriodicKappa(d.relative()));
    }
    let inner = Expr::add(kappa.clone(), Expr::var());
    Ok(MeromorphicFunction {
        expr: f.expr.compose(&inner),
        ledger: SingularityLedger::poles_only(),
        label: format!("{}(z + kappa(z))", f.label),
        status: LedgerStatus::Derived,
    })
}

/// JSON form of a meromorphic function: an expression, optional parameter
/// bindings and an optional ledger.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FunctionFile {
    #[serde(default)]
    pub label: String,
    pub expr: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub ledger: Option<Vec<LedgerEntry>>,
    #[serde(default)]
    pub zeros_declared: Option<bool>,
}

/// JSON form of an equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquationFile {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default = "default_form")]
    pub form: Form,
    #[serde(default, rename = "A_ledger")]
    pub a_ledger: Option<Vec<LedgerEntry>>,
    #[serde(default, rename = "B_ledger")]
    pub b_ledger: Option<Vec<LedgerEntry>>,
}

fn default_form() -> Form {
    Form::Main
}

/// Parses `name = expression` bindings in order, so later ones may refer to
/// earlier ones.
pub fn bind_params(params: &BTreeMap<String, String>, base: &Bindings) -> Result<Bindings> {
    let mut bindings = base.clone();
    let mut pending: Vec<(&String, &String)> = params.iter().collect();
    // Resolve in dependency order by repeated passes.
    while !pending.is_empty() {
        let before = pending.len();
        let mut last_err = None;
        pending.retain(|(name, text)| match parse_with(text, &bindings) {
            Ok(e) => {
                bindings.insert((*name).clone(), e);
                false
            }
            Err(err) => {
                last_err = Some(err);
                true
            }
        });
        if pending.len() == before {
            return Err(last_err.expect("a pending binding failed"));
        }
    }
    Ok(bindings)
}

fn ledger_or_default(entries: &Option<Vec<LedgerEntry>>, zeros_declared: Option<bool>) -> Result<SingularityLedger> {
    match entries {
        Some(e) => SingularityLedger::from_entries(e, zeros_declared.unwrap_or(true)),
        None => Ok(SingularityLedger::poles_only()),
    }
}

impl FunctionFile {
    pub fn build(&self, base: &Bindings) -> Result<MeromorphicFunction> {
        let bindings = bind_params(&self.params, base)?;
        let expr = parse_with(&self.expr, &bindings)?;
        let ledger = ledger_or_default(&self.ledger, self.zeros_declared)?;
        let label = if self.label.is_empty() { self.expr.clone() } else { self.label.clone() };
        Ok(MeromorphicFunction::new(label, expr, ledger))
    }

    pub fn load(path: &Path) -> Result<FunctionFile> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl EquationFile {
    pub fn build(&self) -> Result<(DifferenceEquation, Bindings)> {
        let bindings = bind_params(&self.params, &Bindings::new())?;
        let a = MeromorphicFunction::new("A", parse_with(&self.a, &bindings)?, ledger_or_default(&self.a_ledger, None)?);
        let b = MeromorphicFunction::new("B", parse_with(&self.b, &bindings)?, ledger_or_default(&self.b_ledger, None)?);
        Ok((DifferenceEquation::new(a, b, self.form)?, bindings))
    }

    pub fn load(path: &Path) -> Result<EquationFile> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Kinds of singularity that make a point unusable for `f` and its shifts.
pub fn solution_avoid(f: &MeromorphicFunction, max_shift: u32) -> Vec<Avoid<'_>> {
    (0..=max_shift)
        .map(|s| Avoid {
            ledger: &f.ledger,
            shift: Complex64::new(s as f64, 0.0),
            include_zeros: false,
        })
        .collect()
}

/// Counts declared zeros as singular too, for checks that divide by `f`.
pub fn solution_avoid_with_zeros(f: &MeromorphicFunction, max_shift: u32) -> Vec<Avoid<'_>> {
    let mut v = solution_avoid(f, max_shift);
    for a in &mut v {
        a.include_zeros = true;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::meromorphic::Kind;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn entire(label: &str, text: &str) -> MeromorphicFunction {
        MeromorphicFunction::new(label, parse(text).unwrap(), SingularityLedger::poles_only())
    }

    fn trig_eq(a: f64) -> DifferenceEquation {
        let s = (a / 2.0).sin();
        let co = (a / 2.0).cos();
        DifferenceEquation::constant(c(-4.0 * s * s, 0.0), c(co * co, 0.0), Form::Main).unwrap()
    }

    fn f_b(b: f64) -> MeromorphicFunction {
        let mut bind = Bindings::new();
        bind.insert("b".into(), Expr::real(b));
        let e = parse_with("(1 + b*exp(pi*i*z) - exp(2*pi*i*z))/(exp(2*pi*i*z) - 1)", &bind).unwrap();
        let ledger = SingularityLedger::poles_only()
            .with_lattice(c(0.0, 0.0), c(1.0, 0.0), 1, Kind::Pole)
            .unwrap();
        MeromorphicFunction::new("f_b", e, ledger)
    }

    fn sample() -> Vec<Complex64> {
        (0..50)
            .map(|k| c(-2.9 + 0.113 * k as f64, 0.37 + 0.041 * ((k * 17) % 50) as f64))
            .collect()
    }

    #[test]
    fn main_residual_examples() {
        let a = PI / 3.0;
        let eq = trig_eq(a);
        let f = entire("sin", "sin(pi/3*z)");
        assert!(residual_main(&eq, &f, c(0.7, 0.3)).unwrap().relative() <= 1e-9);

        let eq2 = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        assert!(residual_main(&eq2, &f_b(2.0), c(0.25, 0.0)).unwrap().relative() <= 1e-9);

        let k = MeromorphicFunction::constant("c", c(1.5, -0.5));
        let eq3 = DifferenceEquation::constant(c(2.0, 1.0), c(1.5, -0.5) * c(1.5, -0.5), Form::Main).unwrap();
        assert_eq!(residual_main(&eq3, &k, c(0.1, 0.2)).unwrap().value, ZERO);
    }

    #[test]
    fn expanded_matches_main() {
        let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        let f = f_b(1.0);
        for z in sample() {
            let m = residual_main(&eq, &f, z).unwrap();
            let e = residual_expanded(&eq, &f, z).unwrap();
            assert!((m.value - e.value).norm() <= 1e-10 * m.scale.max(e.scale));
        }
        let zero_eq = DifferenceEquation::constant(ONE, ZERO, Form::Expanded).unwrap();
        let zero = MeromorphicFunction::constant("0", ZERO);
        assert_eq!(residual_expanded(&zero_eq, &zero, c(0.3, 0.0)).unwrap().value, ZERO);
    }

    #[test]
    fn first_order_embedding() {
        let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        let zero = MeromorphicFunction::constant("0", ZERO);
        // P = −A·g, Q = −A·g² + A·B
        let p = GPolynomial(vec![zero.clone(), MeromorphicFunction::constant("-A", c(4.0, 0.0))]);
        let q = GPolynomial(vec![
            MeromorphicFunction::constant("AB", c(-4.0, 0.0)),
            zero.clone(),
            MeromorphicFunction::constant("-A", c(4.0, 0.0)),
        ]);
        let f = f_b(1.0);
        for z in sample() {
            let r = residual_first_order(&p, &q, &f, z).unwrap();
            let e = residual_expanded(&eq, &f, z).unwrap();
            assert!(r.relative() <= 1e-9);
            assert!((r.value - e.value).norm() <= 1e-10 * e.scale);
        }
        let g = MeromorphicFunction::new("z", Expr::var(), SingularityLedger::new());
        let q1 = GPolynomial(vec![MeromorphicFunction::constant("-1", -ONE)]);
        assert_eq!(residual_first_order(&GPolynomial::default(), &q1, &g, c(2.0, 3.0)).unwrap().value, ZERO);
        let k = MeromorphicFunction::constant("c", c(3.0, 0.0));
        let none = GPolynomial::default();
        assert_eq!(residual_first_order(&none, &none, &k, c(2.0, 3.0)).unwrap().value, ZERO);
    }

    #[test]
    fn linear_residual_examples() {
        let a = PI / 3.0;
        let s = (a / 2.0).sin();
        let am = MeromorphicFunction::constant("A", c(-4.0 * s * s, 0.0));
        for text in ["sin(pi/3*z)", "cos(pi/3*z)"] {
            let f = entire("f", text);
            for z in sample() {
                assert!(residual_linear(&am, &f, z).unwrap().relative() <= 1e-9);
            }
        }
        let k = MeromorphicFunction::constant("k", c(2.0, 0.0));
        let r = residual_linear(&am, &k, ZERO).unwrap();
        assert!((r.value + am.eval(ZERO).unwrap() * 2.0).norm() < 1e-15);
    }

    #[test]
    fn forward_step_examples() {
        let a = PI / 3.0;
        let b = MeromorphicFunction::constant("B", c((a / 2.0).cos().powi(2), 0.0));
        let f = |x: f64| (a * x).sin();
        let next = forward_step(&b, c(f(0.4), 0.0), c(f(1.4), 0.0), c(0.4, 0.0)).unwrap();
        assert!((next - f(2.4)).norm() <= 1e-9);

        let b0 = MeromorphicFunction::constant("B", ZERO);
        assert_eq!(forward_step(&b0, ONE, ONE, ZERO).unwrap(), ONE);

        // f_b is 2-periodic, so it lives on the other factor of the
        // dichotomy: f(z+2) = f(z), while the step predicts a different value.
        let fb = f_b(1.0);
        let b1 = MeromorphicFunction::constant("B", ONE);
        let z = c(0.3, 0.2);
        let (f0, f1, f2) = (fb.eval(z).unwrap(), fb.eval(z + 1.0).unwrap(), fb.eval(z + 2.0).unwrap());
        assert!((f2 - f0).norm() < 1e-12 * (1.0 + f0.norm()));
        let step = forward_step(&b1, f0, f1, z).unwrap();
        assert!((step - f0).norm() > 1e-3);
        // Both factors of (f(z+2) − f(z))·(f1³ − (2f1 − f0)B + (B − f0f1)f(z+2)).
        let second = |x: Complex64| f1 * f1 * f1 - (2.0 * f1 - f0) + (ONE - f0 * f1) * x;
        assert!(second(step).norm() < 1e-12 * (1.0 + f1.norm().powi(3)));
    }

    #[test]
    fn quartic_relation_and_xi() {
        let a = PI / 3.0;
        let eq = trig_eq(a);
        let f1 = entire("sin", "sin(pi/3*z)");
        let f2 = entire("cos", "cos(pi/3*z)");
        let h = Expr::real(-a.sin());
        for z in sample() {
            assert!(relation_quartic_defect(&eq, &f1, &f2, &h, z).unwrap().relative() <= 1e-8);
            assert!(unit_circle_defect(&f1, &f2, z).unwrap().relative() <= 1e-10);
            let x = xi_defect(&eq, &f1, &f2, &h, z).unwrap();
            assert!(x.linear.relative() <= 1e-8 && x.squared.relative() <= 1e-8);
        }
        let zero = Expr::zero();
        let r = relation_quartic_defect(&eq, &f1, &f1, &zero, c(0.3, 0.1)).unwrap();
        assert!(r.value.norm() < 1e-15);
        let x = xi_defect(&eq, &f1, &f1, &zero, c(0.3, 0.1)).unwrap();
        assert_eq!(x.xi, ZERO);
    }

    #[test]
    fn xi_squared_defect_factors_through_linear_defect() {
        // With f2 solving the equation, defect(Ξ²) = defect(Ξ)·(Ξ + 2f1HΔf2)
        // for any H; check it with a deliberately wrong H.
        let a = PI / 3.0;
        let eq = trig_eq(a);
        let f1 = entire("sin", "sin(pi/3*z)");
        let f2 = entire("cos", "cos(pi/3*z)");
        let h = parse("0.3 + 0.1*z").unwrap();
        for z in sample().into_iter().take(10) {
            let x = xi_defect(&eq, &f1, &f2, &h, z).unwrap();
            let u = f1.eval(z).unwrap();
            let hv = h.eval_finite(z).unwrap();
            let dv = f2.eval(z + 1.0).unwrap() - f2.eval(z).unwrap();
            let want = x.linear.value * (x.xi + 2.0 * u * hv * dv);
            assert!((x.squared.value - want).norm() <= 1e-12 * x.squared.scale);
        }
    }

    #[test]
    fn relation_a_examples() {
        let w1 = parse("sin(2*t)").unwrap();
        let w2 = parse("cos(2*t)").unwrap();
        let w3 = parse("sin(2*t + 0.7)").unwrap();
        let pts = sample();
        for &t in &pts {
            assert!(relation_a_defect(&w1, &w2, ZERO, t).unwrap().relative() < 1e-14);
            assert!(relation_a_defect(&w1, &w3, c(-(0.7f64).cos(), 0.0), t).unwrap().relative() <= 1e-10);
            let d = relation_a_defect(&w1, &w2, ONE, t).unwrap();
            let s = w1.eval_finite(t).unwrap() + w2.eval_finite(t).unwrap();
            assert!((d.value - s * s).norm() < 1e-12 * d.scale);
        }
        let fit = fit_relation_constant(&w1, &w2, &pts).unwrap();
        assert!(fit.c.norm() < 1e-8 && fit.max_defect <= 1e-10);
        let fit = fit_relation_constant(&w1, &w3, &pts).unwrap();
        assert!((fit.c - c(-0.764_842_187_284_488_5, 0.0)).norm() < 1e-8);
        let e = parse("exp(t)").unwrap();
        assert!(matches!(fit_relation_constant(&w1, &e, &pts), Err(Error::NoConsistentConstant { .. })));
        assert!(matches!(fit_relation_constant(&w1, &w2, &pts[..2]), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn ode_residual_examples() {
        let w = parse("(1.3^2 + t^2)/(2*1.3*t)").unwrap();
        let at = MeromorphicFunction::new(
            "1/t^2",
            parse("1/t^2").unwrap(),
            SingularityLedger::new().with_point(ZERO, 2, Kind::Pole).unwrap(),
        );
        let one = MeromorphicFunction::constant("1", ONE);
        assert!(residual_ode(&at, &one, &w, c(0.8, 0.0)).unwrap().relative() <= 1e-9);
        let m4 = MeromorphicFunction::constant("-4", c(-4.0, 0.0));
        let s = parse("sin(2*t)").unwrap();
        for t in sample() {
            assert!(residual_ode(&m4, &one, &s, t).unwrap().relative() <= 1e-10);
        }
        assert_eq!(residual_ode(&m4, &one, &Expr::one(), ONE).unwrap().value, ZERO);
    }

    #[test]
    fn g_of_examples() {
        let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        let f = f_b(1.0);
        for z in sample() {
            assert!((g_of(&eq, &f, z).unwrap() + 4.0).norm() < 1e-12);
        }
        assert_eq!(g_expr(&eq, &f.expr).as_const(), Some(c(-4.0, 0.0)));
        let eq0 = DifferenceEquation::constant(c(-4.0, 0.0), ZERO, Form::Main).unwrap();
        assert_eq!(g_of(&eq0, &f, c(0.3, 0.4)).unwrap(), ZERO);
    }

    #[test]
    fn g_transform_examples() {
        let a = entire("a", "sin(z)");
        assert_eq!(g_transform(&a, &a, c(0.3, 0.1)).unwrap(), ZERO);
        let neg = entire("-a", "-sin(z)");
        assert!(matches!(g_transform(&neg, &a, c(0.3, 0.1)), Err(Error::DegenerateDenominator { .. })));
        let f = entire("f", "cos(z)");
        for z in sample() {
            let g = g_transform(&f, &a, z).unwrap();
            let back = g_inverse(g, a.eval(z).unwrap());
            assert!((back - f.eval(z).unwrap()).norm() < 1e-10 * (1.0 + back.norm()));
        }
    }

    #[test]
    fn quadratic_coefficient_factors() {
        let eq = trig_eq(PI / 3.0);
        let a = entire("sin", "sin(pi/3*z)");
        let (c0, c1, _) = quadratic_coeffs(&eq, &a, ONE, c(0.2, 0.1)).unwrap();
        assert_eq!((c0, c1), (ZERO, ZERO));
        let (c0, _, _) = quadratic_coeffs(&eq, &a, ZERO, c(0.2, 0.1)).unwrap();
        assert_eq!(c0, ZERO);
    }

    #[test]
    fn quadratic_and_discriminant_for_solution_pairs() {
        let eq = trig_eq(PI / 3.0);
        let a = entire("sin", "sin(pi/3*z)");
        let f = entire("cos", "cos(pi/3*z)");
        for z in sample() {
            assert!(quadratic_residual(&eq, &a, &f, z).unwrap().relative() <= 1e-8);
            assert!(discriminant_identity_defect(&eq, &a, &f, z).unwrap().relative() <= 1e-7);
        }
        let eq2 = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        let (fb, fb2) = (f_b(1.0), f_b(2.0));
        for z in sample() {
            assert!(quadratic_residual(&eq2, &fb, &fb2, z).unwrap().relative() <= 1e-8);
            assert!(discriminant_identity_defect(&eq2, &fb, &fb2, z).unwrap().relative() <= 1e-7);
        }
    }

    #[test]
    fn discriminant_with_f_equal_to_a() {
        // g ≡ 0: C0 = 0, so C1² must equal the right side with G(f) = G(a).
        let eq = trig_eq(PI / 3.0);
        let a = entire("sin", "sin(pi/3*z)");
        for z in sample().into_iter().take(10) {
            let d = discriminant_identity_defect(&eq, &a, &a, z).unwrap();
            assert!(d.relative() <= 1e-7);
        }
    }

    #[test]
    fn periodic_reparameterization() {
        let a = PI / 3.0;
        let eq = trig_eq(a);
        let f = entire("sin", "sin(pi/3*z)");
        let same = periodic_reparam(&eq, &f, &Expr::zero()).unwrap();
        for z in sample() {
            assert!((same.eval(z).unwrap() - f.eval(z).unwrap()).norm() < 1e-15);
        }
        let hat = periodic_reparam(&eq, &f, &parse("sin(2*pi*z)").unwrap()).unwrap();
        assert_eq!(hat.status, LedgerStatus::Derived);
        // sin(2πz) grows like e^{2π|Im z|}; keep to a strip where the
        // composition stays within double range.
        let strip = regular_points(&Rect::new(-3.0, 3.0, -0.5, 0.5).unwrap(), 50, &[], GUARD, None).unwrap();
        for z in strip {
            assert!(residual_main(&eq, &hat, z).unwrap().relative() <= 1e-8);
        }
        let shifted = periodic_reparam(&eq, &f, &Expr::real(0.3)).unwrap();
        assert!(residual_main(&eq, &shifted, c(0.2, 0.5)).unwrap().relative() <= 1e-9);
        assert!(matches!(
            periodic_reparam(&eq, &f, &parse("sin(z)").unwrap()),
            Err(Error::NonPeriodicKappa(_))
        ));
        let ne = DifferenceEquation::new(
            MeromorphicFunction::new("A", parse("z + 1").unwrap(), SingularityLedger::new()),
            MeromorphicFunction::constant("B", ONE),
            Form::Main,
        )
        .unwrap();
        assert!(matches!(periodic_reparam(&ne, &f, &Expr::zero()), Err(Error::NonConstantCoefficients)));
    }

    #[test]
    fn equation_file_round_trip() {
        let text = r#"{"A": "-4*sin(a/2)^2", "B": "cos(a/2)^2", "params": {"a": "pi/3"}}"#;
        let file: EquationFile = serde_json::from_str(text).unwrap();
        let (eq, bindings) = file.build().unwrap();
        assert_eq!(eq.form, Form::Main);
        let sol = FunctionFile {
            expr: "sin(a*z)".into(),
            ..Default::default()
        };
        let f = sol.build(&bindings).unwrap();
        assert!(residual_main(&eq, &f, c(0.3, 0.2)).unwrap().relative() <= 1e-9);
        assert!(DifferenceEquation::constant(ZERO, ONE, Form::Main).is_err());
    }

    #[test]
    fn singular_points_are_rejected() {
        let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main).unwrap();
        assert!(matches!(
            residual_main(&eq, &f_b(1.0), c(0.98, 0.01)),
            Err(Error::SingularPoint { .. })
        ));
    }
}
