//! Built-in parameterized equations with closed-form solutions and ledgers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::equations::{
    g_expr, solution_avoid, DifferenceEquation, Form, ResidualReport, TOL_RESIDUAL,
};
use crate::error::{Error, Result};
use crate::expr::shape::{as_affine, as_exp_linear, as_exp_poly, ExpLinear};
use crate::expr::{parse, parse_with, Bindings, Expr};
use crate::grid::{regular_points, GUARD};
use crate::limits::{default_schedule, EpsFamily, LimitExperiment, Scaling};
use crate::meromorphic::roots::poly_roots;
use crate::meromorphic::{Kind, MeromorphicFunction, Rect, SingularityLedger};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const PI_I: Complex64 = Complex64::new(0.0, PI);
const SELF_CHECK_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntryInfo {
    pub id: &'static str,
    pub params: &'static [ParamSpec],
    pub provenance: &'static str,
}

const ENTRIES: &[EntryInfo] = &[
    EntryInfo {
        id: "ex2_1",
        params: &[ParamSpec {
            name: "a",
            default: "pi/3",
            constraint: "constant, not an integer multiple of pi",
        }],
        provenance: "sin(az) and cos(az) under A = -4 sin^2(a/2), B = cos^2(a/2)",
    },
    EntryInfo {
        id: "ex2_2",
        params: &[
            ParamSpec {
                name: "b",
                default: "1",
                constraint: "nonzero constant",
            },
            ParamSpec {
                name: "b2",
                default: "2",
                constraint: "nonzero constant different from b",
            },
        ],
        provenance: "f_b = (1 + b e^{pi i z} - e^{2 pi i z})/(e^{2 pi i z} - 1) under A = -4, B = 1",
    },
    EntryInfo {
        id: "ex2_3",
        params: &[ParamSpec {
            name: "beta",
            default: "1 + 0.5*exp(2*pi*i*z)",
            constraint: "nonzero finite sum of c*exp(2 pi i m z), beta^2 - 4 not identically zero",
        }],
        provenance: "f_beta = (1 - beta e^{pi i z} + e^{2 pi i z})/(e^{2 pi i z} - 1) under A = -4 beta^2/(beta^2 - 4), B = 1",
    },
    EntryInfo {
        id: "ex2_4",
        params: &[ParamSpec {
            name: "Q",
            default: "exp(2*pi*i*z)",
            constraint: "c0 + c1*exp(2 pi i m z), not identically zero",
        }],
        provenance: "(z^2 + Q^2)/(2Qz) under A = 1/(z(z+1)), B = (1+2z)^2/(4z(z+1))",
    },
    EntryInfo {
        id: "ex3_1",
        params: &[ParamSpec {
            name: "C",
            default: "1.3",
            constraint: "nonzero constant",
        }],
        provenance: "w_C = (C^2 + t^2)/(2Ct) for (w')^2 = (w^2 - 1)/t^2, the direct limit of ex2_4",
    },
    EntryInfo {
        id: "ex3_2",
        params: &[ParamSpec {
            name: "phi",
            default: "0",
            constraint: "constant",
        }],
        provenance: "sin(2t + phi) for (w')^2 = -4(w^2 - 1), the indirect limit of ex2_2",
    },
    EntryInfo {
        id: "ex5_1",
        params: &[
            ParamSpec {
                name: "h",
                default: "z",
                constraint: "nonconstant affine alpha*z + gamma",
            },
            ParamSpec {
                name: "Q",
                default: "exp(2*pi*i*z)",
                constraint: "c0 + c1*exp(2 pi i m z), not identically zero",
            },
            ParamSpec {
                name: "Q2",
                default: "exp(10*pi*i*z)",
                constraint: "c0 + c1*exp(2 pi i m z), not identically zero",
            },
        ],
        provenance: "(h^2 + Q^2)/(2hQ) under A = (h(z+1)-h)^2/(h h(z+1)), B = (h(z+1)+h)^2/(4h h(z+1))",
    },
];

/// Entry ids with their parameter schemas.
pub fn list() -> &'static [EntryInfo] {
    ENTRIES
}

/// A fully built entry. ODE entries carry their equation with [`Form::Ode`].
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub equation: DifferenceEquation,
    pub solutions: Vec<MeromorphicFunction>,
    /// `G(f)` for each solution, in the same order; empty for ODE entries.
    pub g_images: Vec<MeromorphicFunction>,
    /// Continuous-limit experiments whose limit is this entry's ODE.
    pub limits: Vec<LimitExperiment>,
    /// `(Ã(t, ε), B̃(t, ε))` tending to the ODE coefficients.
    pub scaled_coefficients: Option<(EpsFamily, EpsFamily)>,
    pub params: Bindings,
    pub provenance: String,
}

impl CatalogEntry {
    pub fn is_ode(&self) -> bool {
        self.equation.form == Form::Ode
    }

    /// Coefficients, solutions and `G` images.
    pub fn functions(&self) -> Vec<&MeromorphicFunction> {
        let mut v = vec![&self.equation.a, &self.equation.b];
        v.extend(self.solutions.iter());
        v.extend(self.g_images.iter());
        v
    }

    /// Residual of solution `index` over `n` regular points in `rect`.
    pub fn residual_report(&self, index: usize, rect: &Rect, n: usize, seed: Option<u64>) -> Result<ResidualReport> {
        let f = self
            .solutions
            .get(index)
            .ok_or_else(|| Error::Invalid(format!("entry {} has no solution {index}", self.id)))?;
        residual_report(&self.equation, f, rect, n, seed)
    }
}

/// Residual of `f` under `eq` on regular points clear of the poles of the
/// coefficients and of `f` and `f(z+1)`.
pub fn residual_report(
    eq: &DifferenceEquation,
    f: &MeromorphicFunction,
    rect: &Rect,
    n: usize,
    seed: Option<u64>,
) -> Result<ResidualReport> {
    let mut avoid = eq.avoid();
    avoid.extend(solution_avoid(f, 1));
    let grid = regular_points(rect, n, &avoid, GUARD, seed)?;
    ResidualReport::build(f.label.clone(), &grid, |z| eq.residual(f, z))
}

fn violation(name: &str, reason: impl Into<String>) -> Error {
    Error::ParameterConstraintViolation {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Params {
    info: &'static EntryInfo,
    resolved: Bindings,
}

impl Params {
    fn new(info: &'static EntryInfo, given: &Bindings) -> Result<Params> {
        for name in given.keys() {
            if !info.params.iter().any(|p| p.name == name) {
                return Err(violation(name, format!("not a parameter of {}", info.id)));
            }
        }
        let mut resolved = Bindings::new();
        for p in info.params {
            let e = match given.get(p.name) {
                Some(e) => e.clone(),
                None => parse(p.default)?,
            };
            resolved.insert(p.name.to_string(), e);
        }
        Ok(Params { info, resolved })
    }

    fn expr(&self, name: &str) -> Expr {
        self.resolved[name].clone()
    }

    fn constant(&self, name: &str) -> Result<Complex64> {
        self.resolved[name]
            .as_const()
            .ok_or_else(|| violation(name, "must be a constant"))
    }
}

/// Builds entry `id` with `params` overriding the defaults, then runs the
/// residual self-check on every solution.
pub fn get(id: &str, params: &Bindings) -> Result<CatalogEntry> {
    let info = ENTRIES
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownEntry(id.to_string()))?;
    let p = Params::new(info, params)?;
    let entry = match id {
        "ex2_1" => ex2_1(&p)?,
        "ex2_2" => ex2_2(&p)?,
        "ex2_3" => ex2_3(&p)?,
        "ex2_4" => ex2_4(&p)?,
        "ex3_1" => ex3_1(&p)?,
        "ex3_2" => ex3_2(&p)?,
        "ex5_1" => ex5_1(&p)?,
        _ => unreachable!("entry table and builders disagree"),
    };
    self_check(&entry)?;
    Ok(entry)
}

/// Builds entry `id` from `name = expression` text bindings.
pub fn get_with_text(id: &str, params: &[(String, String)]) -> Result<CatalogEntry> {
    let mut bindings = Bindings::new();
    for (k, v) in params {
        bindings.insert(k.clone(), parse(v)?);
    }
    get(id, &bindings)
}

fn self_check(entry: &CatalogEntry) -> Result<()> {
    let rect = Rect::square(3.0);
    for f in &entry.solutions {
        let rep = residual_report(&entry.equation, f, &rect, SELF_CHECK_POINTS, None)?;
        if !rep.passes(TOL_RESIDUAL) {
            return Err(Error::CatalogSelfCheck {
                id: entry.id.clone(),
                max_relative: rep.max_relative,
            });
        }
    }
    Ok(())
}

fn entry(p: &Params, equation: DifferenceEquation, solutions: Vec<MeromorphicFunction>) -> CatalogEntry {
    let g_images = if equation.form == Form::Ode {
        Vec::new()
    } else {
        solutions
            .iter()
            .map(|f| MeromorphicFunction::new(format!("G({})", f.label), g_expr(&equation, &f.expr), SingularityLedger::poles_only()))
            .collect()
    };
    CatalogEntry {
        id: p.info.id.to_string(),
        equation,
        solutions,
        g_images,
        limits: Vec::new(),
        scaled_coefficients: None,
        params: p.resolved.clone(),
        provenance: p.info.provenance.to_string(),
    }
}

// ----- exponential polynomials in u = e^{πiz} -----

/// Coefficients, lowest power first, of `e` as a polynomial in `u = e^{πiz}`
/// after dividing out the lowest power of `u`.
fn u_polynomial(e: &Expr) -> Option<Vec<Complex64>> {
    let p = as_exp_poly(e)?;
    let mut powers = Vec::with_capacity(p.terms.len());
    for (coef, rate) in &p.terms {
        let n = rate / PI_I;
        let k = n.re.round();
        if (n.re - k).abs() > 1e-9 || n.im.abs() > 1e-9 {
            return None;
        }
        powers.push((k as i64, *coef));
    }
    let lo = powers.iter().map(|p| p.0).min()?;
    let hi = powers.iter().map(|p| p.0).max()?;
    let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
    for (k, coef) in powers {
        coeffs[(k - lo) as usize] += coef;
    }
    Some(coeffs)
}

/// Adds the zeros of the exponential polynomial `e` as period-2 lattices.
fn with_u_roots(mut ledger: SingularityLedger, e: &Expr, multiplicity: u32, kind: Kind) -> Result<SingularityLedger> {
    let coeffs = u_polynomial(e).ok_or_else(|| Error::Invalid(format!("`{e}` is not a polynomial in exp(pi*i*z)")))?;
    for (u, m) in poly_roots(&coeffs) {
        if u == ZERO {
            continue;
        }
        ledger = ledger.with_lattice(u.ln() / PI_I, c(2.0, 0.0), m * multiplicity, kind)?;
    }
    Ok(ledger)
}

/// `β` as a sum of `c·e^{2πimz}`; anything else is rejected.
fn periodic_exp_poly(name: &str, e: &Expr) -> Result<()> {
    let p = as_exp_poly(e).ok_or_else(|| violation(name, "must be a finite sum of c*exp(2*pi*i*m*z)"))?;
    if p.terms.is_empty() {
        return Err(violation(name, "must not vanish identically"));
    }
    for (_, rate) in &p.terms {
        let m = rate / (2.0 * PI_I);
        if (m.re - m.re.round()).abs() > 1e-9 || m.im.abs() > 1e-9 {
            return Err(violation(name, "every exponential rate must be 2*pi*i times an integer"));
        }
    }
    Ok(())
}

/// `Q = c0 + c1·e^{2πimz}`, not identically zero.
fn periodic_exp_linear(name: &str, e: &Expr) -> Result<ExpLinear> {
    let q = as_exp_linear(e).ok_or_else(|| violation(name, "must have the form c0 + c1*exp(2*pi*i*m*z)"))?;
    if !q.is_constant() && q.period_one_multiple().is_none() {
        return Err(violation(name, "exponential rate must be 2*pi*i times a nonzero integer"));
    }
    if q.c0 == ZERO && (q.is_constant() || q.c1 == ZERO) {
        return Err(violation(name, "must not vanish identically"));
    }
    Ok(q)
}

fn with_q_zeros(mut ledger: SingularityLedger, q: &ExpLinear, multiplicity: u32, kind: Kind) -> Result<SingularityLedger> {
    if !q.is_constant() && q.c0 != ZERO {
        let base = (-q.c0 / q.c1).ln() / q.rate;
        let step = 2.0 * PI_I / q.rate;
        ledger = ledger.with_lattice(base, step, multiplicity, kind)?;
    }
    Ok(ledger)
}

/// Roots of `s·h + Q = 0` for `h = αz + γ`, as a Lambert family.
fn with_h_q_roots(
    ledger: SingularityLedger,
    (alpha, gamma): (Complex64, Complex64),
    s: Complex64,
    q: &ExpLinear,
    multiplicity: u32,
    kind: Kind,
) -> Result<SingularityLedger> {
    // c0 + c1 e^{λz} = −s(αz + γ)  ⇔  (−sα)z + (−sγ − c0) = c1 e^{λz}
    let (c1, rate) = if q.is_constant() { (ZERO, ZERO) } else { (q.c1, q.rate) };
    ledger.with_linear_exp(-s * alpha, -s * gamma - q.c0, c1, rate, multiplicity, kind)
}

// ----- entries -----

fn ex2_1(p: &Params) -> Result<CatalogEntry> {
    let a = p.constant("a")?;
    if a.sin().norm() < 1e-9 {
        return Err(violation("a", "must not be an integer multiple of pi"));
    }
    let half = a / 2.0;
    let eq = DifferenceEquation::constant(-4.0 * half.sin().powi(2), half.cos().powi(2), Form::Main)?;
    let az = Expr::mul(Expr::constant(a), Expr::var());
    let step = PI / a;
    let sin = MeromorphicFunction::new("sin(az)", az.sin(), SingularityLedger::new().with_lattice(ZERO, step, 1, Kind::Zero)?);
    let cos = MeromorphicFunction::new("cos(az)", az.cos(), SingularityLedger::new().with_lattice(step / 2.0, step, 1, Kind::Zero)?);
    let mut e = entry(p, eq, vec![sin, cos]);
    // G(sin az) = −4cos²(a/2)cos²(az) and symmetrically for cos.
    e.g_images[0].ledger = SingularityLedger::new().with_lattice(step / 2.0, step, 2, Kind::Zero)?;
    e.g_images[1].ledger = SingularityLedger::new().with_lattice(ZERO, step, 2, Kind::Zero)?;
    Ok(e)
}

fn u_rational(label: &str, num: Expr, den: Expr) -> Result<MeromorphicFunction> {
    let ledger = with_u_roots(SingularityLedger::new(), &num, 1, Kind::Zero)?;
    let ledger = with_u_roots(ledger, &den, 1, Kind::Pole)?;
    Ok(MeromorphicFunction::new(label, Expr::div(num, den), ledger))
}

fn f_b(b: Complex64) -> Result<MeromorphicFunction> {
    let mut bind = Bindings::new();
    bind.insert("b".into(), Expr::constant(b));
    let num = parse_with("1 + b*exp(pi*i*z) - exp(2*pi*i*z)", &bind)?;
    let den = parse("exp(2*pi*i*z) - 1")?;
    u_rational(&format!("f_b[b={b}]"), num, den)
}

fn ex2_2(p: &Params) -> Result<CatalogEntry> {
    let b = p.constant("b")?;
    let b2 = p.constant("b2")?;
    if b == ZERO {
        return Err(violation("b", "must be nonzero"));
    }
    if b2 == ZERO {
        return Err(violation("b2", "must be nonzero"));
    }
    if b2 == b {
        return Err(violation("b2", "must differ from b"));
    }
    let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Main)?;
    let mut e = entry(p, eq, vec![f_b(b)?, f_b(b2)?]);
    // A + 4 = 0, so G(f_b) = −4.
    for g in &mut e.g_images {
        g.ledger = SingularityLedger::new();
    }
    Ok(e)
}

fn ex2_3(p: &Params) -> Result<CatalogEntry> {
    let beta = p.expr("beta");
    periodic_exp_poly("beta", &beta)?;
    let mut bind = Bindings::new();
    bind.insert("beta".into(), beta.clone());
    let beta2_minus_4 = parse_with("beta^2 - 4", &bind)?;
    if u_polynomial(&beta2_minus_4).is_none_or(|c| c.iter().all(|x| x.norm() < 1e-12)) {
        return Err(violation("beta", "beta^2 - 4 must not vanish identically"));
    }
    let a_ledger = with_u_roots(SingularityLedger::new(), &beta, 2, Kind::Zero)?;
    let a_ledger = with_u_roots(a_ledger, &beta2_minus_4, 1, Kind::Pole)?;
    let a = MeromorphicFunction::new("A", parse_with("-4*beta^2/(beta^2 - 4)", &bind)?, a_ledger);
    let eq = DifferenceEquation::new(a, MeromorphicFunction::constant("B", ONE), Form::Main)?;
    let f = u_rational(
        "f_beta",
        parse_with("1 - beta*exp(pi*i*z) + exp(2*pi*i*z)", &bind)?,
        parse("exp(2*pi*i*z) - 1")?,
    )?;
    let mut e = entry(p, eq, vec![f]);
    // G(f_β) = −4(β(1+u²) − 4u)² / ((β² − 4)(u² − 1)²)
    let square = parse_with("beta*(1 + exp(2*pi*i*z)) - 4*exp(pi*i*z)", &bind)?;
    let ledger = with_u_roots(SingularityLedger::new(), &square, 2, Kind::Zero)?;
    let ledger = with_u_roots(ledger, &beta2_minus_4, 1, Kind::Pole)?;
    e.g_images[0].ledger = with_u_roots(ledger, &parse("exp(2*pi*i*z) - 1")?, 2, Kind::Pole)?;
    Ok(e)
}

/// `(h² + Q²)/(2hQ)` for affine `h` with its ledger.
fn h_q_solution(label: &str, h: &Expr, hab: (Complex64, Complex64), q_expr: &Expr, q: &ExpLinear) -> Result<MeromorphicFunction> {
    let expr = Expr::div(
        Expr::add(h.powi(2), q_expr.powi(2)),
        Expr::mul(Expr::mul(Expr::real(2.0), h.clone()), q_expr.clone()),
    );
    let z0 = -hab.1 / hab.0;
    let ledger = SingularityLedger::new().with_point(z0, 1, Kind::Pole)?;
    let ledger = with_q_zeros(ledger, q, 1, Kind::Pole)?;
    let ledger = with_h_q_roots(ledger, hab, c(0.0, -1.0), q, 1, Kind::Zero)?;
    let ledger = with_h_q_roots(ledger, hab, c(0.0, 1.0), q, 1, Kind::Zero)?;
    Ok(MeromorphicFunction::new(label, expr, ledger))
}

/// Ledger of `G(f) = (h+h₁)²(h−Q)²(h+Q)² / (4h³h₁Q²)`.
fn h_q_g_ledger(hab: (Complex64, Complex64), q: &ExpLinear) -> Result<SingularityLedger> {
    let z0 = -hab.1 / hab.0;
    let ledger = SingularityLedger::new()
        .with_point(z0 - 0.5, 2, Kind::Zero)?
        .with_point(z0, 3, Kind::Pole)?
        .with_point(z0 - 1.0, 1, Kind::Pole)?;
    let ledger = with_q_zeros(ledger, q, 2, Kind::Pole)?;
    let ledger = with_h_q_roots(ledger, hab, -ONE, q, 2, Kind::Zero)?;
    with_h_q_roots(ledger, hab, ONE, q, 2, Kind::Zero)
}

fn h_q_coefficients(h: &Expr, hab: (Complex64, Complex64)) -> Result<DifferenceEquation> {
    let h1 = h.shift(1.0);
    let prod = Expr::mul(h.clone(), h1.clone());
    let a = Expr::div(Expr::sub(h1.clone(), h.clone()).powi(2), prod.clone());
    let b = Expr::div(Expr::add(h1, h.clone()).powi(2), Expr::mul(Expr::real(4.0), prod));
    let z0 = -hab.1 / hab.0;
    let poles = SingularityLedger::new()
        .with_point(z0, 1, Kind::Pole)?
        .with_point(z0 - 1.0, 1, Kind::Pole)?;
    let b_ledger = poles.clone().with_point(z0 - 0.5, 2, Kind::Zero)?;
    DifferenceEquation::new(
        MeromorphicFunction::new("A", a, poles),
        MeromorphicFunction::new("B", b, b_ledger),
        Form::Main,
    )
}

fn ex2_4(p: &Params) -> Result<CatalogEntry> {
    let q_expr = p.expr("Q");
    let q = periodic_exp_linear("Q", &q_expr)?;
    let hab = (ONE, ZERO);
    let poles = SingularityLedger::new()
        .with_point(ZERO, 1, Kind::Pole)?
        .with_point(-ONE, 1, Kind::Pole)?;
    let eq = DifferenceEquation::new(
        MeromorphicFunction::new("A", parse("1/(z*(z+1))")?, poles.clone()),
        MeromorphicFunction::new(
            "B",
            parse("(1+2*z)^2/(4*z*(z+1))")?,
            poles.with_point(c(-0.5, 0.0), 2, Kind::Zero)?,
        ),
        Form::Main,
    )?;
    let f = h_q_solution("f_Q", &Expr::var(), hab, &q_expr, &q)?;
    let mut e = entry(p, eq, vec![f]);
    e.g_images[0].ledger = h_q_g_ledger(hab, &q)?;
    Ok(e)
}

fn ex5_1(p: &Params) -> Result<CatalogEntry> {
    let h = p.expr("h");
    let hab = as_affine(&h).ok_or_else(|| violation("h", "must be affine in z"))?;
    if hab.0 == ZERO {
        return Err(violation("h", "must not be constant"));
    }
    let eq = h_q_coefficients(&h, hab)?;
    let mut solutions = Vec::new();
    let mut g_ledgers = Vec::new();
    for name in ["Q", "Q2"] {
        let q_expr = p.expr(name);
        let q = periodic_exp_linear(name, &q_expr)?;
        solutions.push(h_q_solution(&format!("f_{name}"), &h, hab, &q_expr, &q)?);
        g_ledgers.push(h_q_g_ledger(hab, &q)?);
    }
    let mut e = entry(p, eq, solutions);
    for (g, l) in e.g_images.iter_mut().zip(g_ledgers) {
        g.ledger = l;
    }
    Ok(e)
}

/// Points for limit experiments, away from `t = 0` and `t = −ε`.
fn limit_t_grid() -> Result<Vec<Complex64>> {
    regular_points(&Rect::new(0.5, 2.0, -0.5, 0.5)?, 20, &[], GUARD, None)
}

fn ex3_1(p: &Params) -> Result<CatalogEntry> {
    let cc = p.constant("C")?;
    if cc == ZERO {
        return Err(violation("C", "must be nonzero"));
    }
    let a = MeromorphicFunction::new("A", parse("1/t^2")?, SingularityLedger::new().with_point(ZERO, 2, Kind::Pole)?);
    let eq = DifferenceEquation::new(a, MeromorphicFunction::constant("B", ONE), Form::Ode)?;
    let mut bind = Bindings::new();
    bind.insert("C".into(), Expr::constant(cc));
    let w_expr = parse_with("(C^2 + t^2)/(2*C*t)", &bind)?;
    let ledger = SingularityLedger::new()
        .with_point(ZERO, 1, Kind::Pole)?
        .with_point(c(0.0, 1.0) * cc, 1, Kind::Zero)?
        .with_point(c(0.0, -1.0) * cc, 1, Kind::Zero)?;
    let w = MeromorphicFunction::new("w_C", w_expr.clone(), ledger);
    let mut e = entry(p, eq, vec![w]);

    let discrete = get("ex2_4", &Bindings::new())?.equation;
    let t_grid = limit_t_grid()?;
    e.limits = vec![
        LimitExperiment {
            label: "ex3_1 direct".into(),
            scaling: Scaling::Direct {
                a: discrete.a,
                b: discrete.b,
            },
            schedule: default_schedule(),
            t_grid: t_grid.clone(),
            candidate: EpsFamily::Fixed(w_expr.clone()),
        },
        LimitExperiment {
            label: "ex3_1 limit coefficients".into(),
            scaling: Scaling::Indirect {
                a: EpsFamily::Fixed(parse("1/t^2")?),
                b: EpsFamily::Fixed(Expr::one()),
            },
            schedule: default_schedule(),
            t_grid,
            candidate: EpsFamily::Fixed(w_expr),
        },
    ];
    e.scaled_coefficients = Some((
        EpsFamily::template("1/(t*(t+eps))", Bindings::new()),
        EpsFamily::template("(2*t+eps)^2/(4*t*(t+eps))", Bindings::new()),
    ));
    Ok(e)
}

fn ex3_2(p: &Params) -> Result<CatalogEntry> {
    let phi = p.constant("phi")?;
    let eq = DifferenceEquation::constant(c(-4.0, 0.0), ONE, Form::Ode)?;
    let mut bind = Bindings::new();
    bind.insert("phi".into(), Expr::constant(phi));
    let w_expr = parse_with("sin(2*t + phi)", &bind)?;
    let ledger = SingularityLedger::new().with_lattice(-phi / 2.0, c(PI / 2.0, 0.0), 1, Kind::Zero)?;
    let w = MeromorphicFunction::new("sin(2t+phi)", w_expr.clone(), ledger);
    let mut e = entry(p, eq, vec![w]);
    let a = EpsFamily::template("-4*sin(eps)^2/eps^2", Bindings::new());
    let b = EpsFamily::template("cos(eps)^2", Bindings::new());
    e.limits = vec![LimitExperiment {
        label: "ex3_2 indirect".into(),
        scaling: Scaling::Indirect { a: a.clone(), b: b.clone() },
        schedule: default_schedule(),
        t_grid: limit_t_grid()?,
        candidate: EpsFamily::Fixed(w_expr),
    }];
    e.scaled_coefficients = Some((a, b));
    Ok(e)
}
