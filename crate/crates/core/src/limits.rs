//! Continuous-limit experiments: rescaling `t = εz`, discrete residuals on
//! ε-schedules, extrapolated coefficient limits and convergence orders.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::equations::{value_at, Residual};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Bindings, Expr};
use crate::meromorphic::roots::linear_exp_roots;
use crate::meromorphic::{LedgerStatus, MeromorphicFunction, SingularityLedger};
use crate::nevanlinna::fit_line;

/// Successive extrapolants must agree to this fraction of their scale.
pub const LIMIT_TOL: f64 = 1e-6;
/// Multiple of machine epsilon marking the residual rounding floor.
const FLOOR_FACTOR: f64 = 1e3;

/// Geometric schedule `start·ratio^k`, `k = 0..steps`.
pub fn geometric_schedule(start: Complex64, ratio: f64, steps: usize) -> Result<Vec<Complex64>> {
    if start.norm() == 0.0 || !(ratio > 0.0 && ratio < 1.0) || steps == 0 {
        return Err(Error::Invalid("schedule needs start != 0, 0 < ratio < 1, steps > 0".into()));
    }
    Ok((0..steps).map(|k| start * ratio.powi(k as i32)).collect())
}

/// The default schedule: 0.5 halved twelve times.
pub fn default_schedule() -> Vec<Complex64> {
    geometric_schedule(Complex64::new(0.5, 0.0), 0.5, 12).expect("valid default")
}

/// `(Ã, B̃)` with `Ã(t, ε) = A(t/ε)/ε²` and `B̃(t, ε) = B(t/ε)`.
pub fn scale_equation(
    a: &MeromorphicFunction,
    b: &MeromorphicFunction,
    eps: Complex64,
) -> Result<(MeromorphicFunction, MeromorphicFunction)> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroScale);
    }
    let at = Expr::div(a.expr.substitute_scale(eps)?, Expr::constant(eps * eps));
    let bt = b.expr.substitute_scale(eps)?;
    let scaled = |label: &str, expr: Expr, ledger: SingularityLedger| MeromorphicFunction {
        expr,
        ledger,
        label: format!("{label}~(t, {eps})"),
        status: LedgerStatus::Derived,
    };
    Ok((
        scaled(&a.label, at, a.ledger.scaled(eps)),
        scaled(&b.label, bt, b.ledger.scaled(eps)),
    ))
}

/// `[(w(t+ε) − w(t))² − ε²Ã(w(t)w(t+ε) − B̃)]/ε²`.
pub fn discrete_residual(
    a: &MeromorphicFunction,
    b: &MeromorphicFunction,
    w: &Expr,
    t: Complex64,
    eps: Complex64,
) -> Result<Residual> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroScale);
    }
    let av = value_at(a, t, 0.0)?;
    let bv = value_at(b, t, 0.0)?;
    let w0 = w.eval_finite(t).ok_or(Error::DomainError(t))?;
    let w1 = w.eval_finite(t + eps).ok_or(Error::DomainError(t + eps))?;
    let d = (w1 - w0) / eps;
    let terms = [d * d, av * w0 * w1, av * bv];
    let big = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(Residual {
        value: terms[0] - terms[1] + terms[2],
        scale: 1.0 + big,
    })
}

type FamilyFn = dyn Fn(Complex64) -> Result<Expr> + Send + Sync;

/// An expression depending on ε.
#[derive(Clone)]
pub enum EpsFamily {
    Fixed(Expr),
    /// Text in the expression grammar with `eps` bound to each ε.
    Template { text: String, bindings: Bindings },
    Custom(Arc<FamilyFn>),
}

impl std::fmt::Debug for EpsFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpsFamily::Fixed(e) => write!(f, "Fixed({e})"),
            EpsFamily::Template { text, .. } => write!(f, "Template({text})"),
            EpsFamily::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl EpsFamily {
    pub fn template(text: impl Into<String>, bindings: Bindings) -> EpsFamily {
        EpsFamily::Template {
            text: text.into(),
            bindings,
        }
    }

    pub fn custom(f: impl Fn(Complex64) -> Result<Expr> + Send + Sync + 'static) -> EpsFamily {
        EpsFamily::Custom(Arc::new(f))
    }

    pub fn at(&self, eps: Complex64) -> Result<Expr> {
        match self {
            EpsFamily::Fixed(e) => Ok(e.clone()),
            EpsFamily::Template { text, bindings } => {
                let mut b = bindings.clone();
                b.insert("eps".into(), Expr::constant(eps));
                parse_with(text, &b)
            }
            EpsFamily::Custom(f) => f(eps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: Complex64,
    /// `|difference|` between the two agreeing extrapolants.
    pub spread: f64,
    pub converged: bool,
}

/// Extrapolates `family(ε)(t)` to ε = 0 along the schedule with Neville's
/// scheme and returns the diagonal entry whose successor agrees best.
pub fn coefficient_limit(family: &EpsFamily, t: Complex64, schedule: &[Complex64]) -> Result<LimitEstimate> {
    if schedule.len() < 2 {
        return Err(Error::Invalid("schedule needs at least two values".into()));
    }
    let mut values = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let v = family.at(eps)?.eval_finite(t).ok_or(Error::DomainError(t))?;
        values.push(v);
    }
    let scale = 1.0 + values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // Neville table for interpolation at 0, built row by row.
    let n = values.len();
    let mut table = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        table[i][0] = values[i];
        for j in 1..=i {
            let (xi, xj) = (schedule[i], schedule[i - j]);
            table[i][j] = (xj * table[i][j - 1] - xi * table[i - 1][j - 1]) / (xj - xi);
        }
    }
    let mut best = (table[0][0], f64::INFINITY);
    for i in 1..n {
        let diff = (table[i][i] - table[i - 1][i - 1]).norm();
        if diff < best.1 {
            best = (table[i][i], diff);
        }
    }
    Ok(LimitEstimate {
        value: best.0,
        spread: best.1,
        converged: best.1 <= LIMIT_TOL * scale,
    })
}

/// How the scaled coefficients are produced.
#[derive(Debug, Clone)]
pub enum Scaling {
    /// `Ã = A(t/ε)/ε²`, `B̃ = B(t/ε)`.
    Direct { a: MeromorphicFunction, b: MeromorphicFunction },
    /// User-supplied families `Ã(t, ε)`, `B̃(t, ε)`.
    Indirect { a: EpsFamily, b: EpsFamily },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsRecord {
    pub eps: Complex64,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Rounding floor for this ε; residuals below it carry no signal.
    pub floor: f64,
}

impl EpsRecord {
    pub fn underflows(&self) -> bool {
        self.max_residual <= self.floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrderStatus {
    /// Slope fitted over the smaller half of the schedule.
    Fitted { order: f64 },
    /// Residuals reached the rounding floor before half the schedule; the
    /// slope (if any) comes from the usable prefix.
    ResidualUnderflow { usable: usize, order: Option<f64> },
}

impl OrderStatus {
    pub fn order(&self) -> Option<f64> {
        match *self {
            OrderStatus::Fitted { order } => Some(order),
            OrderStatus::ResidualUnderflow { order, .. } => order,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitExperiment {
    pub label: String,
    pub scaling: Scaling,
    pub schedule: Vec<Complex64>,
    pub t_grid: Vec<Complex64>,
    pub candidate: EpsFamily,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub label: String,
    pub records: Vec<EpsRecord>,
    pub status: OrderStatus,
}

impl LimitExperiment {
    pub fn coefficients(&self, eps: Complex64) -> Result<(MeromorphicFunction, MeromorphicFunction)> {
        match &self.scaling {
            Scaling::Direct { a, b } => scale_equation(a, b, eps),
            Scaling::Indirect { a, b } => Ok((
                MeromorphicFunction::new("A~", a.at(eps)?, SingularityLedger::poles_only()),
                MeromorphicFunction::new("B~", b.at(eps)?, SingularityLedger::poles_only()),
            )),
        }
    }

    /// Residual table over the schedule.
    pub fn records(&self) -> Result<Vec<EpsRecord>> {
        if self.t_grid.is_empty() {
            return Err(Error::Invalid("empty t-grid".into()));
        }
        let mut seen: Vec<Complex64> = Vec::new();
        let mut out = Vec::with_capacity(self.schedule.len());
        for &eps in &self.schedule {
            if eps.norm() == 0.0 || seen.contains(&eps) {
                return Err(Error::Invalid("schedule values must be distinct and nonzero".into()));
            }
            seen.push(eps);
            let (a, b) = self.coefficients(eps)?;
            let w = self.candidate.at(eps)?;
            let mut max: f64 = 0.0;
            let mut sum = 0.0;
            let mut wmax: f64 = 0.0;
            for &t in &self.t_grid {
                let r = discrete_residual(&a, &b, &w, t, eps)?;
                max = max.max(r.value.norm());
                sum += r.value.norm();
                wmax = wmax.max(w.eval_finite(t).map_or(0.0, |v| v.norm()));
            }
            // Cancellation in w(t+ε) − w(t) costs about eps_mach·|w|, which the
            // division by ε² turns into eps_mach·|w|·|w′|/|ε|.
            let floor = FLOOR_FACTOR * f64::EPSILON * (1.0 + wmax * wmax) / eps.norm();
            out.push(EpsRecord {
                eps,
                max_residual: max,
                mean_residual: sum / self.t_grid.len() as f64,
                floor,
            });
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<LimitReport> {
        let records = self.records()?;
        let status = convergence_order(&records);
        Ok(LimitReport {
            label: self.label.clone(),
            records,
            status,
        })
    }
}

fn slope(records: &[EpsRecord]) -> Option<f64> {
    let xs: Vec<f64> = records.iter().map(|r| r.eps.norm().ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.max_residual.max(f64::MIN_POSITIVE).ln()).collect();
    fit_line(&xs, &ys).map(|(s, _)| s)
}

/// Fits `log(max residual)` against `log|ε|`.
pub fn convergence_order(records: &[EpsRecord]) -> OrderStatus {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| b.eps.norm().total_cmp(&a.eps.norm()));
    let usable = sorted.iter().take_while(|r| !r.underflows()).count();
    let half = sorted.len() / 2;
    if usable < sorted.len() - half {
        let order = if usable >= 2 { slope(&sorted[..usable]) } else { None };
        return OrderStatus::ResidualUnderflow { usable, order };
    }
    let tail = &sorted[half..usable];
    match slope(tail) {
        Some(order) => OrderStatus::Fitted { order },
        None => OrderStatus::ResidualUnderflow { usable, order: None },
    }
}

/// CSV with columns `eps_re,eps_im,max_residual,mean_residual`.
pub fn limit_csv(records: &[EpsRecord]) -> String {
    let mut out = String::from("eps_re,eps_im,max_residual,mean_residual\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.12e},{:.12e}",
            r.eps.re, r.eps.im, r.max_residual, r.mean_residual
        );
    }
    out
}

/// For `Q(z) = e^{rate·z}`: the points `z_n` with `Q(t·z_n) = C·z_n`,
/// `|z_n| <= radius`, returned as `ε_n = 1/z_n` with the largest `|z_n|`
/// first. Along this sequence `ε_n·Q(t/ε_n) = C`.
pub fn exponential_subsequence(rate: Complex64, t: Complex64, c: Complex64, radius: f64) -> Vec<Complex64> {
    let mut zs = linear_exp_roots(c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), rate * t, radius);
    zs.retain(|z| z.norm() > 0.0);
    zs.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    zs.into_iter().map(|z| z.inv()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equations::{residual_main, residual_ode, DifferenceEquation, Form};
    use crate::expr::parse;
    use crate::meromorphic::Kind;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ex24_coefficients() -> (MeromorphicFunction, MeromorphicFunction) {
        let poles = SingularityLedger::new()
            .with_point(c(0.0, 0.0), 1, Kind::Pole)
            .unwrap()
            .with_point(c(-1.0, 0.0), 1, Kind::Pole)
            .unwrap();
        let a = MeromorphicFunction::new("A", parse("1/(z*(z+1))").unwrap(), poles.clone());
        let b = MeromorphicFunction::new("B", parse("(1+2*z)^2/(4*z*(z+1))").unwrap(), poles);
        (a, b)
    }

    fn t_grid() -> Vec<Complex64> {
        (0..20).map(|k| c(0.6 + 0.07 * k as f64, 0.3 - 0.03 * k as f64)).collect()
    }

    #[test]
    fn scale_equation_examples() {
        let (a, b) = ex24_coefficients();
        for eps in [c(0.1, 0.0), c(0.37, 0.2)] {
            let (at, bt) = scale_equation(&a, &b, eps).unwrap();
            for t in t_grid() {
                let want_a = 1.0 / (t * (t + eps));
                let want_b = (2.0 * t + eps).powi(2) / (4.0 * t * (t + eps));
                assert!((at.eval(t).unwrap() - want_a).norm() < 1e-12 * want_a.norm());
                assert!((bt.eval(t).unwrap() - want_b).norm() < 1e-12 * want_b.norm());
            }
            assert!(at.ledger.expand(1.0).iter().any(|s| (s.location + eps).norm() < 1e-15));
        }
        let k = MeromorphicFunction::constant("A", c(3.0, 0.0));
        let (kt, _) = scale_equation(&k, &k, c(0.5, 0.0)).unwrap();
        assert_eq!(kt.expr.as_const(), Some(c(12.0, 0.0)));
        assert!(matches!(scale_equation(&k, &k, c(0.0, 0.0)), Err(Error::ZeroScale)));
    }

    #[test]
    fn direct_connection_is_a_change_of_variables() {
        let (a, b) = ex24_coefficients();
        let eq = DifferenceEquation::new(a.clone(), b.clone(), Form::Main).unwrap();
        let f = MeromorphicFunction::new("f", parse("(z^2 + exp(2*pi*i*z)^2)/(2*z*exp(2*pi*i*z))").unwrap(), SingularityLedger::poles_only());
        for eps in [c(0.25, 0.0), c(0.1, 0.05)] {
            let (at, bt) = scale_equation(&a, &b, eps).unwrap();
            let w = f.expr.substitute_scale(eps).unwrap();
            for z in [c(0.7, 0.2), c(-2.3, 0.1), c(1.6, -0.3)] {
                let main = residual_main(&eq, &f, z).unwrap();
                let disc = discrete_residual(&at, &bt, &w, eps * z, eps).unwrap();
                let lifted = disc.value * eps * eps;
                assert!((main.value - lifted).norm() <= 1e-12 * main.scale, "{z} {eps}");
            }
        }
    }

    #[test]
    fn discrete_residual_examples() {
        // sin(2t + φ) with the trigonometric coefficients: exact for every ε.
        let w = parse("sin(2*t)").unwrap();
        for e in [0.5, 0.25, 0.1] {
            let eps = c(e, 0.0);
            let a = MeromorphicFunction::constant("A~", c(-4.0 * e.sin().powi(2) / (e * e), 0.0));
            let b = MeromorphicFunction::constant("B~", c(e.cos().powi(2), 0.0));
            for t in t_grid() {
                assert!(discrete_residual(&a, &b, &w, t, eps).unwrap().value.norm() <= 1e-10);
            }
        }
        let k = MeromorphicFunction::constant("k", c(1.5, 0.0));
        let kk = MeromorphicFunction::constant("k2", c(2.25, 0.0));
        let r = discrete_residual(&k, &kk, &Expr::real(1.5), c(0.3, 0.0), c(0.1, 0.0)).unwrap();
        assert_eq!(r.value, c(0.0, 0.0));
    }

    #[test]
    fn discrete_residual_tends_to_ode_residual() {
        let at = MeromorphicFunction::new("1/t^2", parse("1/t^2").unwrap(), SingularityLedger::poles_only());
        let one = MeromorphicFunction::constant("1", c(1.0, 0.0));
        let w = parse("t^2").unwrap();
        let t = c(0.9, 0.2);
        let ode = residual_ode(&at, &one, &w, t).unwrap();
        let disc = discrete_residual(&at, &one, &w, t, c(1e-6, 0.0)).unwrap();
        assert!((ode.value - disc.value).norm() <= 1e-5 * ode.scale);
        // Same check for w_C: both sides vanish in the limit.
        let wc = parse("(1.3^2 + t^2)/(2*1.3*t)").unwrap();
        let ode = residual_ode(&at, &one, &wc, t).unwrap();
        assert!(ode.relative() < 1e-12);
    }

    #[test]
    fn coefficient_limit_examples() {
        let sched = default_schedule();
        let a = EpsFamily::template("1/(t*(t+eps))", Bindings::new());
        let l = coefficient_limit(&a, c(2.0, 0.0), &sched).unwrap();
        assert!(l.converged && (l.value - 0.25).norm() <= 1e-8, "{l:?}");
        let b = EpsFamily::template("(2*t+eps)^2/(4*t*(t+eps))", Bindings::new());
        let l = coefficient_limit(&b, c(2.0, 0.0), &sched).unwrap();
        assert!(l.converged && (l.value - 1.0).norm() <= 1e-8);
        let s = EpsFamily::template("-4*sin(eps)^2/eps^2", Bindings::new());
        let l = coefficient_limit(&s, c(0.7, 0.0), &sched).unwrap();
        assert!(l.converged && (l.value + 4.0).norm() <= 1e-8);
        let fixed = EpsFamily::Fixed(parse("sin(t) + 3").unwrap());
        let l = coefficient_limit(&fixed, c(0.7, 0.0), &sched).unwrap();
        assert_eq!(l.value, c(0.7f64.sin() + 3.0, 0.0));
    }

    fn ex31_experiment(candidate: &str) -> LimitExperiment {
        let (a, b) = ex24_coefficients();
        LimitExperiment {
            label: "ex3_1".into(),
            scaling: Scaling::Direct { a, b },
            schedule: default_schedule(),
            t_grid: t_grid(),
            candidate: EpsFamily::Fixed(parse(candidate).unwrap()),
        }
    }

    #[test]
    fn w_c_direct_scaling_is_exact() {
        // w_C is the image of the constant-Q solution with εQ = C, so the
        // directly scaled equation holds for every ε.
        let rep = ex31_experiment("(1.3^2 + t^2)/(2*1.3*t)").run().unwrap();
        assert_eq!(rep.status, OrderStatus::ResidualUnderflow { usable: 0, order: None });
        assert!(rep.records.iter().all(|r| r.max_residual < 1e-11));
    }

    #[test]
    fn w_c_with_limit_coefficients_is_first_order() {
        let mut exp = ex31_experiment("(1.3^2 + t^2)/(2*1.3*t)");
        exp.scaling = Scaling::Indirect {
            a: EpsFamily::template("1/t^2", Bindings::new()),
            b: EpsFamily::Fixed(Expr::one()),
        };
        let order = match exp.run().unwrap().status {
            OrderStatus::Fitted { order } => order,
            other => panic!("{other:?}"),
        };
        assert_eq!((order * 10.0).round() / 10.0, 1.0, "{order}");
    }

    #[test]
    fn non_solution_has_order_zero() {
        let mut exp = ex31_experiment("t^2");
        let at = MeromorphicFunction::new("1/t^2", parse("1/t^2").unwrap(), SingularityLedger::poles_only());
        exp.scaling = Scaling::Indirect {
            a: EpsFamily::Fixed(at.expr.clone()),
            b: EpsFamily::Fixed(Expr::one()),
        };
        let order = exp.run().unwrap().status.order().unwrap();
        assert!(order.abs() < 0.05, "{order}");
    }

    #[test]
    fn trigonometric_family_underflows() {
        let exp = LimitExperiment {
            label: "ex3_2".into(),
            scaling: Scaling::Indirect {
                a: EpsFamily::template("-4*sin(eps)^2/eps^2", Bindings::new()),
                b: EpsFamily::template("cos(eps)^2", Bindings::new()),
            },
            schedule: default_schedule(),
            t_grid: t_grid(),
            candidate: EpsFamily::Fixed(parse("sin(2*t)").unwrap()),
        };
        let rep = exp.run().unwrap();
        assert!(matches!(rep.status, OrderStatus::ResidualUnderflow { .. }), "{:?}", rep.status);
        assert!(rep.records.iter().all(|r| r.max_residual <= 1e-10));
    }

    #[test]
    fn exponential_subsequence_reaches_constant() {
        let rate = c(0.0, 2.0 * PI);
        let (t, cc) = (c(0.8, 0.0), c(1.3, 0.0));
        let eps = exponential_subsequence(rate, t, cc, 40.0);
        assert!(eps.len() > 10);
        assert!(eps[0].norm() < 0.05);
        for e in eps.iter().take(10) {
            let v = e * (rate * t / e).exp();
            assert!((v - cc).norm() < 1e-8, "{v}");
        }
    }
}
