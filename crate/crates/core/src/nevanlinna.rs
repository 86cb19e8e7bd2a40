//! Proximity, counting and characteristic functions at finite radii.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meromorphic::{Kind, MeromorphicFunction, Singularity};

pub const DEFAULT_NODES: usize = 2048;
/// A pole this close to the circle makes the counting function undefined.
pub const CIRCLE_TOL: f64 = 1e-9;
/// Quadrature nodes this close to a declared pole move by half a step.
const NODE_GUARD: f64 = 1e-6;
/// Threshold on the drift statistic and on `|ratio − 1|`.
pub const DRIFT_TOL: f64 = 0.05;

pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// Neumaier compensated sum.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// `m(r, f)` by the trapezoid rule with `nodes` points, and the difference
/// against the rule on every other node.
pub fn proximity_m(f: &MeromorphicFunction, r: f64, nodes: usize) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("radius must be positive, got {r}")));
    }
    let nodes = nodes.max(4) & !1;
    let poles: Vec<Complex64> = f
        .ledger
        .expand(r + 1.0)
        .into_iter()
        .filter(|s| s.kind == Kind::Pole && (s.location.norm() - r).abs() < 1.0)
        .map(|s| s.location)
        .collect();
    let step = 2.0 * PI / nodes as f64;
    let mut full = Sum::default();
    let mut half = Sum::default();
    for k in 0..nodes {
        let mut theta = step * k as f64;
        let mut z = Complex64::from_polar(r, theta);
        if poles.iter().any(|p| (p - z).norm() < NODE_GUARD) {
            theta += 0.5 * step;
            z = Complex64::from_polar(r, theta);
        }
        let v = f.eval(z).ok_or_else(|| Error::NonFiniteSample {
            label: f.label.clone(),
            point: z,
        })?;
        let lp = log_plus(v.norm());
        full.add(lp);
        if k % 2 == 0 {
            half.add(lp);
        }
    }
    let m = full.value() / nodes as f64;
    let m_half = half.value() / (nodes / 2) as f64;
    Ok((m, (m - m_half).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingBreakdown {
    pub r: f64,
    /// Poles in `|z| < r` with multiplicity.
    pub n: u64,
    /// Distinct poles.
    pub n_bar: u64,
    /// Poles of odd multiplicity, with multiplicity.
    pub n_odd: u64,
    /// Distinct poles of odd multiplicity.
    pub n_bar_odd: u64,
    #[serde(rename = "N")]
    pub big_n: f64,
    #[serde(rename = "N_bar")]
    pub big_n_bar: f64,
    #[serde(rename = "N_odd")]
    pub big_n_odd: f64,
    #[serde(rename = "N_bar_odd")]
    pub big_n_bar_odd: f64,
}

fn poles_for_counting(f: &MeromorphicFunction, r: f64) -> Result<Vec<Singularity>> {
    let all = f.ledger.expand(r + 2.0 * CIRCLE_TOL);
    let mut inside = Vec::new();
    for s in all.into_iter().filter(|s| s.kind == Kind::Pole) {
        let d = s.location.norm();
        if (d - r).abs() <= CIRCLE_TOL {
            return Err(Error::PoleOnCircle { location: s.location, r });
        }
        if d < r {
            inside.push(s);
        }
    }
    if r <= 1.0 && inside.iter().any(|s| s.location.norm() == 0.0) {
        return Err(Error::OriginPoleSmallRadius(r));
    }
    Ok(inside)
}

/// Pole counts from the ledger and their integrated forms, with a pole at
/// the origin contributing `n(0)·log r`.
pub fn counting(f: &MeromorphicFunction, r: f64) -> Result<CountingBreakdown> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("radius must be positive, got {r}")));
    }
    let poles = poles_for_counting(f, r)?;
    let (mut n, mut n_bar, mut n_odd, mut n_bar_odd) = (0u64, 0u64, 0u64, 0u64);
    let mut sums: [Sum; 4] = Default::default();
    // Ascending modulus: the ledger expansion is already sorted.
    for s in &poles {
        let m = u64::from(s.multiplicity);
        let d = s.location.norm();
        let w = if d == 0.0 { r.ln() } else { (r / d).ln() };
        let odd = m % 2 == 1;
        n += m;
        n_bar += 1;
        sums[0].add(m as f64 * w);
        sums[1].add(w);
        if odd {
            n_odd += m;
            n_bar_odd += 1;
            sums[2].add(m as f64 * w);
            sums[3].add(w);
        }
    }
    Ok(CountingBreakdown {
        r,
        n,
        n_bar,
        n_odd,
        n_bar_odd,
        big_n: sums[0].value(),
        big_n_bar: sums[1].value(),
        big_n_odd: sums[2].value(),
        big_n_bar_odd: sums[3].value(),
    })
}

/// `N_odd(r, f) + N_odd(r, 1/f)`.
pub fn n_o(f: &MeromorphicFunction, r: f64) -> Result<f64> {
    if !f.ledger.zeros_declared() {
        return Err(Error::IncompleteLedger(f.label.clone()));
    }
    Ok(counting(f, r)?.big_n_odd + counting(&f.reciprocal(), r)?.big_n_odd)
}

/// `N̄_odd(r, f) + N̄_odd(r, 1/f)`.
pub fn n_o_bar(f: &MeromorphicFunction, r: f64) -> Result<f64> {
    if !f.ledger.zeros_declared() {
        return Err(Error::IncompleteLedger(f.label.clone()));
    }
    Ok(counting(f, r)?.big_n_bar_odd + counting(&f.reciprocal(), r)?.big_n_bar_odd)
}

/// Locations counted by `N̄_O(r, f)`: distinct odd-multiplicity zeros and
/// poles in `|z| < r`.
pub fn odd_points(f: &MeromorphicFunction, r: f64) -> Result<Vec<Complex64>> {
    if !f.ledger.zeros_declared() {
        return Err(Error::IncompleteLedger(f.label.clone()));
    }
    let mut out = Vec::new();
    for s in f.ledger.expand(r + 2.0 * CIRCLE_TOL) {
        let d = s.location.norm();
        if (d - r).abs() <= CIRCLE_TOL {
            return Err(Error::PoleOnCircle { location: s.location, r });
        }
        if d < r && s.multiplicity % 2 == 1 {
            out.push(s.location);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicEstimate {
    pub r: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub n_int: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub quad_error: f64,
    pub nodes_used: usize,
    #[serde(skip)]
    pub counts: CountingBreakdown,
}

/// `T(r, f) = m(r, f) + N(r, f)`.
pub fn characteristic_t(f: &MeromorphicFunction, r: f64, nodes: usize) -> Result<CharacteristicEstimate> {
    let counts = counting(f, r)?;
    let (m, quad_error) = proximity_m(f, r, nodes)?;
    Ok(CharacteristicEstimate {
        r,
        m,
        n_int: counts.big_n,
        t: m + counts.big_n,
        quad_error,
        nodes_used: nodes.max(4) & !1,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub r: f64,
    pub t1: f64,
    pub t2: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `T1/T2` at the largest radius.
    pub final_ratio: f64,
    /// Spread `max − min` of the ratio over the top half of the radii.
    pub drift: f64,
    /// The ratio settled (drift within tolerance) away from 1.
    pub growth_separated: bool,
}

impl GrowthReport {
    /// Ratio settled near 1 on the measured range.
    pub fn tends_to_one(&self) -> bool {
        (self.final_ratio - 1.0).abs() <= DRIFT_TOL && self.drift <= DRIFT_TOL
    }
}

/// Characteristic ratio `T(r, f1)/T(r, f2)` along increasing radii.
pub fn growth_ratio(
    f1: &MeromorphicFunction,
    f2: &MeromorphicFunction,
    radii: &[f64],
    nodes: usize,
) -> Result<GrowthReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("radii must be nonempty and increasing".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let c1 = characteristic_t(f1, r, nodes)?;
        let c2 = characteristic_t(f2, r, nodes)?;
        if c2.t <= c2.quad_error {
            return Err(Error::ZeroCharacteristic {
                r,
                t: c2.t,
                err: c2.quad_error,
            });
        }
        rows.push(GrowthRow {
            r,
            t1: c1.t,
            t2: c2.t,
            ratio: c1.t / c2.t,
        });
    }
    let top = &rows[rows.len() / 2..];
    let hi = top.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = top.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let final_ratio = rows.last().expect("nonempty").ratio;
    let drift = hi - lo;
    Ok(GrowthReport {
        growth_separated: (final_ratio - 1.0).abs() > DRIFT_TOL,
        final_ratio,
        drift,
        rows,
    })
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Linearly spaced radii `a..b` with `n` points.
pub fn radii(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![b];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// CSV with columns `r,m,N,T,n,n_bar,n_odd,n_bar_odd,quad_error`.
pub fn characteristic_csv(rows: &[CharacteristicEstimate]) -> String {
    let mut out = String::from("r,m,N,T,n,n_bar,n_odd,n_bar_odd,quad_error\n");
    for e in rows {
        let c = &e.counts;
        let _ = writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{},{},{},{},{:.3e}",
            e.r, e.m, e.n_int, e.t, c.n, c.n_bar, c.n_odd, c.n_bar_odd, e.quad_error
        );
    }
    out
}
