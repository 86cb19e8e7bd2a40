//! Sample grids in rectangles that keep clear of declared singularities.
//!
//! Grids are deterministic Halton lattices unless a seed is supplied, in
//! which case points are drawn uniformly with ChaCha8.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::meromorphic::{Rect, SingularityLedger};

/// Default clearance between a sample point and any declared singularity.
pub const GUARD: f64 = 0.05;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Point source for a rectangle.
pub struct Sampler {
    rect: Rect,
    index: u64,
    rng: Option<ChaCha8Rng>,
}

impl Sampler {
    pub fn new(rect: Rect, seed: Option<u64>) -> Sampler {
        Sampler {
            rect,
            index: 0,
            rng: seed.map(ChaCha8Rng::seed_from_u64),
        }
    }

    pub fn next_point(&mut self) -> Complex64 {
        let (u, v) = match &mut self.rng {
            Some(rng) => (rng.gen::<f64>(), rng.gen::<f64>()),
            None => {
                // Skip the first entries, which sit on the box edges.
                self.index += 1;
                let i = self.index + 16;
                (radical_inverse(i, 2), radical_inverse(i, 3))
            }
        };
        let r = &self.rect;
        Complex64::new(r.x0 + (r.x1 - r.x0) * u, r.y0 + (r.y1 - r.y0) * v)
    }
}

/// Something a sample point must keep away from: the singularities of
/// `ledger` as seen from `z + shift`.
pub struct Avoid<'a> {
    pub ledger: &'a SingularityLedger,
    pub shift: Complex64,
    pub include_zeros: bool,
}

impl<'a> Avoid<'a> {
    pub fn poles(ledger: &'a SingularityLedger, shift: f64) -> Avoid<'a> {
        Avoid {
            ledger,
            shift: Complex64::new(shift, 0.0),
            include_zeros: false,
        }
    }

    pub fn all(ledger: &'a SingularityLedger, shift: f64) -> Avoid<'a> {
        Avoid {
            ledger,
            shift: Complex64::new(shift, 0.0),
            include_zeros: true,
        }
    }
}

/// Precomputed exclusion set for a rectangle.
pub struct Exclusion {
    points: Vec<Complex64>,
    guard: f64,
}

impl Exclusion {
    pub fn new(rect: &Rect, avoid: &[Avoid<'_>], guard: f64) -> Exclusion {
        let mut points = Vec::new();
        for a in avoid {
            let reach = rect.enclosing_radius() + a.shift.norm() + guard + 1.0;
            for s in a.ledger.expand(reach) {
                if a.include_zeros || s.kind == crate::meromorphic::Kind::Pole {
                    // z + shift = location
                    points.push(s.location - a.shift);
                }
            }
        }
        Exclusion { points, guard }
    }

    pub fn clear(&self, z: Complex64) -> bool {
        self.points.iter().all(|p| (p - z).norm() >= self.guard)
    }

    pub fn nearest(&self, z: Complex64) -> Option<Complex64> {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
    }
}

/// `n` points in `rect`, each at least `guard` away from every avoided
/// singularity.
pub fn regular_points(
    rect: &Rect,
    n: usize,
    avoid: &[Avoid<'_>],
    guard: f64,
    seed: Option<u64>,
) -> Result<Vec<Complex64>> {
    let excl = Exclusion::new(rect, avoid, guard);
    let mut sampler = Sampler::new(*rect, seed);
    let mut out = Vec::with_capacity(n);
    let budget = 200 * n + 1000;
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let z = sampler.next_point();
        if excl.clear(z) {
            out.push(z);
        }
    }
    if out.len() < n {
        return Err(Error::DegenerateSample(format!(
            "only {} of {n} regular points found in the box",
            out.len()
        )));
    }
    Ok(out)
}

/// Seed from the `DN_SEED` environment variable, if set and numeric.
pub fn seed_from_env() -> Option<u64> {
    std::env::var("DN_SEED").ok().and_then(|s| s.trim().parse().ok())
}
