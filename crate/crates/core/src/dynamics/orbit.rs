use super::{DynamicsError, Result};
use crate::point_process::{Configuration, Side};
use crate::transforms::Transform;

/// Resource caps for lazy orbit computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Largest return time searched before a replica is reported as censored.
    pub kappa_cap: u64,
    /// Largest window, in expected points (`λ · hi`), the sampler may reveal.
    pub window_budget: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { kappa_cap: 100_000, window_budget: 1e6 }
    }
}

/// One step of the certified lower bound on images of unrevealed points.
///
/// If every unrevealed point currently sits at or above `bound`, every one of them sits at
/// or above the returned value after one more application of `t`.
pub(crate) fn frontier_step(t: &Transform, bound: f64) -> f64 {
    if let Some(m) = t.monotone_from() {
        if bound >= m {
            // T is non-decreasing on [bound, inf), and floating-point evaluation of the
            // closed form preserves that order.
            return t.apply(bound).unwrap_or(f64::NEG_INFINITY);
        }
    }
    let reach = t.step_reach();
    if bound >= reach.threshold {
        bound - reach.r
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn frontier_after(t: &Transform, start: f64, steps: u64) -> f64 {
    let mut b = start;
    for _ in 0..steps {
        if b == f64::NEG_INFINITY {
            break;
        }
        b = frontier_step(t, b);
    }
    b
}

/// Lazy orbit of a time-0 half-line configuration (and optionally a distinguished point)
/// under `T`.
///
/// `images[i]` is always `T^step(base.points[i])`. Every time-0 point not yet revealed
/// lies above `base.window.hi`, and its image after `step` steps is at least `frontier`.
#[derive(Debug, Clone)]
pub struct OrbitState {
    transform: Transform,
    base: Configuration,
    images: Vec<f64>,
    distinguished: Option<(f64, f64)>,
    step: u64,
    frontier: f64,
    max_hi: f64,
}

impl OrbitState {
    pub fn new(
        transform: Transform,
        base: Configuration,
        distinguished: Option<f64>,
        limits: &Limits,
    ) -> Result<Self> {
        if !transform.supports_leftmost() {
            return Err(DynamicsError::UnsupportedTransform(transform.to_string()));
        }
        let w = base.window();
        if w.side != Side::HalfLine || w.lo != 0.0 {
            return Err(DynamicsError::NotAnchored);
        }
        let max_hi = limits.window_budget / base.intensity();
        Ok(Self {
            transform,
            images: base.points().to_vec(),
            frontier: w.hi,
            base,
            distinguished: distinguished.map(|x| (x, x)),
            step: 0,
            max_hi,
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn base(&self) -> &Configuration {
        &self.base
    }

    pub fn images(&self) -> &[f64] {
        &self.images
    }

    pub fn distinguished_image(&self) -> Option<f64> {
        self.distinguished.map(|(_, y)| y)
    }

    pub fn frontier(&self) -> f64 {
        self.frontier
    }

    pub fn window_hi(&self) -> f64 {
        self.base.window().hi
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Applies `T` to every tracked point.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.transform;
        let k = self.step;
        for v in self.images.iter_mut() {
            *v = t.apply_at_step(*v, k)?;
        }
        if let Some((_, y)) = self.distinguished.as_mut() {
            *y = t.apply_at_step(*y, k)?;
        }
        self.frontier = frontier_step(&t, self.frontier);
        self.step += 1;
        Ok(())
    }

    /// Reveals more of the time-0 process until every unrevealed image is strictly above
    /// `level`. Returns whether anything new was revealed.
    pub fn extend_until(&mut self, level: f64) -> Result<bool> {
        let mut grew = false;
        while !(self.frontier > level) {
            let hi = self.base.window().hi;
            if hi >= self.max_hi {
                return Err(DynamicsError::WindowBudgetExceeded {
                    required: level,
                    budget: self.max_hi,
                });
            }
            let new_hi = (2.0 * hi).max(hi + 1.0 / self.base.intensity()).min(self.max_hi);
            let old_len = self.base.len();
            self.base = self.base.extend(new_hi)?;
            let t = self.transform;
            for &p in &self.base.points()[old_len..] {
                let mut y = p;
                for k in 0..self.step {
                    y = t.apply_at_step(y, k)?;
                }
                self.images.push(y);
            }
            self.frontier = frontier_after(&t, new_hi, self.step);
            grew = true;
        }
        Ok(grew)
    }

    /// The exact minimum over all images (distinguished point excluded), revealing
    /// more of the process as needed.
    pub fn certified_minimum(&mut self) -> Result<f64> {
        loop {
            let m = self.images.iter().copied().fold(f64::INFINITY, f64::min);
            if m.is_finite() && self.frontier > m {
                return Ok(m);
            }
            let level = if m.is_finite() { m } else { self.frontier.max(0.0) };
            self.extend_until(level)?;
        }
    }

    /// Sorted images in `(0, hi]`, which the caller has certified complete.
    pub(crate) fn image_points_up_to(&self, hi: f64) -> Result<Vec<f64>> {
        debug_assert!(self.frontier > hi);
        let mut pts: Vec<f64> = self.images.iter().copied().filter(|&y| y <= hi).collect();
        pts.sort_by(f64::total_cmp);
        if pts.windows(2).any(|w| w[0] == w[1]) {
            return Err(DynamicsError::CoincidentImages);
        }
        Ok(pts)
    }
}
