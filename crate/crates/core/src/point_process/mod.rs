//! Exact, lazily extendable Poisson processes with intensity `λ·Lebesgue`.
//!
//! A [`Configuration`] is the restriction of one infinite realization to a window
//! `(lo, hi]`. The realization itself is a deterministic function of `(λ, side, stream)`:
//! the line is cut into fixed blocks of expected mass [`BLOCK_MASS`], and block `b` is
//! sampled from its own child stream. Revealing more of the process (see
//! [`Configuration::extend`]) therefore never changes points already revealed, and any
//! two windows of the same stream agree on their overlap regardless of the order in
//! which they were explored.
//!
//! Half-line blocks are filled by exponential spacings from the block's left end;
//! full-line blocks by a Poisson count followed by uniform placement.

mod stream;

pub use stream::StreamKey;
use stream::zigzag;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Expected number of points per sampling block.
pub const BLOCK_MASS: f64 = 4.0;

// Top-level child indices under a configuration's stream.
const TAG_BLOCK: u64 = 0;
const TAG_CONDITIONED: u64 = 1;
pub(crate) const TAG_MARK: u64 = 2;
pub(crate) const TAG_IMAGE: u64 = 3;

const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointProcessError {
    #[error("invalid window ({lo}, {hi}] on {side}")]
    InvalidWindow { lo: f64, hi: f64, side: Side },
    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),
    #[error("interval ({lo}, {hi}] is not inside the window ({win_lo}, {win_hi}]")]
    WindowTooSmall { lo: f64, hi: f64, win_lo: f64, win_hi: f64 },
    #[error("configuration has no points")]
    EmptyConfiguration,
    #[error("leftmost point requires a half-line window anchored at 0")]
    NotAnchored,
    #[error("extension target {new_hi} does not exceed the window end {hi}")]
    BadExtension { hi: f64, new_hi: f64 },
    #[error("invalid cylinder event: {0}")]
    InvalidCylinder(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("sampler produced coincident points {MAX_ATTEMPTS} times in a row")]
    Degenerate,
}

pub type Result<T> = std::result::Result<T, PointProcessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    HalfLine,
    FullLine,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::HalfLine => "half_line",
            Side::FullLine => "full_line",
        })
    }
}

/// Half-open window `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub side: Side,
}

impl Window {
    pub fn new(lo: f64, hi: f64, side: Side) -> Result<Self> {
        let ok = lo.is_finite()
            && hi.is_finite()
            && lo < hi
            && (side == Side::FullLine || lo >= 0.0);
        if ok {
            Ok(Self { lo, hi, side })
        } else {
            Err(PointProcessError::InvalidWindow { lo, hi, side })
        }
    }

    pub fn half_line(hi: f64) -> Result<Self> {
        Self::new(0.0, hi, Side::HalfLine)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.lo <= lo && hi <= self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A finite, sorted realization on a window together with the stream that continues it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration")]
pub struct Configuration {
    #[serde(rename = "lambda")]
    intensity: f64,
    window: Window,
    points: Vec<f64>,
    stream: StreamKey,
}

#[derive(Deserialize)]
struct RawConfiguration {
    lambda: f64,
    window: Window,
    points: Vec<f64>,
    stream: StreamKey,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = PointProcessError;

    fn try_from(raw: RawConfiguration) -> Result<Self> {
        let window = Window::new(raw.window.lo, raw.window.hi, raw.window.side)?;
        Configuration::from_parts(raw.lambda, window, raw.points, raw.stream)
    }
}

impl Configuration {
    /// Assembles a configuration, checking every invariant.
    pub fn from_parts(
        intensity: f64,
        window: Window,
        points: Vec<f64>,
        stream: StreamKey,
    ) -> Result<Self> {
        check_intensity(intensity)?;
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(PointProcessError::InvalidConfiguration(format!(
                "point {p} outside ({}, {}]",
                window.lo, window.hi
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PointProcessError::InvalidConfiguration(
                "points must be strictly increasing".into(),
            ));
        }
        Ok(Self { intensity, window, points, stream })
    }

    pub(crate) fn from_sorted_unchecked(
        intensity: f64,
        window: Window,
        points: Vec<f64>,
        stream: StreamKey,
    ) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(points.iter().all(|p| window.contains(*p)));
        Self { intensity, window, points, stream }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn stream(&self) -> &StreamKey {
        &self.stream
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reveals the same realization on `(hi, new_hi]`; existing points are kept verbatim.
    pub fn extend(&self, new_hi: f64) -> Result<Self> {
        if !(new_hi > self.window.hi) || !new_hi.is_finite() {
            return Err(PointProcessError::BadExtension { hi: self.window.hi, new_hi });
        }
        let fresh = realization(self.intensity, self.window.side, &self.stream, self.window.hi, new_hi)?;
        let mut points = self.points.clone();
        points.extend(fresh);
        let window = Window { hi: new_hi, ..self.window };
        Ok(Self { points, window, ..self.clone() })
    }

    /// Number of points in `(lo, hi]`.
    pub fn count(&self, lo: f64, hi: f64) -> Result<usize> {
        if !(lo < hi) || !self.window.covers(lo, hi) {
            return Err(PointProcessError::WindowTooSmall {
                lo,
                hi,
                win_lo: self.window.lo,
                win_hi: self.window.hi,
            });
        }
        let start = self.points.partition_point(|&p| p <= lo);
        let end = self.points.partition_point(|&p| p <= hi);
        Ok(end - start)
    }

    /// The smallest point. Exact for the infinite process because the window starts at 0.
    pub fn leftmost(&self) -> Result<f64> {
        if self.window.side != Side::HalfLine || self.window.lo != 0.0 {
            return Err(PointProcessError::NotAnchored);
        }
        self.points.first().copied().ok_or(PointProcessError::EmptyConfiguration)
    }

    /// Extends by doubling until the window holds a point, then returns the leftmost one.
    pub fn leftmost_of_process(&self) -> Result<(f64, Configuration)> {
        let mut c = self.clone();
        while c.is_empty() {
            c = c.extend(c.window.hi * 2.0)?;
        }
        Ok((c.leftmost()?, c))
    }

    pub(crate) fn with_points(&self, points: Vec<f64>) -> Self {
        Self { points, ..self.clone() }
    }
}

/// A distinguished point paired with a configuration: a sample of `X × X*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedConfiguration {
    pub distinguished: f64,
    pub config: Configuration,
}

/// `⋂_k [ |ω ∩ (a_{k-1}, a_k]| = n_k ]` with `a_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderEvent {
    breakpoints: Vec<f64>,
    counts: Vec<u32>,
}

impl CylinderEvent {
    pub fn new(breakpoints: Vec<f64>, counts: Vec<u32>) -> Result<Self> {
        let bad = |m: &str| Err(PointProcessError::InvalidCylinder(m.to_string()));
        if breakpoints.len() < 2 || breakpoints.len() != counts.len() + 1 {
            return bad("need N+1 breakpoints for N counts, N >= 1");
        }
        if breakpoints[0] != 0.0 {
            return bad("first breakpoint must be 0");
        }
        if breakpoints.iter().any(|a| !a.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must be finite and strictly increasing");
        }
        Ok(Self { breakpoints, counts })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("validated non-empty")
    }

    pub fn contains(&self, c: &Configuration) -> Result<bool> {
        for (w, &n) in self.breakpoints.windows(2).zip(&self.counts) {
            if c.count(w[0], w[1])? != n as usize {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every count vector with total at most `max_total` over the given breakpoints.
    pub fn battery(breakpoints: &[f64], max_total: u32) -> Result<Vec<Self>> {
        let cells = breakpoints.len().saturating_sub(1);
        let mut out = Vec::new();
        let mut counts = vec![0u32; cells];
        fn rec(
            i: usize,
            left: u32,
            counts: &mut Vec<u32>,
            bp: &[f64],
            out: &mut Vec<CylinderEvent>,
        ) -> Result<()> {
            if i == counts.len() {
                out.push(CylinderEvent::new(bp.to_vec(), counts.clone())?);
                return Ok(());
            }
            for n in 0..=left {
                counts[i] = n;
                rec(i + 1, left - n, counts, bp, out)?;
            }
            counts[i] = 0;
            Ok(())
        }
        if cells == 0 {
            return Err(PointProcessError::InvalidCylinder("no cells".into()));
        }
        rec(0, max_total, &mut counts, breakpoints, &mut out)?;
        Ok(out)
    }
}

/// `exp(-λ a_N) ∏_k (λ (a_k - a_{k-1}))^{n_k} / n_k!`
pub fn cylinder_probability(event: &CylinderEvent, intensity: f64) -> f64 {
    let mut log_p = -intensity * event.end();
    let mut direct = 1.0f64;
    for (w, &n) in event.breakpoints.windows(2).zip(&event.counts) {
        let mass = intensity * (w[1] - w[0]);
        for i in 1..=n {
            direct *= mass / i as f64;
        }
        if n > 0 {
            log_p += n as f64 * mass.ln() - ln_factorial(n);
        }
    }
    if direct.is_finite() && direct > 1e-300 {
        (-intensity * event.end()).exp() * direct
    } else {
        log_p.exp()
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn check_intensity(intensity: f64) -> Result<()> {
    if intensity > 0.0 && intensity.is_finite() {
        Ok(())
    } else {
        Err(PointProcessError::InvalidIntensity(intensity))
    }
}

fn block_len(intensity: f64) -> f64 {
    BLOCK_MASS / intensity
}

fn block_points(intensity: f64, side: Side, stream: &StreamKey, block: i64) -> Result<Vec<f64>> {
    let len = block_len(intensity);
    let lo = block as f64 * len;
    let hi = (block + 1) as f64 * len;
    'attempt: for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream.children(&[TAG_BLOCK, zigzag(block), attempt]).rng();
        let mut pts = Vec::new();
        match side {
            Side::HalfLine => {
                let gap = Exp::new(intensity).expect("validated intensity");
                let mut x = lo;
                loop {
                    let next = x + gap.sample(&mut rng);
                    if next > hi {
                        break;
                    }
                    if next <= x {
                        continue 'attempt;
                    }
                    pts.push(next);
                    x = next;
                }
            }
            Side::FullLine => {
                let n = Poisson::new(BLOCK_MASS).expect("positive mean").sample(&mut rng) as usize;
                for _ in 0..n {
                    let u = 1.0 - rng.gen::<f64>();
                    let p = lo + (hi - lo) * u;
                    if !(p > lo && p <= hi) {
                        continue 'attempt;
                    }
                    pts.push(p);
                }
                pts.sort_by(f64::total_cmp);
                if pts.windows(2).any(|w| w[0] == w[1]) {
                    continue 'attempt;
                }
            }
        }
        return Ok(pts);
    }
    Err(PointProcessError::Degenerate)
}

/// Points of the realization `(λ, side, stream)` in `(lo, hi]`, sorted.
fn realization(intensity: f64, side: Side, stream: &StreamKey, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let len = block_len(intensity);
    let mut first = (lo / len).floor() as i64 - 1;
    if side == Side::HalfLine {
        first = first.max(0);
    }
    let last = (hi / len).ceil() as i64;
    let mut out = Vec::new();
    for b in first..=last {
        out.extend(block_points(intensity, side, stream, b)?.into_iter().filter(|&p| lo < p && p <= hi));
    }
    Ok(out)
}

/// Poisson(λ·Lebesgue) restricted to `window`.
pub fn sample(intensity: f64, window: Window, stream: &StreamKey) -> Result<Configuration> {
    check_intensity(intensity)?;
    let points = realization(intensity, window.side, stream, window.lo, window.hi)?;
    Ok(Configuration::from_sorted_unchecked(intensity, window, points, stream.clone()))
}

fn uniform_points(lo: f64, hi: f64, j: usize, stream: &StreamKey) -> Result<Vec<f64>> {
    'attempt: for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream.children(&[TAG_CONDITIONED, attempt]).rng();
        let mut pts = Vec::with_capacity(j);
        for _ in 0..j {
            let p = lo + (hi - lo) * (1.0 - rng.gen::<f64>());
            if !(p > lo && p <= hi) || pts.contains(&p) {
                continue 'attempt;
            }
            pts.push(p);
        }
        return Ok(pts);
    }
    Err(PointProcessError::Degenerate)
}

pub(crate) fn uniform_point(lo: f64, hi: f64, stream: &StreamKey) -> Result<f64> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream.child(attempt).rng();
        let p = lo + (hi - lo) * (1.0 - rng.gen::<f64>());
        if p > lo && p <= hi {
            return Ok(p);
        }
    }
    Err(PointProcessError::Degenerate)
}

fn check_subset(b: (f64, f64), window: Window) -> Result<()> {
    if !(b.0 < b.1) || !window.covers(b.0, b.1) {
        return Err(PointProcessError::WindowTooSmall {
            lo: b.0,
            hi: b.1,
            win_lo: window.lo,
            win_hi: window.hi,
        });
    }
    Ok(())
}

/// The Poisson process on `window \ b` (the realization with the `b` points removed).
fn sample_outside(intensity: f64, b: (f64, f64), window: Window, stream: &StreamKey) -> Result<Configuration> {
    check_subset(b, window)?;
    let c = sample(intensity, window, stream)?;
    let kept = c.points.iter().copied().filter(|&p| !(b.0 < p && p <= b.1)).collect();
    Ok(c.with_points(kept))
}

/// Poisson process conditioned to have exactly `j` points in `b = (lo, hi]`:
/// `j` i.i.d. uniforms on `b` plus an independent Poisson sample on `window \ b`.
pub fn sample_conditioned(
    b: (f64, f64),
    j: usize,
    intensity: f64,
    window: Window,
    stream: &StreamKey,
) -> Result<Configuration> {
    let outside = sample_outside(intensity, b, window, stream)?;
    let inside = uniform_points(b.0, b.1, j, stream)?;
    let mut points = outside.points.clone();
    points.extend(inside);
    points.sort_by(f64::total_cmp);
    Ok(outside.with_points(points))
}

/// A uniform point of `b` paired with an independent conditioned process (`μ̂_{B,j}`).
pub fn sample_hat(
    b: (f64, f64),
    j: usize,
    intensity: f64,
    window: Window,
    stream: &StreamKey,
) -> Result<MarkedConfiguration> {
    let config = sample_conditioned(b, j, intensity, window, stream)?;
    let distinguished = uniform_point(b.0, b.1, &stream.child(TAG_MARK))?;
    Ok(MarkedConfiguration { distinguished, config })
}

/// `j` i.i.d. uniforms on `b` (in generation order) and a Poisson sample on
/// `window \ b` (`μ̃_{B,j}`).
pub fn sample_tilde(
    b: (f64, f64),
    j: usize,
    intensity: f64,
    window: Window,
    stream: &StreamKey,
) -> Result<(Vec<f64>, Configuration)> {
    let outside = sample_outside(intensity, b, window, stream)?;
    let inside = uniform_points(b.0, b.1, j, stream)?;
    Ok((inside, outside))
}
