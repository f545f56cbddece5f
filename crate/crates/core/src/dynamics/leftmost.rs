use super::orbit::{Limits, OrbitState};
use super::{in_x0, DynamicsError, Result};
use crate::point_process::{Configuration, MarkedConfiguration, Window, TAG_IMAGE};
use crate::transforms::Transform;

/// Window end `W = max(L, x_r) + k·r` above which no time-0 point can fall below `L`
/// within `k` steps, using only the per-step backward reach.
pub fn leftmost_guarantee(t: &Transform, level: f64, k: u64) -> f64 {
    let reach = t.step_reach();
    level.max(reach.threshold) + k as f64 * reach.r
}

/// One application of the leftmost position map.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftmostStep {
    pub kappa: u64,
    /// `T^κ(t_1(ω))`, the leftmost point of the image.
    pub leftmost: f64,
    /// How far the time-0 process had to be revealed.
    pub revealed_hi: f64,
    pub tracked: usize,
    /// `T_*^κ(ω)` on `(0, max(hi, leftmost)]`.
    pub config: Configuration,
}

/// Output window end: the input window end, widened to contain the new leftmost point.
/// Both ends are determined by the image restricted to the window, so the unrevealed
/// remainder of the image is again a Poisson process beyond it.
fn output_hi(input: &Configuration, leftmost: f64) -> f64 {
    input.window().hi.max(leftmost)
}

fn image_config(input: &Configuration, orbit: &mut OrbitState, hi: f64) -> Result<Configuration> {
    orbit.extend_until(hi)?;
    let points = orbit.image_points_up_to(hi)?;
    let window = Window::half_line(hi)?;
    Ok(Configuration::from_sorted_unchecked(
        input.intensity(),
        window,
        points,
        input.stream().child(TAG_IMAGE).folded(),
    ))
}

fn run_to_return(t: &Transform, c: &Configuration, limits: &Limits) -> Result<(u64, OrbitState)> {
    if c.is_empty() {
        return Err(DynamicsError::PointProcess(crate::point_process::PointProcessError::EmptyConfiguration));
    }
    let mut orbit = OrbitState::new(*t, c.clone(), None, limits)?;
    // base points are sorted, so index 0 is t_1 and stays first after extensions
    for k in 1..=limits.kappa_cap {
        orbit.advance()?;
        let d = orbit.images()[0];
        if orbit.images()[1..].iter().any(|&y| y < d) {
            continue;
        }
        let before = orbit.images().len();
        if orbit.extend_until(d)? && orbit.images()[before..].iter().any(|&y| y < d) {
            continue;
        }
        return Ok((k, orbit));
    }
    Err(DynamicsError::Censored { cap: limits.kappa_cap })
}

/// Leftmost return time: the least `k >= 1` with `t_1(T_*^k ω) = T^k(t_1 ω)`.
///
/// Exact for the infinite process continuing `c` beyond its window.
pub fn kappa(t: &Transform, c: &Configuration, limits: &Limits) -> Result<u64> {
    run_to_return(t, c, limits).map(|(k, _)| k)
}

/// `T_*^{κ(ω)}(ω)`, with bookkeeping.
pub fn leftmost_step(t: &Transform, c: &Configuration, limits: &Limits) -> Result<LeftmostStep> {
    let (kappa, mut orbit) = run_to_return(t, c, limits)?;
    let leftmost = orbit.images()[0];
    let config = image_config(c, &mut orbit, output_hi(c, leftmost))?;
    Ok(LeftmostStep {
        kappa,
        leftmost,
        revealed_hi: orbit.window_hi(),
        tracked: orbit.images().len(),
        config,
    })
}

/// The leftmost position transformation `T_*^κ`.
pub fn leftmost_map(t: &Transform, c: &Configuration, limits: &Limits) -> Result<Configuration> {
    leftmost_step(t, c, limits).map(|s| s.config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedStep {
    /// First return time of `(x, ω)` to `X_0` under `T × T_*`.
    pub steps: u64,
    pub state: MarkedConfiguration,
}

/// The induced map of the Poisson product `T × T_*` on
/// `X_0 = {(x, ω) : ω ∩ (0, x] = ∅}`.
pub fn induced_step(t: &Transform, m: &MarkedConfiguration, limits: &Limits) -> Result<InducedStep> {
    if !in_x0(m)? {
        return Err(DynamicsError::NotInX0);
    }
    let mut orbit = OrbitState::new(*t, m.config.clone(), Some(m.distinguished), limits)?;
    for step in 1..=limits.kappa_cap {
        orbit.advance()?;
        let x = orbit.distinguished_image().expect("orbit carries the distinguished point");
        if orbit.images().iter().any(|&y| y <= x) {
            continue;
        }
        orbit.extend_until(x)?;
        if orbit.images().iter().any(|&y| y <= x) {
            continue;
        }
        let hi = output_hi(&m.config, x);
        let config = image_config(&m.config, &mut orbit, hi)?;
        return Ok(InducedStep { steps: step, state: MarkedConfiguration { distinguished: x, config } });
    }
    Err(DynamicsError::Censored { cap: limits.kappa_cap })
}
