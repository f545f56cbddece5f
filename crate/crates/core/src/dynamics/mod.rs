//! Poisson suspension `T_*`, the Poisson product `T × T_*`, the factor maps
//! `π(x, ω) = {x} ∪ ω` and `π_0`, the leftmost return time `κ` and leftmost position map
//! `T_*^κ`, the induced map on `X_0`, and the Z^2 translation example.
//!
//! All orbit computations run on an [`OrbitState`], which reveals the time-0 process
//! lazily. A comparison against the image of an unrevealed point is only ever decided
//! after the certified frontier (a lower bound on all such images) has moved past it, so
//! every answer is the answer for the infinite process.

mod leftmost;
mod orbit;

pub use leftmost::{
    induced_step, kappa, leftmost_guarantee, leftmost_map, leftmost_step, InducedStep,
    LeftmostStep,
};
pub use orbit::{Limits, OrbitState};

pub use crate::point_process::MarkedConfiguration;
use crate::point_process::{
    sample, Configuration, PointProcessError, Side, StreamKey, Window, TAG_MARK,
};
use crate::transforms::{Transform, TransformError};
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    PointProcess(#[from] PointProcessError),
    #[error("no leftmost return within {cap} steps")]
    Censored { cap: u64 },
    #[error("certifying level {required} needs a window beyond the budget {budget}")]
    WindowBudgetExceeded { required: f64, budget: f64 },
    #[error("marked configuration is not in X_0")]
    NotInX0,
    #[error("{0} has no half-line leftmost structure")]
    UnsupportedTransform(String),
    #[error("configuration window must be a half-line window starting at 0")]
    NotAnchored,
    #[error("two points landed on the same image")]
    CoincidentImages,
    #[error("invariant event membership changed under group element ({m}, {n})")]
    InvarianceBroken { m: i64, n: i64 },
}

impl DynamicsError {
    /// Failures a Monte Carlo harness resolves by drawing the next replica: the
    /// measure-zero events of hitting the singular set or of coinciding points.
    pub fn is_resample(&self) -> bool {
        matches!(
            self,
            DynamicsError::Transform(TransformError::SingularPoint { .. })
                | DynamicsError::CoincidentImages
        )
    }
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// `T_*(ω) = {T(x) : x ∈ ω}` on the revealed points, sorted. Images near the top of
/// the window are not complete for the infinite process; see [`OrbitState`].
pub fn suspend(t: &Transform, c: &Configuration) -> Result<Vec<f64>> {
    let mut out = c
        .points()
        .iter()
        .map(|&x| t.apply(x))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// `π(x, ω) = {x} ∪ ω`.
pub fn union_mark(x: f64, c: &Configuration) -> Result<Configuration> {
    union_all(&[x], c)
}

/// `π_(j)(x_1, …, x_j, ω) = {x_1, …, x_j} ∪ ω`.
pub fn union_all(xs: &[f64], c: &Configuration) -> Result<Configuration> {
    let w = c.window();
    if let Some(&x) = xs.iter().find(|&&x| !w.contains(x)) {
        return Err(PointProcessError::WindowTooSmall { lo: x, hi: x, win_lo: w.lo, win_hi: w.hi }.into());
    }
    let mut points = c.points().to_vec();
    points.extend_from_slice(xs);
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(Configuration::from_sorted_unchecked(c.intensity(), w, points, c.stream().clone()))
}

/// Membership in `X_0 = {(x, ω) : ω ∩ (0, x] = ∅}`.
pub fn in_x0(m: &MarkedConfiguration) -> Result<bool> {
    let w = m.config.window();
    if w.side != Side::HalfLine || w.lo != 0.0 {
        return Err(DynamicsError::NotAnchored);
    }
    if !(m.distinguished > 0.0) {
        return Err(PointProcessError::WindowTooSmall { lo: 0.0, hi: m.distinguished, win_lo: w.lo, win_hi: w.hi }.into());
    }
    Ok(m.config.count(0.0, m.distinguished)? == 0)
}

/// A sample of `μ_0 = (μ × μ*)|_{X_0}`: the distinguished point has density
/// `λ e^{-λx}`, and the configuration is Poisson beyond it. The window is
/// `(0, max(w_hi, x)]`.
pub fn sample_mu0(intensity: f64, stream: &StreamKey, w_hi: f64) -> Result<MarkedConfiguration> {
    let exp = Exp::new(intensity).map_err(|_| PointProcessError::InvalidIntensity(intensity))?;
    let mut rng = stream.child(TAG_MARK).rng();
    let mut x = exp.sample(&mut rng);
    while !(x > 0.0) {
        x = exp.sample(&mut rng);
    }
    let window = Window::half_line(w_hi.max(x))?;
    let full = sample(intensity, window, stream)?;
    let beyond: Vec<f64> = full.points().iter().copied().filter(|&p| p > x).collect();
    let config = Configuration::from_sorted_unchecked(intensity, window, beyond, stream.clone());
    Ok(MarkedConfiguration { distinguished: x, config })
}

/// `π_0 = π|_{X_0}`.
pub fn pi0(m: &MarkedConfiguration) -> Result<Configuration> {
    if !in_x0(m)? {
        return Err(DynamicsError::NotInX0);
    }
    union_mark(m.distinguished, &m.config)
}

/// `π_0^{-1}(ω) = (t_1(ω), ω \ {t_1(ω)})`.
pub fn pi0_inv(c: &Configuration) -> Result<MarkedConfiguration> {
    let t1 = c.leftmost()?;
    let rest = c.points()[1..].to_vec();
    let config = Configuration::from_sorted_unchecked(c.intensity(), c.window(), rest, c.stream().clone());
    Ok(MarkedConfiguration { distinguished: t1, config })
}

/// Membership of `m` in `E = {(x, ω) : ω ∩ (x - 1, x + 1) = ∅}`, checked to be the same
/// after every group element `(m, n)` of the Z^2 action `x ↦ x + a m + b n` (applied to
/// the distinguished point and to every configuration point).
///
/// The interval is read as the open interval of radius 1 around `x`.
pub fn z2_invariant_event(a: f64, b: f64, m: &MarkedConfiguration, grid: &[(i64, i64)]) -> Result<bool> {
    let action = Transform::new(
        crate::transforms::TransformKind::Z2Translation { a, b },
        crate::transforms::Domain::FullLine,
    )?;
    let reach = grid
        .iter()
        .map(|&(i, j)| (a * i as f64 + b * j as f64).abs())
        .fold(0.0, f64::max);
    let w = m.config.window();
    let x = m.distinguished;
    if !w.covers(x - 1.0 - reach, x + 1.0 + reach) {
        return Err(PointProcessError::WindowTooSmall {
            lo: x - 1.0 - reach,
            hi: x + 1.0 + reach,
            win_lo: w.lo,
            win_hi: w.hi,
        }
        .into());
    }
    fn member(x: f64, mut pts: impl Iterator<Item = f64>) -> bool {
        pts.all(|p| (p - x).abs() >= 1.0)
    }
    let base = member(x, m.config.points().iter().copied());
    for &(i, j) in grid {
        let y = action.act_z2(i, j, x)?;
        let moved = m.config.points().iter().map(|&p| action.act_z2(i, j, p).expect("Z^2 action"));
        if member(y, moved) != base {
            return Err(DynamicsError::InvarianceBroken { m: i, n: j });
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(points: &[f64], lo: f64, hi: f64, side: Side) -> Configuration {
        Configuration::from_parts(1.0, Window::new(lo, hi, side).unwrap(), points.to_vec(), StreamKey::new(1)).unwrap()
    }

    #[test]
    fn suspension_examples() {
        let c = cfg(&[0.5, 2.0], 0.0, 3.0, Side::HalfLine);
        assert_eq!(suspend(&Transform::translation(1.0), &c).unwrap(), vec![1.5, 3.0]);
        let c = cfg(&[0.6, 0.9], 0.0, 1.0, Side::HalfLine);
        let img = suspend(&Transform::boole_unsigned(), &c).unwrap();
        assert!((img[0] - 0.211111).abs() < 1e-6 && (img[1] - 1.066667).abs() < 1e-6);
        let c = cfg(&[1.0], 0.0, 3.0, Side::HalfLine);
        assert!(suspend(&Transform::boole_unsigned(), &c).unwrap_err().is_resample());
    }

    #[test]
    fn union_is_set_union() {
        let c = cfg(&[2.0, 3.0], 0.0, 4.0, Side::HalfLine);
        assert_eq!(union_mark(0.5, &c).unwrap().points(), &[0.5, 2.0, 3.0]);
        assert_eq!(union_mark(2.0, &c).unwrap().points(), &[2.0, 3.0]);
        assert!(union_mark(5.0, &c).is_err());
    }

    #[test]
    fn x0_membership() {
        let m = MarkedConfiguration { distinguished: 1.0, config: cfg(&[2.0, 3.0], 0.0, 4.0, Side::HalfLine) };
        assert!(in_x0(&m).unwrap());
        let m = MarkedConfiguration { distinguished: 1.0, config: cfg(&[0.5, 3.0], 0.0, 4.0, Side::HalfLine) };
        assert!(!in_x0(&m).unwrap());
        assert!(pi0(&m).is_err());
        let m = MarkedConfiguration { distinguished: 5.0, config: cfg(&[2.0], 0.0, 4.0, Side::HalfLine) };
        assert!(in_x0(&m).is_err());
    }

    #[test]
    fn pi0_round_trips() {
        let c = cfg(&[0.5, 2.0, 3.0], 0.0, 4.0, Side::HalfLine);
        let m = pi0_inv(&c).unwrap();
        assert_eq!(m.distinguished, 0.5);
        assert_eq!(m.config.points(), &[2.0, 3.0]);
        assert_eq!(pi0(&m).unwrap(), c);
        for i in 0..1000 {
            let s = StreamKey::new(4).child(i);
            let m = sample_mu0(1.0, &s, 3.0).unwrap();
            assert!(in_x0(&m).unwrap());
            assert_eq!(pi0_inv(&pi0(&m).unwrap()).unwrap(), m);
            let c = sample(1.0, Window::half_line(3.0).unwrap(), &s).unwrap();
            if !c.is_empty() {
                assert_eq!(pi0(&pi0_inv(&c).unwrap()).unwrap(), c);
            }
        }
        assert!(pi0_inv(&cfg(&[], 0.0, 1.0, Side::HalfLine)).is_err());
    }

    #[test]
    fn z2_examples() {
        let grid: Vec<(i64, i64)> = (-2..=2).flat_map(|i| (-2..=2).map(move |j| (i, j))).collect();
        let sqrt2 = 2f64.sqrt();
        let m = MarkedConfiguration { distinguished: 0.0, config: cfg(&[-3.0, 2.0], -10.0, 10.0, Side::FullLine) };
        assert!(z2_invariant_event(1.0, sqrt2, &m, &[(1, 1)]).unwrap());
        assert!(z2_invariant_event(1.0, sqrt2, &m, &grid).unwrap());
        let m = MarkedConfiguration { distinguished: 0.0, config: cfg(&[0.5], -10.0, 10.0, Side::FullLine) };
        assert!(!z2_invariant_event(1.0, sqrt2, &m, &grid).unwrap());
        let m = MarkedConfiguration { distinguished: 0.0, config: cfg(&[0.5], -2.0, 2.0, Side::FullLine) };
        assert!(z2_invariant_event(1.0, sqrt2, &m, &grid).is_err());
    }
}
