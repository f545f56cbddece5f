//! Catalog of Lebesgue-measure-preserving maps of the half-line and the line.
//!
//! Every catalog entry evaluates in closed form, inverts branch by branch, and carries a
//! per-step backward-reach bound `(r, x_r)`: for `x >= x_r`, `T(x) >= x - r`. The lazy
//! samplers in [`crate::dynamics`] use the bound (and, where available, monotonicity on
//! `[x_r, inf)`) to decide how much of the time-0 process must be revealed.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Distance from a singular point at which an orbit is declared dead.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("orbit hit the singular set at x = {x} (step {step})")]
    SingularPoint { x: f64, step: u64 },
    #[error("x = {x} lies outside the domain {domain}")]
    DomainError { x: f64, domain: Domain },
    #[error("y = {y} lies on a branch boundary or outside the range")]
    NotInvertibleHere { y: f64 },
    #[error("invalid transform: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `(0, inf)`
    HalfLine,
    /// The whole real line.
    FullLine,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::HalfLine => f.write_str("(0,inf)"),
            Domain::FullLine => f.write_str("R"),
        }
    }
}

impl Domain {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Domain::HalfLine => x > 0.0 && x.is_finite(),
            Domain::FullLine => x.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    /// `x - 1/x` on the line.
    BooleSigned,
    /// `|x - 1/x|` on the half-line.
    BooleUnsigned,
    /// `floor(x) + (2x mod 1) - 1 + 2*1{x mod 1 in (0, 1/2]}` on the line.
    RandomWalk,
    Translation { c: f64 },
    /// The Z^2 action `x + a*m + b*n`; as a single map it is the `(1, 0)` generator.
    Z2Translation { a: f64, b: f64 },
}

/// Backward-reach bound: for `x >= threshold`, `T(x) >= x - r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReach {
    pub r: f64,
    pub threshold: f64,
}

/// One solution of `T(x) = y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimageBranch {
    pub x: f64,
    /// `|T'(x)|`
    pub deriv_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub kind: TransformKind,
    pub domain: Domain,
}

impl Transform {
    pub fn new(kind: TransformKind, domain: Domain) -> Result<Self, TransformError> {
        let ok = match kind {
            TransformKind::BooleSigned | TransformKind::RandomWalk => domain == Domain::FullLine,
            TransformKind::BooleUnsigned => domain == Domain::HalfLine,
            TransformKind::Translation { c } => {
                c.is_finite() && (domain == Domain::FullLine || c >= 0.0)
            }
            TransformKind::Z2Translation { a, b } => {
                domain == Domain::FullLine && a.is_finite() && b.is_finite()
            }
        };
        if ok {
            Ok(Self { kind, domain })
        } else {
            Err(TransformError::Invalid(format!("{kind:?} on {domain}")))
        }
    }

    pub fn boole_signed() -> Self {
        Self { kind: TransformKind::BooleSigned, domain: Domain::FullLine }
    }

    pub fn boole_unsigned() -> Self {
        Self { kind: TransformKind::BooleUnsigned, domain: Domain::HalfLine }
    }

    pub fn random_walk() -> Self {
        Self { kind: TransformKind::RandomWalk, domain: Domain::FullLine }
    }

    /// Translation by `c`; lives on the half-line when `c >= 0`, on the line otherwise.
    pub fn translation(c: f64) -> Self {
        let domain = if c >= 0.0 { Domain::HalfLine } else { Domain::FullLine };
        Self { kind: TransformKind::Translation { c }, domain }
    }

    pub fn z2_translation(a: f64, b: f64) -> Self {
        Self { kind: TransformKind::Z2Translation { a, b }, domain: Domain::FullLine }
    }

    pub fn step_reach(&self) -> StepReach {
        match self.kind {
            TransformKind::BooleSigned | TransformKind::BooleUnsigned => {
                StepReach { r: 1.0, threshold: 1.0 }
            }
            TransformKind::RandomWalk => StepReach { r: 1.5, threshold: 0.0 },
            TransformKind::Translation { c } => StepReach { r: c.abs(), threshold: 0.0 },
            TransformKind::Z2Translation { a, .. } => StepReach { r: a.abs(), threshold: 0.0 },
        }
    }

    /// Left end of a ray `[m, inf)` on which `T` is non-decreasing and maps into
    /// `[m, inf) ∪ (domain below m)`, if one exists.
    pub fn monotone_from(&self) -> Option<f64> {
        match self.kind {
            TransformKind::BooleSigned | TransformKind::BooleUnsigned => Some(1.0),
            TransformKind::Translation { .. } | TransformKind::Z2Translation { .. } => {
                Some(match self.domain {
                    Domain::HalfLine => 0.0,
                    Domain::FullLine => f64::NEG_INFINITY,
                })
            }
            TransformKind::RandomWalk => None,
        }
    }

    fn check_singular(&self, x: f64, step: u64) -> Result<(), TransformError> {
        let near = match self.kind {
            TransformKind::BooleSigned => x.abs() <= SINGULAR_TOLERANCE,
            TransformKind::BooleUnsigned => (x - 1.0).abs() <= SINGULAR_TOLERANCE,
            _ => false,
        };
        if near {
            Err(TransformError::SingularPoint { x, step })
        } else {
            Ok(())
        }
    }

    /// Closed-form evaluation of `T(x)`.
    pub fn apply(&self, x: f64) -> Result<f64, TransformError> {
        self.apply_at_step(x, 0)
    }

    #[inline]
    pub(crate) fn apply_at_step(&self, x: f64, step: u64) -> Result<f64, TransformError> {
        if !self.domain.contains(x) {
            return Err(TransformError::DomainError { x, domain: self.domain });
        }
        self.check_singular(x, step)?;
        let y = match self.kind {
            TransformKind::BooleSigned => x - 1.0 / x,
            TransformKind::BooleUnsigned => (x - 1.0 / x).abs(),
            TransformKind::RandomWalk => random_walk(x),
            TransformKind::Translation { c } => x + c,
            TransformKind::Z2Translation { a, .. } => x + a,
        };
        if !self.domain.contains(y) {
            // BooleUnsigned can round to exactly 0 next to x = 1.
            return Err(TransformError::SingularPoint { x, step });
        }
        Ok(y)
    }

    /// `T^n(x)`. A failure reports the index of the application that failed.
    pub fn apply_iter(&self, x: f64, n: u64) -> Result<f64, TransformError> {
        let mut y = x;
        for step in 0..n {
            y = self.apply_at_step(y, step)?;
        }
        Ok(y)
    }

    /// The Z^2 group element `(m, n)` acting on `x`.
    pub fn act_z2(&self, m: i64, n: i64, x: f64) -> Result<f64, TransformError> {
        match self.kind {
            TransformKind::Z2Translation { a, b } => Ok(x + a * m as f64 + b * n as f64),
            _ => Err(TransformError::Invalid(format!("{:?} is not a Z^2 action", self.kind))),
        }
    }

    /// All solutions of `T(x) = y` in the domain with the local expansion `|T'(x)|`.
    pub fn preimages(&self, y: f64) -> Result<Vec<PreimageBranch>, TransformError> {
        if !y.is_finite() {
            return Err(TransformError::NotInvertibleHere { y });
        }
        match self.kind {
            TransformKind::BooleSigned => {
                let disc = (y * y + 4.0).sqrt();
                // Stable forms: one root by cancellation-free addition, the other via x1*x2 = -1.
                let big = if y >= 0.0 { (y + disc) / 2.0 } else { (y - disc) / 2.0 };
                let small = -1.0 / big;
                let mut out: Vec<_> = [big, small]
                    .into_iter()
                    .map(|x| PreimageBranch { x, deriv_abs: 1.0 + 1.0 / (x * x) })
                    .collect();
                out.sort_by(|a, b| b.x.total_cmp(&a.x));
                Ok(out)
            }
            TransformKind::BooleUnsigned => {
                if y <= 0.0 {
                    return Err(TransformError::NotInvertibleHere { y });
                }
                // x - 1/x = y has root in (1, inf); x - 1/x = -y has root in (0, 1).
                let disc = (y * y + 4.0).sqrt();
                let high = (y + disc) / 2.0;
                let low = 1.0 / high;
                Ok([high, low]
                    .into_iter()
                    .map(|x| PreimageBranch { x, deriv_abs: 1.0 + 1.0 / (x * x) })
                    .collect())
            }
            TransformKind::RandomWalk => {
                let whole = y.floor();
                let frac = y - whole;
                if frac == 0.0 {
                    return Err(TransformError::NotInvertibleHere { y });
                }
                Ok(vec![
                    PreimageBranch { x: whole - 1.0 + frac / 2.0, deriv_abs: 2.0 },
                    PreimageBranch { x: whole + 1.0 + (frac + 1.0) / 2.0, deriv_abs: 2.0 },
                ])
            }
            TransformKind::Translation { c } => {
                let x = y - c;
                if !self.domain.contains(x) {
                    return Err(TransformError::NotInvertibleHere { y });
                }
                Ok(vec![PreimageBranch { x, deriv_abs: 1.0 }])
            }
            TransformKind::Z2Translation { a, .. } => {
                Ok(vec![PreimageBranch { x: y - a, deriv_abs: 1.0 }])
            }
        }
    }

    /// `|sum over branches of 1/|T'(x_i)| - 1|`; zero for a Lebesgue-preserving map.
    pub fn unit_preimage_sum_residual(&self, y: f64) -> Result<f64, TransformError> {
        let total: f64 = self.preimages(y)?.iter().map(|b| 1.0 / b.deriv_abs).sum();
        Ok((total - 1.0).abs())
    }

    /// Whether leftmost-point machinery applies: half-line domain and a finite reach.
    pub fn supports_leftmost(&self) -> bool {
        self.domain == Domain::HalfLine && self.step_reach().r.is_finite()
    }
}

fn random_walk(x: f64) -> f64 {
    let whole = x.floor();
    let frac = x - whole;
    let doubled = (2.0 * x).rem_euclid(1.0);
    let up = if frac > 0.0 && frac <= 0.5 { 2.0 } else { 0.0 };
    whole + doubled - 1.0 + up
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TransformKind::BooleSigned => f.write_str("boole-signed"),
            TransformKind::BooleUnsigned => f.write_str("boole-unsigned"),
            TransformKind::RandomWalk => f.write_str("random-walk"),
            TransformKind::Translation { c } => write!(f, "translation:{c}"),
            TransformKind::Z2Translation { a, b } => write!(f, "z2:{a},{b}"),
        }
    }
}

/// Parses `boole-signed`, `boole-unsigned`, `random-walk`, `translation:C`, `z2:A,B`.
impl FromStr for Transform {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TransformError::Invalid(format!("unknown transform '{s}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        match s.split_once(':') {
            None => match s {
                "boole-signed" => Ok(Self::boole_signed()),
                "boole-unsigned" => Ok(Self::boole_unsigned()),
                "random-walk" => Ok(Self::random_walk()),
                _ => Err(bad()),
            },
            Some(("translation", c)) => {
                let c = num(c)?;
                if !c.is_finite() {
                    return Err(bad());
                }
                Ok(Self::translation(c))
            }
            Some(("z2", rest)) => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                let (a, b) = (num(a)?, num(b)?);
                Self::new(TransformKind::Z2Translation { a, b }, Domain::FullLine)
            }
            _ => Err(bad()),
        }
    }
}
