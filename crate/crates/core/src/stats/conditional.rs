//! Three-sampler check of the conditional-measure identity
//! `μ̂_{B,j} ∘ π^{-1} = μ̃_{B,j+1} ∘ π_(j)^{-1} = μ*_{B,j+1}`.

use super::gof::{chi_square_two_sample, histogram, ks_test, StatsError, TestResult};
use crate::dynamics::{union_all, union_mark, DynamicsError};
use crate::point_process::{sample_conditioned, sample_hat, sample_tilde, Configuration, StreamKey, Window};
use rayon::prelude::*;

const DYADIC_CELLS: usize = 4;
const EXTREME_BINS: usize = 10;
pub const FLANK_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// `μ̂_{B,j}` pushed through `π`.
    Hat,
    /// `μ̃_{B,j+1}` pushed through `π_(j+1)`.
    Tilde,
    /// `μ*_{B,j+1}` directly.
    Conditioned,
}

impl Construction {
    pub const ALL: [Construction; 3] = [Construction::Hat, Construction::Tilde, Construction::Conditioned];

    pub fn label(self) -> &'static str {
        match self {
            Construction::Hat => "hat",
            Construction::Tilde => "tilde",
            Construction::Conditioned => "conditioned",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }

    /// One configuration with `j + 1` points in `b`.
    pub fn draw(
        self,
        b: (f64, f64),
        j: usize,
        intensity: f64,
        window: Window,
        stream: &StreamKey,
    ) -> Result<Configuration, DynamicsError> {
        Ok(match self {
            Construction::Hat => {
                let m = sample_hat(b, j, intensity, window, stream)?;
                union_mark(m.distinguished, &m.config)?
            }
            Construction::Tilde => {
                let (xs, rest) = sample_tilde(b, j + 1, intensity, window, stream)?;
                union_all(&xs, &rest)?
            }
            Construction::Conditioned => sample_conditioned(b, j + 1, intensity, window, stream)?,
        })
    }
}

/// Categorical summaries of one configuration.
#[derive(Debug, Clone)]
struct Summary {
    dyadic: usize,
    right_flank: Option<usize>,
    left_flank: Option<usize>,
    min_bin: usize,
    max_bin: usize,
    min_point: f64,
}

fn summarize(c: &Configuration, b: (f64, f64), k: usize) -> Result<Summary, DynamicsError> {
    let len = b.1 - b.0;
    let inside: Vec<f64> = c.points().iter().copied().filter(|&p| b.0 < p && p <= b.1).collect();
    let mut code = 0usize;
    for cell in 0..DYADIC_CELLS {
        let lo = b.0 + len * cell as f64 / DYADIC_CELLS as f64;
        let hi = b.0 + len * (cell + 1) as f64 / DYADIC_CELLS as f64;
        let n = c.count(lo, hi)?;
        code = code * (k + 1) + n;
    }
    let w = c.window();
    let right_flank = if w.covers(b.1, b.1 + len) { Some(c.count(b.1, b.1 + len)?.min(FLANK_CAP)) } else { None };
    let left_flank = if w.covers(b.0 - len, b.0) { Some(c.count(b.0 - len, b.0)?.min(FLANK_CAP)) } else { None };
    let bin = |x: f64| (((x - b.0) / len * EXTREME_BINS as f64).ceil() as usize).clamp(1, EXTREME_BINS) - 1;
    let min_point = inside.first().copied().unwrap_or(f64::NAN);
    let max_point = inside.last().copied().unwrap_or(f64::NAN);
    Ok(Summary { dyadic: code, right_flank, left_flank, min_bin: bin(min_point), max_bin: bin(max_point), min_point })
}

#[derive(Debug, Clone)]
pub struct ConditionalIdentity {
    /// Bonferroni-combined two-sample result for each pair of constructions.
    pub pairs: Vec<(String, TestResult)>,
    /// Every per-statistic two-sample test that went into the pairs.
    pub components: Vec<(String, TestResult)>,
    /// Minimum of the `j + 1` points of `b` against `1 - (1 - u)^{j+1}`, per construction.
    pub min_point_ks: Vec<(String, TestResult)>,
}

impl ConditionalIdentity {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().chain(&self.min_point_ks).all(|(_, t)| t.passed())
    }
}

/// Draws `n` replicas from each construction and compares them pairwise on counts in a
/// dyadic refinement of `b`, counts in the flanking intervals inside the window, and the
/// binned minimum and maximum of the points in `b`.
#[allow(clippy::too_many_arguments)]
pub fn verify_conditional_identity(
    b: (f64, f64),
    j: usize,
    intensity: f64,
    window: Window,
    n: u64,
    stream: &StreamKey,
    alpha: f64,
) -> Result<ConditionalIdentity, StatsError> {
    let k = j + 1;
    let mut summaries = Vec::new();
    for cons in Construction::ALL {
        let s: Vec<Summary> = (0..n)
            .into_par_iter()
            .map(|i| {
                let key = stream.children(&[cons.tag(), i]);
                let c = cons.draw(b, j, intensity, window, &key)?;
                summarize(&c, b, k)
            })
            .collect::<Result<_, DynamicsError>>()?;
        summaries.push(s);
    }

    type Extract = fn(&Summary) -> Option<usize>;
    let stats: [(&str, Extract); 5] = [
        ("dyadic", |s| Some(s.dyadic)),
        ("right-flank", |s| s.right_flank),
        ("left-flank", |s| s.left_flank),
        ("min-bin", |s| Some(s.min_bin)),
        ("max-bin", |s| Some(s.max_bin)),
    ];

    let mut pairs = Vec::new();
    let mut components = Vec::new();
    for (x, y) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let label = format!("{}~{}", Construction::ALL[x].label(), Construction::ALL[y].label());
        let mut parts = Vec::new();
        for (name, f) in stats {
            let hx: Vec<usize> = summaries[x].iter().filter_map(f).collect();
            let hy: Vec<usize> = summaries[y].iter().filter_map(f).collect();
            if hx.is_empty() {
                continue;
            }
            let r = chi_square_two_sample(&histogram(hx), &histogram(hy), alpha)?;
            components.push((format!("{label} {name}"), r.clone()));
            parts.push(r);
        }
        let worst = parts
            .iter()
            .min_by(|a, b| a.p_value.total_cmp(&b.p_value))
            .cloned()
            .expect("at least one statistic");
        let combined = (worst.p_value * parts.len() as f64).min(1.0);
        let r = TestResult::new("chi2-bonferroni", worst.statistic, combined, worst.n, worst.dof, alpha);
        pairs.push((label, r));
    }

    let mut min_point_ks = Vec::new();
    for (cons, s) in Construction::ALL.iter().zip(&summaries) {
        let mins: Vec<f64> = s.iter().map(|s| s.min_point).collect();
        let cdf = |x: f64| {
            let u = ((x - b.0) / (b.1 - b.0)).clamp(0.0, 1.0);
            1.0 - (1.0 - u).powi(k as i32)
        };
        min_point_ks.push((cons.label().to_string(), ks_test(&mins, cdf, alpha)?));
    }
    Ok(ConditionalIdentity { pairs, components, min_point_ks })
}
