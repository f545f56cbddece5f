use super::special::{chi_square_sf, kolmogorov_sf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default significance level.
pub const ALPHA: f64 = 0.01;

/// Minimum expected count per chi-square cell after merging.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate expected distribution: {0}")]
    DegenerateExpected(String),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    pub alpha: f64,
    pub verdict: Verdict,
}

impl TestResult {
    pub(crate) fn new(test: &str, statistic: f64, p_value: f64, n: u64, dof: Option<usize>, alpha: f64) -> Self {
        let verdict = if p_value > alpha { Verdict::Pass } else { Verdict::Fail };
        Self { test: test.to_string(), statistic, p_value, n, dof, alpha, verdict }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.verdict = if self.p_value > alpha { Verdict::Pass } else { Verdict::Fail };
        self
    }
}

/// `sup_x |F_n(x) - F(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// One-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov tail evaluated at
/// `(√n + 0.12 + 0.11/√n)·D`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<TestResult, StatsError> {
    if samples.len() < 10 {
        return Err(StatsError::TooFewSamples { need: 10, got: samples.len() });
    }
    let d = ks_statistic(samples, cdf);
    let rn = (samples.len() as f64).sqrt();
    let p = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
    Ok(TestResult::new("ks", d, p, samples.len() as u64, None, alpha))
}

/// Groups adjacent cells left to right until each group's weight reaches `threshold`;
/// a light remainder joins the last group. Returns the group index of every cell.
pub fn merge_cells(weights: &[f64], threshold: f64) -> Vec<usize> {
    let mut group = Vec::with_capacity(weights.len());
    let mut current = 0usize;
    let mut acc = 0.0;
    let mut closed = 0usize;
    for &w in weights {
        group.push(current);
        acc += w;
        if acc >= threshold {
            current += 1;
            closed = current;
            acc = 0.0;
        }
    }
    if closed == 0 {
        return vec![0; weights.len()];
    }
    // remainder after the last closed group
    for g in group.iter_mut() {
        if *g >= closed {
            *g = closed - 1;
        }
    }
    group
}

fn regroup<T: Copy + Into<f64>>(values: &[T], groups: &[usize]) -> Vec<f64> {
    let m = groups.iter().max().map_or(0, |g| g + 1);
    let mut out = vec![0.0; m];
    for (v, &g) in values.iter().zip(groups) {
        out[g] += (*v).into();
    }
    out
}

/// Pearson goodness of fit of `observed` counts against cell probabilities `expected`
/// (which must sum to 1), after merging cells so every expected count is at least 5.
pub fn chi_square_counts(observed: &[u64], expected: &[f64], alpha: f64) -> Result<TestResult, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::DegenerateExpected("histogram and probabilities differ in length".into()));
    }
    let total: f64 = expected.iter().sum();
    if expected.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-6 {
        return Err(StatsError::DegenerateExpected(format!("probabilities sum to {total}")));
    }
    let n: u64 = observed.iter().sum();
    let exp_counts: Vec<f64> = expected.iter().map(|p| p * n as f64).collect();
    let groups = merge_cells(&exp_counts, MIN_EXPECTED);
    let e = regroup(&exp_counts, &groups);
    let o = regroup(&observed.iter().map(|&v| v as f64).collect::<Vec<_>>(), &groups);
    if e.len() < 2 || e.iter().any(|&v| v < MIN_EXPECTED) {
        return Err(StatsError::DegenerateExpected(format!("{} usable cells", e.len())));
    }
    let stat: f64 = o.iter().zip(&e).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = e.len() - 1;
    Ok(TestResult::new("chi2", stat, chi_square_sf(stat, dof as f64), n, Some(dof), alpha))
}

/// Chi-square test of homogeneity for two histograms over the same cells, merging
/// adjacent cells until every expected count is at least 5.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], alpha: f64) -> Result<TestResult, StatsError> {
    let len = a.len().max(b.len());
    let pad = |h: &[u64]| {
        let mut v: Vec<f64> = h.iter().map(|&x| x as f64).collect();
        v.resize(len, 0.0);
        v
    };
    let (a, b) = (pad(a), pad(b));
    let (ra, rb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let total = ra + rb;
    if ra == 0.0 || rb == 0.0 {
        return Err(StatsError::DegenerateExpected("empty sample".into()));
    }
    let cols: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    // an expected count R_i C_j / N >= 5 for both rows
    let groups = merge_cells(&cols, MIN_EXPECTED * total / ra.min(rb));
    let (ga, gb) = (regroup(&a, &groups), regroup(&b, &groups));
    if ga.len() < 2 {
        return Err(StatsError::DegenerateExpected("fewer than two usable cells".into()));
    }
    let mut stat = 0.0;
    for (oa, ob) in ga.iter().zip(&gb) {
        let c = oa + ob;
        let (ea, eb) = (ra * c / total, rb * c / total);
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let dof = ga.len() - 1;
    Ok(TestResult::new("chi2-two-sample", stat, chi_square_sf(stat, dof as f64), total as u64, Some(dof), alpha))
}

/// Histogram of small non-negative integers.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

/// Poisson cell probabilities for `0..cells-1` plus one tail cell.
pub fn poisson_cells(mean: f64, cells: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cells + 1);
    let mut p = (-mean).exp();
    let mut acc = 0.0;
    for k in 0..cells {
        out.push(p);
        acc += p;
        p *= mean / (k + 1) as f64;
    }
    out.push((1.0 - acc).max(0.0));
    out
}

/// Folds counts `>= cells` into a final tail cell, matching [`poisson_cells`].
pub fn fold_tail(hist: &[u64], cells: usize) -> Vec<u64> {
    let mut out = vec![0u64; cells + 1];
    for (k, &c) in hist.iter().enumerate() {
        out[k.min(cells)] += c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_statistic_on_a_grid() {
        let xs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.1).abs() < 1e-12);
        assert!(matches!(ks_test(&xs, |x| x, ALPHA), Err(StatsError::TooFewSamples { .. })));
    }

    #[test]
    fn ks_rejects_constant_samples() {
        let xs = vec![0.5; 200];
        let r = ks_test(&xs, |x: f64| x.clamp(0.0, 1.0), ALPHA).unwrap();
        assert!(r.p_value < 1e-6);
        assert!(!r.passed());
    }

    #[test]
    fn exact_fit_has_zero_statistic() {
        let r = chi_square_counts(&[25, 25, 50], &[0.25, 0.25, 0.5], ALPHA).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, Some(2));
    }

    #[test]
    fn sparse_cells_are_merged() {
        let probs = poisson_cells(1.0, 10);
        let n = 200u64;
        let exp: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let groups = merge_cells(&exp, MIN_EXPECTED);
        let merged = regroup(&exp, &groups);
        assert!(merged.iter().all(|&e| e >= MIN_EXPECTED), "{merged:?}");
        assert!(merged.len() < probs.len());
        assert!(groups.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(chi_square_counts(&[1, 2], &[0.5, 0.6], ALPHA).is_err());
        assert!(chi_square_counts(&[3, 2], &[0.5, 0.5], ALPHA).is_err());
        assert!(chi_square_counts(&[3], &[0.5, 0.5], ALPHA).is_err());
        assert!(chi_square_two_sample(&[0, 0], &[5, 5], ALPHA).is_err());
    }

    #[test]
    fn identical_histograms_agree() {
        let r = chi_square_two_sample(&[100, 200, 300], &[100, 200, 300], ALPHA).unwrap();
        assert!(r.statistic.abs() < 1e-12 && r.p_value > 0.999);
        let r = chi_square_two_sample(&[300, 200, 100], &[100, 200, 300], ALPHA).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn tail_folding() {
        assert_eq!(fold_tail(&[1, 2, 3, 4], 2), vec![1, 2, 7]);
        let p = poisson_cells(2.0, 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(histogram([0, 2, 2, 1]), vec![1, 1, 2]);
    }
}
