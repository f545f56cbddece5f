use proptest::prelude::*;
use suspension_core::point_process::{sample, Side, StreamKey, Window};
use suspension_core::stats::{chi_square_counts, ALPHA};

fn poisson_pmf(mean: f64, k: usize) -> f64 {
    let mut p = (-mean).exp();
    for i in 1..=k {
        p *= mean / i as f64;
    }
    p
}

/// Cells `0..cells` plus a tail, from the pmf directly.
fn cells(mean: f64, cells: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..cells).map(|k| poisson_pmf(mean, k)).collect();
    let head: f64 = v.iter().sum();
    v.push(1.0 - head);
    v
}

fn folded_counts(counts: impl Iterator<Item = usize>, cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells + 1];
    for c in counts {
        h[c.min(cells)] += 1;
    }
    h
}

#[test]
fn half_line_counts_are_poisson() {
    let w = Window::half_line(3.0).unwrap();
    let root = StreamKey::new(101);
    let counts: Vec<usize> = (0..20_000).map(|i| sample(1.0, w, &root.child(i)).unwrap().len()).collect();
    let r = chi_square_counts(&folded_counts(counts.iter().copied(), 10), &cells(3.0, 10), ALPHA).unwrap();
    assert!(r.passed(), "{r:?}");
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!((mean - 3.0).abs() < 4.0 * (3.0f64 / 20_000.0).sqrt());
}

#[test]
fn full_line_counts_are_poisson_on_both_sides() {
    let w = Window::new(-2.0, 2.0, Side::FullLine).unwrap();
    let root = StreamKey::new(102);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for i in 0..20_000 {
        let c = sample(0.75, w, &root.child(i)).unwrap();
        left.push(c.count(-2.0, 0.0).unwrap());
        right.push(c.count(0.0, 2.0).unwrap());
    }
    for side in [left, right] {
        let r = chi_square_counts(&folded_counts(side.into_iter(), 8), &cells(1.5, 8), ALPHA).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn disjoint_counts_are_uncorrelated() {
    let w = Window::half_line(2.0).unwrap();
    let root = StreamKey::new(103);
    let n = 40_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let c = sample(1.0, w, &root.child(i)).unwrap();
            (c.count(0.0, 1.0).unwrap() as f64, c.count(1.0, 2.0).unwrap() as f64)
        })
        .collect();
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / nf;
    // sd of the sample covariance of independent Poisson(1) counts is sqrt(3/n)
    assert!(cov.abs() < 4.0 * (3.0 / nf).sqrt(), "cov {cov}");
}

#[test]
fn intensity_scales_the_mean() {
    let w = Window::half_line(1.0).unwrap();
    let root = StreamKey::new(104);
    let n = 10_000;
    let total: usize = (0..n).map(|i| sample(5.0, w, &root.child(i)).unwrap().len()).sum();
    let mean = total as f64 / n as f64;
    assert!((mean - 5.0).abs() < 4.0 * (5.0f64 / n as f64).sqrt(), "{mean}");
}

proptest! {
    #[test]
    fn points_are_sorted_and_inside(seed in any::<u64>(), hi in 0.1f64..30.0, lambda in 0.1f64..5.0) {
        let w = Window::half_line(hi).unwrap();
        let c = sample(lambda, w, &StreamKey::new(seed)).unwrap();
        prop_assert!(c.points().windows(2).all(|p| p[0] < p[1]));
        prop_assert!(c.points().iter().all(|&p| w.contains(p)));
    }

    #[test]
    fn extension_equals_one_shot(seed in any::<u64>(), hi in 0.1f64..20.0, factor in 1.0f64..4.0) {
        let key = StreamKey::new(seed);
        let small = sample(1.0, Window::half_line(hi).unwrap(), &key).unwrap();
        let grown = small.extend(hi * factor).unwrap();
        let direct = sample(1.0, Window::half_line(hi * factor).unwrap(), &key).unwrap();
        prop_assert_eq!(grown.points(), direct.points());
        prop_assert_eq!(&grown.points()[..small.len()], small.points());
    }

    #[test]
    fn counts_add_over_adjacent_intervals(seed in any::<u64>(), a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let c = sample(1.0, Window::half_line(10.0).unwrap(), &StreamKey::new(seed)).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mid = 0.5 * (lo + hi);
        prop_assert_eq!(c.count(lo, hi).unwrap(), c.count(lo, mid).unwrap() + c.count(mid, hi).unwrap());
    }
}
