//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.
//!
//! Run alone with `cargo test -p suspension-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;
use suspension_core::point_process::{cylinder_probability, sample, CylinderEvent, StreamKey, Window};
use suspension_core::stats::{run_experiment, ExperimentReport, ExperimentSpec};
use suspension_core::transforms::Transform;

const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn run(name: &str, replicas: Option<u64>, tweak: impl FnOnce(&mut ExperimentSpec)) -> ExperimentReport {
    let mut spec = ExperimentSpec::new(name, SEED);
    spec.replicas = replicas;
    tweak(&mut spec);
    run_experiment(&spec).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn check<'a>(r: &'a ExperimentReport, name: &str) -> &'a suspension_core::stats::Check {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("{}: no check {name:?}", r.name))
}

fn test_p(r: &ExperimentReport, name: &str) -> f64 {
    r.tests.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("{}: no test {name:?}", r.name)).result.p_value
}

fn t1_law() -> Verdict {
    let r = run("t1-law", Some(100_000), |_| {});
    let c = check(&r, "P(t1 in (1,2])");
    let target = (-1f64).exp() - (-2f64).exp();
    let close = (c.observed - target).abs() <= 0.004;
    let p = test_p(&r, "t1 ~ Exp(lambda)");
    verdict(close && p > 0.01 && r.censored == 0, format!("P = {:.5} (target {target:.5} +- 0.004), KS p = {p:.3}", c.observed))
}

fn cylinder_exactness() -> Verdict {
    let a = CylinderEvent::new(vec![0.0, 1.0], vec![1]).unwrap();
    let b = CylinderEvent::new(vec![0.0, 1.0, 2.0], vec![1, 2]).unwrap();
    let (pa, pb) = (cylinder_probability(&a, 1.0), cylinder_probability(&b, 1.0));
    let exact = (pa - (-1f64).exp()).abs() <= 1e-12 && (pb - (-2f64).exp() / 2.0).abs() <= 1e-12;
    let n = 100_000u64;
    let root = StreamKey::new(SEED).child(1000);
    let w = Window::half_line(2.0).unwrap();
    let (mut ha, mut hb) = (0u64, 0u64);
    for i in 0..n {
        let c = sample(1.0, w, &root.child(i)).unwrap();
        ha += a.contains(&c).unwrap() as u64;
        hb += b.contains(&c).unwrap() as u64;
    }
    let z = |h: u64, p: f64| (h as f64 / n as f64 - p).abs() / (p * (1.0 - p) / n as f64).sqrt();
    let (za, zb) = (z(ha, pa), z(hb, pb));
    verdict(exact && za <= 4.0 && zb <= 4.0, format!("p = {pa:.5}, {pb:.5}; empirical z = {za:.2}, {zb:.2}"))
}

fn leftmost_invariance() -> Verdict {
    let r = run("leftmost-invariance", Some(100_000), |s| s.transform = "boole-unsigned".into());
    let cylinder_checks: Vec<_> = r.checks.iter().filter(|c| c.name.starts_with('[')).collect();
    let within = cylinder_checks.iter().filter(|c| c.pass).count();
    let censored = r.censored as f64 / r.replicas as f64;
    let identity = check(&r, "t1 of image = T^kappa(t1)").pass;
    verdict(
        within == cylinder_checks.len() && censored < 0.005 && identity,
        format!("{within}/{} events within 4 sd, censored {:.3}%", cylinder_checks.len(), 100.0 * censored),
    )
}

fn conjugacy() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for t in ["boole-unsigned", "translation:1"] {
        let r = run("conjugacy", Some(1_000), |s| s.transform = t.into());
        let mism = check(&r, "pi0(induced) = leftmost_map(pi0)").observed;
        ok &= r.checks.iter().all(|c| c.pass);
        parts.push(format!("{t}: {mism} mismatches, {} censored", r.censored));
    }
    verdict(ok, parts.join("; "))
}

fn conditional_identity() -> Verdict {
    let r = run("conditional-identity", Some(100_000), |s| s.conditional_js = vec![0, 1, 2]);
    let pairs: Vec<_> = r.tests.iter().filter(|t| t.name.contains('~')).collect();
    let min_p = pairs.iter().map(|t| t.result.p_value).fold(1.0, f64::min);
    // the min-point KS tests are diagnostics beyond the pairwise criterion
    let ks: Vec<String> = r
        .tests
        .iter()
        .filter(|t| t.name.contains("min point"))
        .map(|t| format!("{:.3}", t.result.p_value))
        .collect();
    verdict(
        pairs.len() == 9 && pairs.iter().all(|t| t.result.p_value > 0.01),
        format!("{} pairwise tests, smallest p = {min_p:.3}; min-point KS p = [{}]", pairs.len(), ks.join(", ")),
    )
}

fn preimage_sum() -> Verdict {
    let r = run("preimage-sum", Some(1_000), |_| {});
    let worst = r.checks.iter().filter(|c| c.name.contains("sum")).map(|c| c.observed).fold(0.0, f64::max);
    verdict(worst <= 1e-9 && r.passed(), format!("largest residual {worst:.2e}"))
}

fn lazy_extension() -> Verdict {
    let r = run("lazy-extension", Some(100_000), |_| {});
    let p = test_p(&r, "extended ~ one-shot");
    verdict(p > 0.01 && r.passed(), format!("two-sample p = {p:.3}"))
}

fn birkhoff() -> Verdict {
    let r = run("birkhoff", Some(30), |s| {
        s.transform = "boole-unsigned".into();
        s.birkhoff_steps = 20_000;
        s.birkhoff_threshold = 1.0;
        s.birkhoff_checkpoints = vec![1_000, 10_000, 20_000];
    });
    let hits = check(&r, "runs within 0.05 at 20000").observed;
    let m = |n: u32| r.summary[&format!("median error at {n}")];
    let shrinking = m(1_000) > m(10_000) && m(10_000) > m(20_000);
    verdict(
        hits >= 0.8 && shrinking && r.passed(),
        format!(
            "{:.0}% of runs within 0.05; median error {:.4} / {:.4} / {:.4}; {} censored steps",
            100.0 * hits,
            m(1_000),
            m(10_000),
            m(20_000),
            r.censored
        ),
    )
}

fn z2_counterexample() -> Verdict {
    let r = run("z2-counterexample", Some(10_000), |s| {
        s.z2_a = 1.0;
        s.z2_b = 2f64.sqrt();
        s.z2_grid = 5;
    });
    let broken = check(&r, "membership preserved").observed;
    let p = check(&r, "P(E | x=0)").observed;
    let target = (-2f64).exp();
    verdict(broken == 0.0 && (p - target).abs() <= 0.01, format!("{broken} broken, P(E) = {p:.4} (target {target:.4} +- 0.01)"))
}

fn kappa_sanity() -> Verdict {
    let tr = run("kappa-tails", Some(10_000), |s| s.transform = "translation:1".into());
    let all_one = check(&tr, "kappa = 1 for translation").pass && tr.censored == 0;
    let b = run("kappa-tails", Some(10_000), |s| {
        s.transform = "boole-unsigned".into();
        s.kappa_cap = 100_000;
    });
    let below = 1.0 - b.censored as f64 / b.replicas as f64;
    verdict(all_one && below >= 0.995, format!("translation kappa = 1: {all_one}; boole-unsigned below cap {:.2}% (censored {})", 100.0 * below, b.censored))
}

fn main() -> ExitCode {
    // sanity: the transforms used below are the ones named
    assert_eq!(Transform::boole_unsigned().to_string(), "boole-unsigned");
    let criteria: [Criterion; 10] = [
        ("t1 law", t1_law),
        ("cylinder exactness", cylinder_exactness),
        ("leftmost-map invariance", leftmost_invariance),
        ("conjugacy", conjugacy),
        ("conditional identity", conditional_identity),
        ("measure preservation witness", preimage_sum),
        ("lazy-extension exactness", lazy_extension),
        ("birkhoff averages", birkhoff),
        ("z2 counterexample", z2_counterexample),
        ("kappa sanity", kappa_sanity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("acceptance {:>2} {status} {name}: {} [{:.1} s]", i + 1, v.detail, start.elapsed().as_secs_f64());
        failed += !v.pass as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
