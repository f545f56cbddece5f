use super::gof::TestResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const REPORT_SCHEMA: &str = "report/1";

/// Replicas censored beyond this fraction make an experiment inconclusive.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;

/// A tolerance check on an estimated quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `|observed - expected| <= tolerance`
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (observed - expected).abs() <= tolerance;
        Self { name: name.into(), observed, expected, tolerance, pass }
    }

    /// `observed <= bound`
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self { name: name.into(), observed, expected: bound, tolerance: 0.0, pass: observed <= bound }
    }

    /// `observed >= bound`
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self { name: name.into(), observed, expected: bound, tolerance: 0.0, pass: observed >= bound }
    }

    /// Exact agreement of `mismatches` (expected 0) out of `total` comparisons.
    pub fn exact(name: impl Into<String>, mismatches: u64) -> Self {
        Self { name: name.into(), observed: mismatches as f64, expected: 0.0, tolerance: 0.0, pass: mismatches == 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub replicas: u64,
    pub tests: Vec<NamedTest>,
    pub checks: Vec<Check>,
    pub censored: u64,
    pub resampled: u64,
    /// Free-form numbers reported without a pass/fail criterion.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outcome: Outcome,
    pub wall_clock_ms: u64,
}

/// Fixed notation for ordinary magnitudes, scientific otherwise.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) || !v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

impl ExperimentReport {
    pub(crate) fn new(name: &str, seed: u64, parameters: BTreeMap<String, serde_json::Value>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            name: name.to_string(),
            parameters,
            seed,
            replicas: 0,
            tests: Vec::new(),
            checks: Vec::new(),
            censored: 0,
            resampled: 0,
            summary: BTreeMap::new(),
            notes: Vec::new(),
            outcome: Outcome::Inconclusive,
            wall_clock_ms: 0,
        }
    }

    pub(crate) fn test(&mut self, name: impl Into<String>, result: TestResult) {
        self.tests.push(NamedTest { name: name.into(), result });
    }

    pub(crate) fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub(crate) fn finish(&mut self) {
        let censored_too_often =
            self.replicas > 0 && self.censored as f64 > MAX_CENSORED_FRACTION * self.replicas as f64;
        let all_pass = self.tests.iter().all(|t| t.result.passed()) && self.checks.iter().all(|c| c.pass);
        self.outcome = if censored_too_often {
            Outcome::Inconclusive
        } else if all_pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the wall-clock field; a pure function of the experiment and seed.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("wall_clock_ms");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// Aligned-column text for humans.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment {}  seed {}  replicas {}  outcome {:?}", self.name, self.seed, self.replicas, self.outcome);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "  {k:<24} {v}");
        }
        if !self.tests.is_empty() {
            let _ = writeln!(out, "{:<44} {:>14} {:>12} {:>9} {:>6}", "test", "statistic", "p-value", "n", "ok");
            for t in &self.tests {
                let r = &t.result;
                let _ = writeln!(out, "{:<44} {:>14} {:>12.4e} {:>9} {:>6}", t.name, num(r.statistic), r.p_value, r.n, if r.passed() { "pass" } else { "FAIL" });
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "{:<44} {:>14} {:>14} {:>12} {:>6}", "check", "observed", "expected", "tolerance", "ok");
            for c in &self.checks {
                let _ = writeln!(out, "{:<44} {:>14} {:>14} {:>12.3e} {:>6}", c.name, num(c.observed), num(c.expected), c.tolerance, if c.pass { "pass" } else { "FAIL" });
            }
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "  {k:<42} {:>14}", num(*v));
        }
        let _ = writeln!(out, "censored {}  resampled {}  wall-clock {} ms", self.censored, self.resampled, self.wall_clock_ms);
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}
