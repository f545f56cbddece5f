use crate::dynamics::{leftmost_step, DynamicsError, Limits};
use crate::point_process::{sample, Configuration, StreamKey, Window};
use crate::transforms::Transform;

/// Window for a fresh restart of a chain.
const RESTART_HI: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffTrace {
    /// `averages[n-1] = (1/n) Σ_{i<n} 1[t_1(S^i ω) <= threshold]` with `S = T_*^κ`.
    pub averages: Vec<f64>,
    /// Steps that hit the return-time cap or window budget and were restarted.
    pub censored: u64,
    /// Steps that hit a measure-zero event and were restarted.
    pub resampled: u64,
}

impl BirkhoffTrace {
    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.averages.get(i).copied())
    }
}

fn fresh(intensity: f64, stream: &StreamKey) -> Result<(f64, Configuration), DynamicsError> {
    let c = sample(intensity, Window::half_line(RESTART_HI / intensity)?, stream)?;
    Ok(c.leftmost_of_process()?)
}

/// Running averages of `1[t_1 <= threshold]` along `c0, S c0, S² c0, …` for the leftmost
/// map `S`. Configurations are carried between steps at their output windows, so the chain
/// is driven by the exact law of the infinite process.
///
/// A step that cannot be completed within `limits` (or hits the singular set) restarts
/// the chain from an independent fresh configuration; these are counted, not hidden.
pub fn birkhoff_average(
    t: &Transform,
    c0: &Configuration,
    threshold: f64,
    n_steps: usize,
    limits: &Limits,
    stream: &StreamKey,
) -> Result<BirkhoffTrace, DynamicsError> {
    let (mut t1, mut c) = c0.leftmost_of_process()?;
    let mut hits = 0u64;
    let mut averages = Vec::with_capacity(n_steps);
    let (mut censored, mut resampled, mut restarts) = (0u64, 0u64, 0u64);
    for i in 0..n_steps {
        if t1 <= threshold {
            hits += 1;
        }
        averages.push(hits as f64 / (i + 1) as f64);
        if i + 1 == n_steps {
            break;
        }
        match leftmost_step(t, &c, limits) {
            Ok(s) => {
                t1 = s.leftmost;
                c = s.config;
            }
            Err(e) if e.is_resample() || matches!(e, DynamicsError::Censored { .. } | DynamicsError::WindowBudgetExceeded { .. }) => {
                if e.is_resample() {
                    resampled += 1;
                } else {
                    censored += 1;
                }
                (t1, c) = fresh(c.intensity(), &stream.child(restarts))?;
                restarts += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BirkhoffTrace { averages, censored, resampled })
}
