//! Sampling check of the analytic outcome metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent_types::{Economy, Period1Draw};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismOutcome;
use crate::metrics::{AgentMetrics, OutcomeMetrics};

use super::OracleConfig;

pub const MIN_SAMPLES: usize = 10_000;

/// Sample means (in `metrics`) with standard errors of the totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub metrics: OutcomeMetrics,
    pub utilization_se: f64,
    pub welfare_se: f64,
    pub revenue_se: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self, n: usize) -> f64 {
        self.sum / n as f64
    }

    fn se(&self, n: usize) -> f64 {
        let mean = self.mean(n);
        let var = (self.sum_sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// Draws period-1 values for every allocated agent and applies the show
/// rule with the true bias (ties show). Subjective utility replays the same
/// draw under the believed bias.
pub fn mc_outcome_check(e: &Economy, o: &MechanismOutcome, cfg: &OracleConfig) -> Result<McReport> {
    if cfg.mc_samples < MIN_SAMPLES {
        return Err(Error::Config { field: "mc_samples".into(), message: format!("need at least {MIN_SAMPLES}") });
    }
    let n = cfg.mc_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agent_sums = vec![[0.0f64; 4]; e.len()];
    let (mut util, mut welf, mut rev) = (Moments::default(), Moments::default(), Moments::default());
    for _ in 0..n {
        let (mut u_total, mut w_total, mut r_total) = (0.0, 0.0, 0.0);
        for &i in &o.allocated {
            let a = e.agent(i);
            let pay = o.payments[i];
            let z = pay.penalty;
            let w = a.future_value();
            let draw = a.sample_period1_value(&mut rng);
            let realized = |b: f64| -> (bool, f64) {
                let shows = draw.shows(-z - b * w);
                let value = match draw {
                    Period1Draw::Value(v) if shows => v + w,
                    _ => -z,
                };
                (shows, value)
            };
            let (shows, true_value) = realized(a.beta());
            let (_, believed_value) = realized(a.betahat());
            let used = if shows { 1.0 } else { 0.0 };
            let welfare = if shows { true_value } else { 0.0 };
            let revenue = pay.base + if shows { 0.0 } else { z };
            let s = &mut agent_sums[i];
            s[0] += used;
            s[1] += welfare;
            s[2] += believed_value - pay.base;
            s[3] += true_value - pay.base;
            u_total += used;
            w_total += welfare;
            r_total += revenue;
        }
        util.push(u_total);
        welf.push(w_total);
        rev.push(r_total);
    }
    let per_agent = (0..e.len())
        .map(|i| {
            let s = agent_sums[i];
            AgentMetrics {
                allocated: o.is_allocated(i),
                usage: s[0] / n as f64,
                welfare: s[1] / n as f64,
                subjective_utility: s[2] / n as f64,
                true_utility: s[3] / n as f64,
            }
        })
        .collect();
    Ok(McReport {
        metrics: OutcomeMetrics { utilization: util.mean(n), welfare: welf.mean(n), revenue: rev.mean(n), per_agent },
        utilization_se: util.se(n),
        welfare_se: welf.se(n),
        revenue_se: rev.se(n),
    })
}
