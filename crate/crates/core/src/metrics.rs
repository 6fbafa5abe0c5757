//! Analytic utilization, welfare and revenue of mechanism outcomes, and the
//! full-information first-best benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent_types::{AgentType, Belief, Economy, ValueModel};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismOutcome;
use crate::numeric_oracle::lambert_w_minus1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Welfare,
    Utilization,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub allocated: bool,
    pub usage: f64,
    pub welfare: f64,
    pub subjective_utility: f64,
    pub true_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMetrics {
    /// Expected number of resources used.
    pub utilization: f64,
    pub welfare: f64,
    pub revenue: f64,
    pub per_agent: Vec<AgentMetrics>,
}

fn check_outcome(e: &Economy, o: &MechanismOutcome) -> Result<()> {
    let bad = |msg: String| Err(Error::InconsistentOutcome(msg));
    if o.payments.len() != e.len() {
        return bad(format!("{} payments for {} agents", o.payments.len(), e.len()));
    }
    if o.allocated.len() > e.resources() {
        return bad(format!("{} agents allocated, {} resources", o.allocated.len(), e.resources()));
    }
    let mut seen = vec![false; e.len()];
    for &i in &o.allocated {
        if i >= e.len() {
            return bad(format!("allocated index {i} out of range"));
        }
        if std::mem::replace(&mut seen[i], true) {
            return bad(format!("agent {i} allocated twice"));
        }
    }
    for (i, p) in o.payments.iter().enumerate() {
        if !(p.penalty >= 0.0) || !p.base.is_finite() {
            return bad(format!("agent {i} has payment {p:?}"));
        }
        if !seen[i] && (p.penalty != 0.0 || p.base != 0.0) {
            return bad(format!("agent {i} is charged without being allocated"));
        }
    }
    Ok(())
}

/// Expected metrics of an outcome, with period-1 decisions made under the
/// true bias.
pub fn evaluate(e: &Economy, o: &MechanismOutcome) -> Result<OutcomeMetrics> {
    check_outcome(e, o)?;
    let mut per_agent = vec![AgentMetrics::default(); e.len()];
    let mut revenue = 0.0;
    for &i in &o.allocated {
        let a = e.agent(i);
        let pay = o.payments[i];
        let z = pay.penalty;
        let usage = a.show_prob(z, Belief::True);
        per_agent[i] = AgentMetrics {
            allocated: true,
            usage,
            welfare: a.welfare(z),
            subjective_utility: a.uhat(z) - pay.base,
            true_utility: a.utility_with(z, a.beta()) - pay.base,
        };
        revenue += pay.base + z * (1.0 - usage);
    }
    Ok(OutcomeMetrics {
        utilization: per_agent.iter().map(|p| p.usage).sum(),
        welfare: per_agent.iter().map(|p| p.welfare).sum(),
        revenue,
        per_agent,
    })
}

/// One agent's first-best contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstBestAgent {
    /// Per-agent value of the objective.
    pub value: f64,
    /// Penalty attaining it; `None` when the agent is better left out.
    pub penalty: Option<f64>,
    pub welfare: f64,
    pub usage: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstBest {
    pub objective: Objective,
    /// Sum of the objective over the selected agents.
    pub value: f64,
    pub welfare: f64,
    pub utilization: f64,
    pub per_agent: Vec<FirstBestAgent>,
}

/// Highest welfare or show probability a fully informed designer can get
/// from one allocated agent without violating participation or no deficit.
/// With `allow_transfers` a CiPi agent that would refuse every penalty is
/// paid to participate instead of being left out.
pub fn first_best_agent(a: &AgentType, objective: Objective, allow_transfers: bool) -> Result<FirstBestAgent> {
    let w = a.future_value();
    let b = a.beta();
    let penalty = match (a.model(), objective) {
        (ValueModel::CiPi { cost, show_prob }, Objective::Welfare) => {
            let crossing = (w - cost) * show_prob / (1.0 - show_prob);
            if allow_transfers || cost - a.betahat() * w <= crossing {
                Some((cost - b * w).max(0.0))
            } else {
                None
            }
        }
        (ValueModel::CiPi { cost, .. }, Objective::Utilization) => Some((cost - b * w).max(0.0)),
        (ValueModel::Exponential { .. } | ValueModel::Uniform { .. }, Objective::Welfare) => Some((1.0 - b) * w),
        (ValueModel::Exponential { rate }, Objective::Utilization) => {
            // largest threshold with zero welfare: s e^-s form solved by W_{-1}
            let x = rate * w - 1.0;
            let s = x - lambert_w_minus1(x * x.exp())?;
            Some((s / rate - b * w).max(0.0))
        }
        (ValueModel::Uniform { .. }, Objective::Utilization) => Some((2.0 - b) * w),
    };
    let (welfare, usage) = match penalty {
        Some(z) => (a.welfare(z), a.show_prob(z, Belief::True)),
        None => (0.0, 0.0),
    };
    let value = match (a.model(), objective, penalty) {
        (_, _, None) => 0.0,
        (ValueModel::CiPi { cost, show_prob }, Objective::Welfare, _) => (w - cost) * show_prob,
        (ValueModel::CiPi { show_prob, .. }, Objective::Utilization, _) => show_prob,
        (ValueModel::Exponential { rate }, Objective::Welfare, _) => w + ((-rate * w).exp() - 1.0) / rate,
        (ValueModel::Uniform { width }, Objective::Welfare, _) => w * w / (2.0 * width),
        (ValueModel::Exponential { .. }, Objective::Utilization, _) => usage,
        (ValueModel::Uniform { width }, Objective::Utilization, _) => 2.0 * w / width,
    };
    Ok(FirstBestAgent { value, penalty, welfare, usage, selected: false })
}

/// First best over the economy: the `m` agents with the largest per-agent
/// values, ties broken in random order.
pub fn first_best<R: Rng + ?Sized>(
    e: &Economy,
    objective: Objective,
    allow_transfers: bool,
    rng: &mut R,
) -> Result<FirstBest> {
    let mut per_agent = e
        .agents()
        .iter()
        .map(|a| first_best_agent(a, objective, allow_transfers))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&i, &j| per_agent[j].value.total_cmp(&per_agent[i].value));
    for &i in order.iter().take(e.resources()) {
        if per_agent[i].penalty.is_some() {
            per_agent[i].selected = true;
        }
    }
    let chosen = per_agent.iter().filter(|p| p.selected);
    let (value, welfare, utilization) =
        chosen.fold((0.0, 0.0, 0.0), |(v, s, u), p| (v + p.value, s + p.welfare, u + p.usage));
    Ok(FirstBest { objective, value, welfare, utilization, per_agent })
}
