//! Agent private types and the closed-form penalty curves.
//!
//! An allocated agent facing a no-show penalty `z` uses the resource in
//! period 1 iff `v1 >= -z - b * w`, where `v1` is the realized immediate
//! value, `w` the future value and `b` the discount factor the decision is
//! made with: the true `beta` for what actually happens, the believed
//! `betahat` for what the agent anticipates when bidding.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the period-1 immediate value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueModel {
    /// Value `-cost` with probability `show_prob`, otherwise unable to show.
    CiPi { cost: f64, show_prob: f64 },
    /// Value is `-X` with `X ~ Exp(rate)`.
    Exponential { rate: f64 },
    /// Value is uniform on `[-width, 0]`.
    Uniform { width: f64 },
}

impl ValueModel {
    fn validate(&self) -> Result<()> {
        match *self {
            ValueModel::CiPi { cost, show_prob } => {
                if !(cost.is_finite() && cost >= 0.0) {
                    return Err(Error::InvalidType(format!("cost must be >= 0, got {cost}")));
                }
                if !(show_prob > 0.0 && show_prob < 1.0) {
                    return Err(Error::InvalidType(format!(
                        "show probability must lie in (0, 1), got {show_prob}"
                    )));
                }
            }
            ValueModel::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(Error::InvalidType(format!("rate must be > 0, got {rate}")));
                }
            }
            ValueModel::Uniform { width } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::InvalidType(format!("width must be > 0, got {width}")));
                }
            }
        }
        Ok(())
    }
}

/// Which discount factor drives the period-1 decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Belief {
    /// The true present-bias factor (what actually happens).
    True,
    /// The believed factor (what the agent expects when bidding).
    Believed,
}

/// One draw of the period-1 immediate value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Period1Draw {
    Value(f64),
    /// The agent is unable to use the resource whatever the penalty.
    NeverShow,
}

impl Period1Draw {
    /// Whether an agent with this draw uses the resource when the decision
    /// threshold is `-z - b * w`. Ties favour using the resource.
    pub fn shows(self, threshold: f64) -> bool {
        match self {
            Period1Draw::Value(v) => v >= threshold,
            Period1Draw::NeverShow => false,
        }
    }
}

/// An agent's full private type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentType {
    model: ValueModel,
    future_value: f64,
    beta: f64,
    betahat: f64,
}

impl AgentType {
    /// Builds a type, checking bias ordering and the model assumptions
    /// (positive option value, negative value of always showing up).
    pub fn new(model: ValueModel, future_value: f64, beta: f64, betahat: f64) -> Result<Self> {
        model.validate()?;
        let w = future_value;
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidType(format!("future value must be >= 0, got {w}")));
        }
        if !(0.0..=1.0).contains(&beta) || !(beta..=1.0).contains(&betahat) {
            return Err(Error::InvalidType(format!(
                "need 0 <= beta <= betahat <= 1, got beta={beta}, betahat={betahat}"
            )));
        }
        match model {
            ValueModel::CiPi { cost, .. } => {
                if w <= cost {
                    return Err(Error::InvalidType(format!(
                        "future value {w} must exceed cost {cost}"
                    )));
                }
            }
            ValueModel::Exponential { rate } => {
                if !(w > 0.0 && w < 1.0 / rate) {
                    return Err(Error::InvalidType(format!(
                        "future value {w} must lie in (0, 1/rate = {})",
                        1.0 / rate
                    )));
                }
            }
            ValueModel::Uniform { width } => {
                if !(w > 0.0 && w < width / 2.0) {
                    return Err(Error::InvalidType(format!(
                        "future value {w} must lie in (0, width/2 = {})",
                        width / 2.0
                    )));
                }
            }
        }
        Ok(AgentType { model, future_value: w, beta, betahat })
    }

    pub fn cipi(cost: f64, show_prob: f64, w: f64, beta: f64, betahat: f64) -> Result<Self> {
        Self::new(ValueModel::CiPi { cost, show_prob }, w, beta, betahat)
    }

    pub fn exponential(rate: f64, w: f64, beta: f64, betahat: f64) -> Result<Self> {
        Self::new(ValueModel::Exponential { rate }, w, beta, betahat)
    }

    pub fn uniform(width: f64, w: f64, beta: f64, betahat: f64) -> Result<Self> {
        Self::new(ValueModel::Uniform { width }, w, beta, betahat)
    }

    pub fn model(&self) -> ValueModel {
        self.model
    }

    pub fn future_value(&self) -> f64 {
        self.future_value
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn betahat(&self) -> f64 {
        self.betahat
    }

    /// Same value model and future value with different bias factors.
    pub fn with_bias(&self, beta: f64, betahat: f64) -> Result<Self> {
        Self::new(self.model, self.future_value, beta, betahat)
    }

    pub fn factor(&self, belief: Belief) -> f64 {
        match belief {
            Belief::True => self.beta,
            Belief::Believed => self.betahat,
        }
    }

    /// `E[V1] + w`; finite for the exponential and uniform models only.
    pub fn expected_value(&self) -> f64 {
        let w = self.future_value;
        match self.model {
            ValueModel::CiPi { .. } => f64::NEG_INFINITY,
            ValueModel::Exponential { rate } => w - 1.0 / rate,
            ValueModel::Uniform { width } => w - width / 2.0,
        }
    }

    /// Penalty at which the CiPi agent starts showing up under `belief`.
    /// `None` for the continuous models.
    pub fn jump_point(&self, belief: Belief) -> Option<f64> {
        match self.model {
            ValueModel::CiPi { cost, .. } => Some(cost - self.factor(belief) * self.future_value),
            _ => None,
        }
    }

    /// Probability of using the resource at penalty `z`. Negative `z` is a
    /// show-up reward and is accepted.
    pub fn show_prob(&self, z: f64, belief: Belief) -> f64 {
        let b = self.factor(belief);
        let w = self.future_value;
        match self.model {
            ValueModel::CiPi { cost, show_prob } => {
                if z >= cost - b * w {
                    show_prob
                } else {
                    0.0
                }
            }
            ValueModel::Exponential { rate } => (1.0 - (-rate * (z + b * w)).exp()).max(0.0),
            ValueModel::Uniform { width } => ((z + b * w) / width).clamp(0.0, 1.0),
        }
    }

    /// Expected utility at penalty `z` when the show decision is made with
    /// factor `b` and the realized value counts the full future value.
    pub(crate) fn utility_with(&self, z: f64, b: f64) -> f64 {
        let w = self.future_value;
        match self.model {
            ValueModel::CiPi { cost, show_prob } => {
                if z < cost - b * w {
                    -z
                } else {
                    (w - cost) * show_prob - z * (1.0 - show_prob)
                }
            }
            ValueModel::Exponential { rate } => {
                let t = z + b * w;
                if t < 0.0 {
                    -z
                } else {
                    w - 1.0 / rate + (-rate * t).exp() * (1.0 / rate - (1.0 - b) * w)
                }
            }
            ValueModel::Uniform { width } => {
                let t = z + b * w;
                if t < 0.0 {
                    -z
                } else if t < width {
                    t / width * (w - t / 2.0) - z * (width - t) / width
                } else {
                    w - width / 2.0
                }
            }
        }
    }

    /// Actual expected utility `u(z)`: decisions use the true bias.
    pub fn expected_utility(&self, z: f64) -> Result<f64> {
        check_penalty(z)?;
        Ok(self.utility_with(z, self.beta))
    }

    /// Subjective expected utility `uhat(z)`: decisions use the believed bias.
    pub fn subjective_utility(&self, z: f64) -> Result<f64> {
        check_penalty(z)?;
        Ok(self.uhat(z))
    }

    #[inline]
    pub(crate) fn uhat(&self, z: f64) -> f64 {
        self.utility_with(z, self.betahat)
    }

    /// Best subjective utility when the penalty must be at least `z_min`.
    pub fn sup_utility(&self, z_min: f64) -> Result<f64> {
        check_penalty(z_min)?;
        Ok(self.sup_uhat(z_min))
    }

    pub(crate) fn sup_uhat(&self, z_min: f64) -> f64 {
        let here = self.uhat(z_min);
        match self.model {
            ValueModel::CiPi { cost, .. } => {
                let jump = cost - self.betahat * self.future_value;
                here.max(self.uhat(z_min.max(jump)))
            }
            // Strictly decreasing whenever w < 1/rate.
            ValueModel::Exponential { .. } => here,
            // Decreasing down to the interior minimum, then rising to the
            // plateau `w - width/2`, which is negative.
            ValueModel::Uniform { width } => here.max(self.future_value - width / 2.0),
        }
    }

    /// Zero-crossing of the sup-utility curve: the largest minimum penalty
    /// the agent accepts. Zero for agents that never benefit.
    pub fn max_acceptable_penalty(&self) -> f64 {
        let w = self.future_value;
        let bh = self.betahat;
        match self.model {
            ValueModel::CiPi { cost, show_prob } => {
                let crossing = (w - cost) * show_prob / (1.0 - show_prob);
                if cost - bh * w <= crossing {
                    crossing
                } else {
                    0.0
                }
            }
            ValueModel::Exponential { rate } => {
                let z = -bh * w
                    + ((1.0 - rate * w * (1.0 - bh)) / (1.0 - rate * w)).ln() / rate;
                z.max(0.0)
            }
            ValueModel::Uniform { width } => {
                let disc = width * width - 2.0 * width * w + (1.0 - bh).powi(2) * w * w;
                (width - w - disc.sqrt()).max(0.0)
            }
        }
    }

    /// Smallest maximizer of `uhat` over `[z_min, inf)`: the second-round bid.
    pub fn preferred_penalty(&self, z_min: f64) -> Result<f64> {
        check_penalty(z_min)?;
        Ok(self.preferred(z_min))
    }

    pub(crate) fn preferred(&self, z_min: f64) -> f64 {
        match self.model {
            ValueModel::CiPi { cost, .. } => {
                let jump = cost - self.betahat * self.future_value;
                if z_min >= jump || self.uhat(z_min) >= self.uhat(jump) {
                    z_min
                } else {
                    jump
                }
            }
            ValueModel::Exponential { .. } => z_min,
            ValueModel::Uniform { width } => {
                let plateau = self.future_value - width / 2.0;
                if self.uhat(z_min) >= plateau {
                    z_min
                } else {
                    width - self.betahat * self.future_value
                }
            }
        }
    }

    /// Dominant bid in the (m+1)th price auction: the value of the free option.
    pub fn sp_bid(&self) -> f64 {
        self.uhat(0.0)
    }

    /// Whether some strictly positive commitment leaves the agent with
    /// non-negative subjective utility (or the free option is worth something).
    pub fn participates(&self) -> bool {
        self.max_acceptable_penalty() > 0.0 || self.uhat(0.0) > 0.0
    }

    /// Expected welfare `E[(V1 + w) 1{shows}]` of the allocated agent at
    /// penalty `z`; the show decision uses the true bias.
    pub fn welfare_at_penalty(&self, z: f64) -> Result<f64> {
        check_penalty(z)?;
        Ok(self.welfare(z))
    }

    pub(crate) fn welfare(&self, z: f64) -> f64 {
        let w = self.future_value;
        let b = self.beta;
        match self.model {
            ValueModel::CiPi { cost, show_prob } => {
                if z >= cost - b * w {
                    (w - cost) * show_prob
                } else {
                    0.0
                }
            }
            ValueModel::Exponential { rate } => {
                let t = z + b * w;
                if t < 0.0 {
                    0.0
                } else {
                    w - 1.0 / rate + (-rate * t).exp() * (1.0 / rate - (1.0 - b) * w + z)
                }
            }
            ValueModel::Uniform { width } => {
                let t = z + b * w;
                if t < 0.0 {
                    0.0
                } else if t < width {
                    t / width * (w - t / 2.0)
                } else {
                    w - width / 2.0
                }
            }
        }
    }

    /// Draws the period-1 immediate value.
    pub fn sample_period1_value<R: Rng + ?Sized>(&self, rng: &mut R) -> Period1Draw {
        match self.model {
            ValueModel::CiPi { cost, show_prob } => {
                if rng.random::<f64>() < show_prob {
                    Period1Draw::Value(-cost)
                } else {
                    Period1Draw::NeverShow
                }
            }
            ValueModel::Exponential { rate } => {
                let x: f64 = Exp::new(rate).expect("rate validated").sample(rng);
                Period1Draw::Value(-x)
            }
            ValueModel::Uniform { width } => Period1Draw::Value(-width * rng.random::<f64>()),
        }
    }
}

pub(crate) fn check_penalty(z: f64) -> Result<()> {
    if z >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativePenalty(z))
    }
}

/// A market: agent types plus the number of identical resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economy {
    agents: Vec<AgentType>,
    resources: usize,
}

impl Economy {
    pub fn new(agents: Vec<AgentType>, resources: usize) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidEconomy("need at least one agent".into()));
        }
        if resources == 0 {
            return Err(Error::InvalidEconomy("need at least one resource".into()));
        }
        Ok(Economy { agents, resources })
    }

    pub fn agents(&self) -> &[AgentType] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentType {
        &self.agents[i]
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn resources(&self) -> usize {
        self.resources
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + b.abs())
    }

    fn ex4_agent1() -> AgentType {
        AgentType::cipi(10.0, 0.8, 16.0, 0.5, 0.5).unwrap()
    }

    fn ex4_agent2() -> AgentType {
        AgentType::cipi(6.0, 0.5, 10.0, 0.8, 0.8).unwrap()
    }

    fn ex7_agent1() -> AgentType {
        AgentType::cipi(5.0, 0.8, 7.5, 0.2, 1.0).unwrap()
    }

    #[test]
    fn rejects_invalid_types() {
        assert!(AgentType::cipi(10.0, 1.0, 16.0, 0.5, 0.5).is_err());
        assert!(AgentType::cipi(10.0, 0.5, 10.0, 0.5, 0.5).is_err());
        assert!(AgentType::exponential(0.2, 5.0, 0.5, 0.5).is_err());
        assert!(AgentType::exponential(0.2, 0.0, 0.5, 0.5).is_err());
        assert!(AgentType::uniform(10.0, 5.0, 0.5, 0.5).is_err());
        assert!(AgentType::uniform(10.0, 4.0, 0.6, 0.5).is_err());
        assert!(AgentType::uniform(10.0, 4.0, -0.1, 0.5).is_err());
        assert!(Economy::new(vec![], 1).is_err());
        assert!(Economy::new(vec![ex4_agent1()], 0).is_err());
    }

    #[test]
    fn negative_penalties_rejected() {
        let a = ex4_agent1();
        assert_eq!(a.expected_utility(-1.0), Err(Error::NegativePenalty(-1.0)));
        assert!(a.subjective_utility(-0.5).is_err());
        assert!(a.sup_utility(-0.5).is_err());
        assert!(a.preferred_penalty(-0.5).is_err());
        assert!(a.welfare_at_penalty(-0.5).is_err());
    }

    #[test]
    fn show_prob_examples() {
        assert!(close(ex4_agent1().show_prob(4.0, Belief::True), 0.8));
        let e = AgentType::new(ValueModel::Exponential { rate: 0.2 }, 0.0, 0.5, 0.5);
        // w = 0 violates the option-value assumption, so evaluate the curve directly.
        assert!(e.is_err());
        let e = AgentType { model: ValueModel::Exponential { rate: 0.2 }, future_value: 0.0, beta: 0.5, betahat: 0.5 };
        assert_eq!(e.show_prob(0.0, Belief::True), 0.0);
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!(close(u.show_prob(1.0, Belief::True), 0.5));
    }

    #[test]
    fn uniform_show_prob_matches_sampling() {
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let shows = (0..n)
            .filter(|_| u.sample_period1_value(&mut rng).shows(-1.0 - 4.0))
            .count();
        let freq = shows as f64 / n as f64;
        assert!((freq - 0.5).abs() < 4.0 * (0.25f64 / n as f64).sqrt(), "{freq}");
    }

    #[test]
    fn utility_examples() {
        assert!(close(ex4_agent2().expected_utility(0.0).unwrap(), 2.0));
        assert!(close(ex4_agent1().expected_utility(0.0).unwrap(), 0.0));
        assert!(close(ex4_agent1().expected_utility(4.0).unwrap(), 4.0));
        assert!(close(ex7_agent1().subjective_utility(0.0).unwrap(), 2.0));
        let e = AgentType::exponential(0.2, 2.5, 1.0, 1.0).unwrap();
        let expected = 2.5 - 5.0 + 5.0 * (-0.7f64).exp();
        assert!(close(e.subjective_utility(1.0).unwrap(), expected));
    }

    #[test]
    fn cipi_utility_matches_two_point_sampling() {
        let a = ex4_agent1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = 4.0;
        let n = 400_000;
        let mut total = 0.0;
        for _ in 0..n {
            let d = a.sample_period1_value(&mut rng);
            total += match d {
                Period1Draw::Value(v) if d.shows(-z - a.beta() * a.future_value()) => v + 16.0,
                _ => -z,
            };
        }
        let mean = total / n as f64;
        // per-draw standard deviation is at most |6 - (-4)| / 2 = 5
        assert!((mean - 4.0).abs() < 4.0 * 5.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn sup_utility_examples() {
        // 4.8 - 0.2 z at the jump point z = 2
        assert!(close(ex4_agent1().sup_utility(0.0).unwrap(), 4.4));
        assert!(close(ex4_agent2().sup_utility(4.0).unwrap(), 0.0));
        let r = AgentType::exponential(0.1, 3.0, 1.0, 1.0).unwrap();
        assert!(close(r.sup_utility(0.0).unwrap(), r.subjective_utility(0.0).unwrap()));
    }

    #[test]
    fn max_acceptable_penalty_examples() {
        assert!(close(ex4_agent1().max_acceptable_penalty(), 24.0));
        assert!(close(ex4_agent2().max_acceptable_penalty(), 4.0));
        let ex8_1 = AgentType::cipi(10.0, 0.5, 20.0, 0.2, 0.2).unwrap();
        let ex8_2 = AgentType::cipi(5.0, 0.6, 10.0, 1.0, 1.0).unwrap();
        assert!(close(ex8_1.max_acceptable_penalty(), 10.0));
        assert!(close(ex8_2.max_acceptable_penalty(), 7.5));
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!(close(u.max_acceptable_penalty(), 6.0 - 20f64.sqrt()));
    }

    #[test]
    fn cipi_non_participant_bids_zero() {
        // jump point 9.5 exceeds the crossing (w-c)p/(1-p) = 1
        let a = AgentType::cipi(10.0, 0.5, 11.0, 0.05, 0.05).unwrap();
        assert_eq!(a.max_acceptable_penalty(), 0.0);
        assert!(!a.participates());
        assert_eq!(a.preferred_penalty(0.0).unwrap(), 0.0);
        assert_eq!(a.sp_bid(), 0.0);
    }

    #[test]
    fn preferred_penalty_examples() {
        assert!(close(ex4_agent1().preferred_penalty(4.0).unwrap(), 4.0));
        assert!(close(ex7_agent1().preferred_penalty(3.0).unwrap(), 3.0));
        let a = AgentType::cipi(10.0, 0.8, 16.0, 0.5, 0.5).unwrap();
        assert!(close(a.preferred_penalty(0.0).unwrap(), 2.0));
    }

    #[test]
    fn uniform_preferred_penalty_above_crossing_picks_plateau() {
        let u = AgentType::uniform(10.0, 4.0, 0.5, 0.5).unwrap();
        // minimum at z = 6, plateau w - width/2 = -1 from z = width - betahat w = 8
        assert!(close(u.subjective_utility(7.0).unwrap(), -1.15));
        assert!(close(u.preferred_penalty(7.0).unwrap(), 8.0));
        assert!(close(u.sup_utility(7.0).unwrap(), -1.0));
        assert!(close(u.preferred_penalty(1.0).unwrap(), 1.0));
        // with betahat = 1 the curve falls all the way into the plateau
        let r = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!(close(r.preferred_penalty(5.0).unwrap(), 5.0));
    }

    #[test]
    fn sp_bid_examples() {
        let ex8_1 = AgentType::cipi(10.0, 0.5, 20.0, 0.2, 0.2).unwrap();
        assert!(close(ex8_1.sp_bid(), 0.0));
        let ex7_2 = AgentType::cipi(5.0, 1.0 / 6.0, 20.0, 1.0, 1.0).unwrap();
        assert!(close(ex7_2.sp_bid(), 2.5));
        let e = AgentType::exponential(0.2, 2.5, 1.0, 1.0).unwrap();
        assert!(close(e.sp_bid(), 2.5 - 5.0 + 5.0 * (-0.5f64).exp()));
        assert!((e.sp_bid() - 0.532653).abs() < 1e-6);
    }

    #[test]
    fn welfare_examples() {
        assert_eq!(ex7_agent1().welfare_at_penalty(3.0).unwrap(), 0.0);
        assert!(close(ex7_agent1().welfare_at_penalty(3.5).unwrap(), 2.5 * 0.8));
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!(close(u.welfare_at_penalty(1.0).unwrap(), 0.75));
    }

    #[test]
    fn sampling_support_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        for _ in 0..10_000 {
            match u.sample_period1_value(&mut rng) {
                Period1Draw::Value(v) => assert!((-10.0..=0.0).contains(&v)),
                Period1Draw::NeverShow => panic!("uniform never misses"),
            }
        }
        let c = ex4_agent1();
        for _ in 0..1000 {
            match c.sample_period1_value(&mut rng) {
                Period1Draw::Value(v) => assert_eq!(v, -10.0),
                Period1Draw::NeverShow => {}
            }
        }
        let e = AgentType::exponential(0.2, 2.5, 1.0, 1.0).unwrap();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            if let Period1Draw::Value(v) = e.sample_period1_value(&mut rng) {
                sum += v;
            }
        }
        assert!((sum / n as f64 + 5.0).abs() < 0.02);
    }

    #[test]
    fn never_show_draw_never_shows() {
        assert!(!Period1Draw::NeverShow.shows(-1e300));
        assert!(Period1Draw::Value(-2.0).shows(-2.0));
    }
}
