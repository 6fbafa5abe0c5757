//! Best-response search over first-round bids against opponent profiles.
//!
//! Against any opponent profile the only thing a single bid changes is the
//! probability of being allocated (ties are split uniformly); once allocated
//! the price or minimum penalty is the m-th highest opponent bid. The search
//! evaluates every candidate bid against every profile and reports whether
//! the prescribed equilibrium bid is weakly optimal throughout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent_types::{AgentType, Belief, Economy};

use super::curves::{grid_sup, search_bound};
use super::OracleConfig;

/// Strict improvements below this are treated as numerical noise.
pub const GAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMechanism {
    TwoBid,
    MPlus1,
    Gcsp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub opponent_bids: Vec<f64>,
    pub best_bid: f64,
    pub best_value: f64,
    pub prescribed_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub prescribed_bid: f64,
    /// Best deviation against the profile where deviating gains the most.
    pub best_bid: f64,
    pub best_value: f64,
    /// Largest gain of any deviation over the prescribed strategy.
    pub max_gain: f64,
    /// The prescribed strategy is weakly optimal against every profile.
    pub prescribed_dominant: bool,
    /// Candidate bids that are weakly optimal against every profile.
    pub dominant_bids: Vec<f64>,
    pub profiles: Vec<ProfileReport>,
}

/// Allocation probability of bidding `bid` against `opponents` for `m` slots.
pub fn allocation_probability(bid: f64, opponents: &[f64], m: usize) -> f64 {
    let above = opponents.iter().filter(|&&b| b > bid).count();
    let tied = opponents.iter().filter(|&&b| b == bid).count();
    if above >= m {
        0.0
    } else if above + tied < m {
        1.0
    } else {
        (m - above) as f64 / (tied + 1) as f64
    }
}

/// Price (or minimum penalty) faced when allocated: the m-th highest
/// opponent bid, or zero without contention.
pub fn clearing_price(opponents: &[f64], m: usize) -> f64 {
    if opponents.len() < m {
        return 0.0;
    }
    let mut v = opponents.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[m - 1]
}

pub fn prescribed_bid(a: &AgentType, mech: SearchMechanism) -> f64 {
    match mech {
        SearchMechanism::TwoBid | SearchMechanism::Gcsp => a.max_acceptable_penalty(),
        SearchMechanism::MPlus1 => a.sp_bid(),
    }
}

/// Candidate bids: the caller's grid plus every boundary that matters.
fn candidate_bids(a: &AgentType, prescribed: f64, opponents: &[Vec<f64>], user_grid: &[f64]) -> Vec<f64> {
    let mut bids = user_grid.to_vec();
    bids.push(0.0);
    bids.push(prescribed);
    let mut marks = vec![prescribed];
    if let Some(j) = a.jump_point(Belief::Believed) {
        marks.push(j);
    }
    for profile in opponents {
        marks.extend(profile.iter().copied());
    }
    for x in marks {
        let d = 1e-7 * (1.0 + x.abs());
        bids.extend([x - d, x, x + d]);
    }
    let top = bids.iter().fold(0.0f64, |m, &b| m.max(b));
    bids.push(2.0 * top + 1.0);
    bids.retain(|b| b.is_finite() && *b >= 0.0);
    bids.sort_by(f64::total_cmp);
    bids.dedup();
    bids
}

/// Random and adversarial opponent profiles for agent `i` of `e`.
pub fn opponent_profiles<R: Rng + ?Sized>(
    e: &Economy,
    i: usize,
    mech: SearchMechanism,
    random_profiles: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let a = e.agent(i);
    let others = e.len() - 1;
    let m = e.resources();
    let mut profiles = Vec::new();
    // the actual equilibrium bids of the other agents
    profiles.push(
        (0..e.len())
            .filter(|&k| k != i)
            .map(|k| prescribed_bid(e.agent(k), mech))
            .collect::<Vec<_>>(),
    );
    if others == 0 {
        return profiles;
    }
    let prescribed = prescribed_bid(a, mech);
    let jump = a.jump_point(Belief::Believed).unwrap_or(0.0).max(0.0);
    let scale = prescribed.max(jump).max(a.sp_bid()).max(1.0);
    for _ in 0..random_profiles {
        profiles.push((0..others).map(|_| rng.random::<f64>() * 1.5 * scale).collect());
    }
    if others >= m {
        let mut targets = vec![0.0, prescribed, jump, 0.5 * jump, 0.5 * (jump + prescribed)];
        for x in [prescribed, jump] {
            let d = 1e-6 * (1.0 + x);
            targets.extend([x - d, x + d]);
        }
        let high = 2.0 * scale + 1.0;
        for t in targets.into_iter().filter(|t| *t >= 0.0) {
            let mut p = vec![high; m - 1];
            p.push(t);
            while p.len() < others {
                p.push(rng.random::<f64>() * t);
            }
            profiles.push(p);
        }
    }
    profiles
}

/// Searches bids for agent `i` against the given opponent profiles.
/// For the two-bid mechanism the second-round choice is optimized by grid
/// search above the induced minimum penalty.
pub fn best_response_search(
    e: &Economy,
    i: usize,
    mech: SearchMechanism,
    bid_grid: &[f64],
    profiles: &[Vec<f64>],
    cfg: &OracleConfig,
) -> BestResponseReport {
    let a = e.agent(i);
    let m = e.resources();
    let prescribed = prescribed_bid(a, mech);
    let bids = candidate_bids(a, prescribed, profiles, bid_grid);

    let mut worst_gain = f64::NEG_INFINITY;
    let mut best_bid = prescribed;
    let mut best_value = 0.0;
    let mut still_dominant = vec![true; bids.len()];
    let mut reports = Vec::with_capacity(profiles.len());

    for opp in profiles {
        let price = clearing_price(opp, m);
        // value of being allocated, under optimal follow-up for the deviator
        let allocated_value = match mech {
            SearchMechanism::TwoBid => grid_sup(a, price, cfg).expect("price >= 0").value,
            SearchMechanism::MPlus1 => a.uhat(0.0) - price,
            SearchMechanism::Gcsp => a.uhat(price),
        };
        let prescribed_value = match mech {
            SearchMechanism::TwoBid if !a.participates() => 0.0,
            SearchMechanism::TwoBid => {
                allocation_probability(prescribed, opp, m) * a.uhat(a.preferred(price))
            }
            _ => allocation_probability(prescribed, opp, m) * allocated_value,
        };
        let values: Vec<f64> = bids
            .iter()
            .map(|&b| allocation_probability(b, opp, m) * allocated_value)
            .collect();
        let (k_best, v_best) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        // declining to bid at all is always available
        let v_best = v_best.max(0.0);
        for (k, &v) in values.iter().enumerate() {
            if v < v_best - GAIN_TOLERANCE {
                still_dominant[k] = false;
            }
        }
        let gain = v_best - prescribed_value;
        if gain > worst_gain {
            worst_gain = gain;
            best_bid = bids[k_best];
            best_value = v_best;
        }
        reports.push(ProfileReport {
            opponent_bids: opp.clone(),
            best_bid: bids[k_best],
            best_value: v_best,
            prescribed_value,
        });
    }

    let dominant_bids = bids
        .iter()
        .zip(&still_dominant)
        .filter(|(_, &d)| d)
        .map(|(&b, _)| b)
        .collect();
    BestResponseReport {
        prescribed_bid: prescribed,
        best_bid,
        best_value,
        max_gain: worst_gain,
        prescribed_dominant: worst_gain <= GAIN_TOLERANCE,
        dominant_bids,
        profiles: reports,
    }
}

/// Default bid grid: evenly spaced over the agent's relevant penalty range.
pub fn default_bid_grid(a: &AgentType, points: usize) -> Vec<f64> {
    let hi = 1.5 * search_bound(a);
    (0..points).map(|k| hi * k as f64 / (points - 1).max(1) as f64).collect()
}
