//! Two-period allocation mechanisms.
//!
//! Every mechanism maps an economy (or raw bids) plus a random stream to an
//! analytic [`MechanismOutcome`]: who is allocated and which two-part payment
//! each agent faces. Show/no-show realizations are not sampled here.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent_types::Economy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    TwoBid,
    MPlus1,
    Gcsp,
    Fcfs,
}

impl MechanismKind {
    pub fn label(self) -> &'static str {
        match self {
            MechanismKind::TwoBid => "2BPB",
            MechanismKind::MPlus1 => "MPlus1",
            MechanismKind::Gcsp => "GCSP",
            MechanismKind::Fcfs => "FCFS",
        }
    }
}

/// Base payment owed for sure plus a penalty owed only on a no-show.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoPartPayment {
    pub base: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    pub mechanism: MechanismKind,
    /// Allocated agent indices, in allocation order.
    pub allocated: Vec<usize>,
    /// One entry per agent.
    pub payments: Vec<TwoPartPayment>,
    /// One entry per agent; empty for mechanisms without bids.
    pub first_bids: Vec<f64>,
    /// Aligned with `allocated`; empty without a second round.
    pub second_bids: Vec<f64>,
    /// Announced (m+1)th first bid; zero outside the two-bid mechanism.
    pub min_penalty: f64,
}

impl MechanismOutcome {
    pub fn is_allocated(&self, i: usize) -> bool {
        self.allocated.contains(&i)
    }

    pub fn payment(&self, i: usize) -> TwoPartPayment {
        self.payments[i]
    }
}

/// Agents ordered by decreasing bid; equal bids keep the order of `tie_order`
/// (a permutation of `0..n`, earlier wins).
fn rank(bids: &[f64], eligible: &[bool], tie_order: &[usize]) -> Vec<usize> {
    let mut priority = vec![0usize; bids.len()];
    for (pos, &i) in tie_order.iter().enumerate() {
        priority[i] = pos;
    }
    let mut order: Vec<usize> = (0..bids.len()).filter(|&i| eligible[i]).collect();
    order.sort_by(|&a, &b| bids[b].total_cmp(&bids[a]).then(priority[a].cmp(&priority[b])));
    order
}

/// The (m+1)th highest entry of `bids` restricted to `eligible`, or 0.
fn clearing_bid(bids: &[f64], eligible: &[bool], m: usize) -> f64 {
    let mut v: Vec<f64> = bids
        .iter()
        .zip(eligible)
        .filter(|(_, &e)| e)
        .map(|(&b, _)| b)
        .collect();
    if v.len() <= m {
        return 0.0;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v[m]
}

fn random_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Two-bid penalty bidding with dominant-strategy bids.
pub fn run_two_bid<R: Rng + ?Sized>(e: &Economy, rng: &mut R) -> MechanismOutcome {
    let order = random_order(e.len(), rng);
    run_two_bid_with_order(e, &order)
}

/// [`run_two_bid`] with an explicit tie-break permutation.
pub fn run_two_bid_with_order(e: &Economy, tie_order: &[usize]) -> MechanismOutcome {
    let n = e.len();
    let m = e.resources();
    let first_bids: Vec<f64> = e.agents().iter().map(|a| a.max_acceptable_penalty()).collect();
    let eligible: Vec<bool> = e.agents().iter().map(|a| a.participates()).collect();
    let min_penalty = clearing_bid(&first_bids, &eligible, m);
    let allocated: Vec<usize> = rank(&first_bids, &eligible, tie_order).into_iter().take(m).collect();
    let mut payments = vec![TwoPartPayment::default(); n];
    let mut second_bids = Vec::with_capacity(allocated.len());
    for &i in &allocated {
        let z = e.agent(i).preferred(min_penalty);
        payments[i].penalty = z;
        second_bids.push(z);
    }
    MechanismOutcome {
        mechanism: MechanismKind::TwoBid,
        allocated,
        payments,
        first_bids,
        second_bids,
        min_penalty,
    }
}

/// (m+1)th price auction with dominant bids `uhat(0)`.
pub fn run_mplus1_auction<R: Rng + ?Sized>(e: &Economy, rng: &mut R) -> MechanismOutcome {
    let order = random_order(e.len(), rng);
    run_mplus1_auction_with_order(e, &order)
}

pub fn run_mplus1_auction_with_order(e: &Economy, tie_order: &[usize]) -> MechanismOutcome {
    let n = e.len();
    let m = e.resources();
    let bids: Vec<f64> = e.agents().iter().map(|a| a.sp_bid()).collect();
    let eligible = vec![true; n];
    let price = clearing_bid(&bids, &eligible, m);
    let allocated: Vec<usize> = rank(&bids, &eligible, tie_order).into_iter().take(m).collect();
    let mut payments = vec![TwoPartPayment::default(); n];
    for &i in &allocated {
        payments[i].base = price;
    }
    MechanismOutcome {
        mechanism: MechanismKind::MPlus1,
        allocated,
        payments,
        first_bids: bids,
        second_bids: Vec::new(),
        min_penalty: 0.0,
    }
}

/// Generalized contingent second price over raw bids: the top `m` bidders
/// are allocated and each owes the highest losing bid on a no-show.
pub fn run_gcsp<R: Rng + ?Sized>(bids: &[f64], m: usize, rng: &mut R) -> MechanismOutcome {
    let order = random_order(bids.len(), rng);
    run_gcsp_with_order(bids, m, &order)
}

pub fn run_gcsp_with_order(bids: &[f64], m: usize, tie_order: &[usize]) -> MechanismOutcome {
    let n = bids.len();
    let eligible = vec![true; n];
    let penalty = clearing_bid(bids, &eligible, m);
    let allocated: Vec<usize> = rank(bids, &eligible, tie_order).into_iter().take(m).collect();
    let mut payments = vec![TwoPartPayment::default(); n];
    for &i in &allocated {
        payments[i].penalty = penalty;
    }
    MechanismOutcome {
        mechanism: MechanismKind::Gcsp,
        allocated,
        payments,
        first_bids: bids.to_vec(),
        second_bids: Vec::new(),
        min_penalty: 0.0,
    }
}

/// First-come-first-serve at a fixed penalty. Agents arrive in random order
/// and accept iff their subjective utility at the penalty is non-negative;
/// decliners do not block later arrivals.
pub fn run_fcfs<R: Rng + ?Sized>(e: &Economy, fixed_penalty: f64, rng: &mut R) -> MechanismOutcome {
    let order = random_order(e.len(), rng);
    run_fcfs_with_order(e, fixed_penalty, &order)
}

pub fn run_fcfs_with_order(e: &Economy, fixed_penalty: f64, arrival: &[usize]) -> MechanismOutcome {
    assert!(fixed_penalty >= 0.0, "FCFS penalty must be non-negative");
    let m = e.resources();
    let allocated: Vec<usize> = arrival
        .iter()
        .copied()
        .filter(|&i| e.agent(i).uhat(fixed_penalty) >= 0.0)
        .take(m)
        .collect();
    let mut payments = vec![TwoPartPayment::default(); e.len()];
    for &i in &allocated {
        payments[i].penalty = fixed_penalty;
    }
    MechanismOutcome {
        mechanism: MechanismKind::Fcfs,
        allocated,
        payments,
        first_bids: Vec::new(),
        second_bids: Vec::new(),
        min_penalty: 0.0,
    }
}
