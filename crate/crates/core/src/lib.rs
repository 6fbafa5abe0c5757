//! Contingent-payment allocation mechanisms for present-biased agents.
//!
//! Agents bid in period 0 for one of `m` identical resources; in period 1
//! an allocated agent learns an immediate value and decides whether to use
//! the resource or pay a no-show penalty. The crate provides the agent
//! models with closed-form penalty curves, the mechanisms, analytic
//! metrics, numerical oracles that cross-check every closed form, and a
//! seeded Monte Carlo experiment harness.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent_types;
pub mod cli;
pub mod error;
pub mod mechanisms;
pub mod metrics;
pub mod numeric_oracle;
pub mod simulation;

pub use agent_types::{AgentType, Belief, Economy, Period1Draw, ValueModel};
pub use error::{Error, Result};
pub use mechanisms::{
    run_fcfs, run_fcfs_with_order, run_gcsp, run_gcsp_with_order, run_mplus1_auction, run_mplus1_auction_with_order,
    run_two_bid, run_two_bid_with_order, MechanismKind, MechanismOutcome, TwoPartPayment,
};
pub use metrics::{evaluate, first_best, first_best_agent, AgentMetrics, FirstBest, FirstBestAgent, Objective, OutcomeMetrics};
pub use numeric_oracle::{lambert_w_minus1, OracleConfig};
