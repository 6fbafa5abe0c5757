//! The worked two-agent CiPi examples, recomputed and checked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent_types::{AgentType, Economy};
use crate::mechanisms::{run_mplus1_auction, run_two_bid, MechanismOutcome};
use crate::metrics::{evaluate, OutcomeMetrics};

use super::verify::{gcsp_certificate, CheckResult};

pub const EXAMPLE_TOL: f64 = 1e-9;

fn economy(agents: [(f64, f64, f64, f64, f64); 2]) -> Economy {
    let agents = agents
        .iter()
        .map(|&(c, p, w, b, bh)| AgentType::cipi(c, p, w, b, bh).expect("valid example type"))
        .collect();
    Economy::new(agents, 1).expect("valid example")
}

pub fn example_4() -> Economy {
    economy([(10.0, 0.8, 16.0, 0.5, 0.5), (6.0, 0.5, 10.0, 0.8, 0.8)])
}

pub fn example_7() -> Economy {
    economy([(5.0, 0.8, 7.5, 0.2, 1.0), (5.0, 1.0 / 6.0, 20.0, 1.0, 1.0)])
}

pub fn example_8() -> Economy {
    economy([(10.0, 0.5, 20.0, 0.2, 0.2), (5.0, 0.6, 10.0, 1.0, 1.0)])
}

struct Checker {
    prefix: &'static str,
    out: Vec<CheckResult>,
}

impl Checker {
    fn value(&mut self, what: &str, actual: f64, expected: f64) {
        self.out.push(CheckResult {
            name: format!("{} {what}", self.prefix),
            passed: (actual - expected).abs() <= EXAMPLE_TOL,
            detail: format!("{actual} (expected {expected})"),
        });
    }
}

fn run(e: &Economy) -> (MechanismOutcome, OutcomeMetrics, MechanismOutcome, OutcomeMetrics) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tb = run_two_bid(e, &mut rng);
    let sp = run_mplus1_auction(e, &mut rng);
    let (tbm, spm) = (evaluate(e, &tb).expect("consistent"), evaluate(e, &sp).expect("consistent"));
    (tb, tbm, sp, spm)
}

/// Every figure quoted for Examples 3, 4, 7 and 8.
pub fn example_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let r = gcsp_certificate(0);
    out.push(CheckResult {
        name: "ex3 GCSP dominant bids".into(),
        passed: r.dominant_bids.is_empty(),
        detail: format!("{} candidate bids weakly optimal against every profile (expected 0)", r.dominant_bids.len()),
    });

    let mut c = Checker { prefix: "ex4", out: Vec::new() };
    let (tb, tbm, _, spm) = run(&example_4());
    c.value("2BPB bid 1", tb.first_bids[0], 24.0);
    c.value("2BPB bid 2", tb.first_bids[1], 4.0);
    c.value("2BPB penalty", tb.payments[0].penalty, 4.0);
    c.value("2BPB welfare", tbm.welfare, 4.8);
    c.value("2BPB utilization", tbm.utilization, 0.8);
    c.value("2BPB revenue", tbm.revenue, 0.8);
    c.value("MPlus1 welfare", spm.welfare, 2.0);
    c.value("MPlus1 utilization", spm.utilization, 0.5);
    out.extend(c.out);

    let mut c = Checker { prefix: "ex7", out: Vec::new() };
    let (tb, tbm, sp, spm) = run(&example_7());
    c.value("MPlus1 bid 1", sp.first_bids[0], 2.0);
    c.value("MPlus1 bid 2", sp.first_bids[1], 2.5);
    c.value("MPlus1 welfare", spm.welfare, 2.5);
    c.value("MPlus1 utilization", spm.utilization, 1.0 / 6.0);
    c.value("2BPB bid 1", tb.first_bids[0], 10.0);
    c.value("2BPB bid 2", tb.first_bids[1], 3.0);
    c.value("2BPB chosen penalty", tb.payments[0].penalty, 3.0);
    c.value("2BPB welfare", tbm.welfare, 0.0);
    c.value("2BPB utilization", tbm.utilization, 0.0);
    out.extend(c.out);

    let mut c = Checker { prefix: "ex8", out: Vec::new() };
    let (tb, tbm, _, spm) = run(&example_8());
    c.value("MPlus1 welfare", spm.welfare, 3.0);
    c.value("MPlus1 utilization", spm.utilization, 0.6);
    c.value("2BPB bid 1", tb.first_bids[0], 10.0);
    c.value("2BPB bid 2", tb.first_bids[1], 7.5);
    c.value("2BPB welfare", tbm.welfare, 5.0);
    c.value("2BPB utilization", tbm.utilization, 0.5);
    out.extend(c.out);
    out
}
