//! Oracle batteries behind `verify`: closed forms against quadrature,
//! bisection and grid search, and best-response searches for the two-bid
//! mechanism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agent_types::{AgentType, Economy};
use crate::error::Result;
use crate::metrics::{first_best_agent, Objective};
use crate::numeric_oracle::{
    best_response_search, default_bid_grid, grid_first_best, numeric_zero_crossing, opponent_profiles,
    quad_expected_utility, quad_subjective_utility, quad_welfare, search_bound, BestResponseReport, OracleConfig,
    SearchMechanism, GAIN_TOLERANCE,
};
use crate::simulation::{sample_economy, BiasRegime, ModelFamily, PopulationSpec};

pub const CURVE_TOL: f64 = 1e-6;
pub const FIRST_BEST_TOL: f64 = 1e-4;

pub const FAMILIES: [ModelFamily; 3] = [ModelFamily::CiPi, ModelFamily::Exponential, ModelFamily::Uniform];
pub const REGIMES: [BiasRegime; 4] =
    [BiasRegime::Rational, BiasRegime::Naive, BiasRegime::Sophisticated, BiasRegime::PartiallyNaive];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn stream(seed: u64, tag: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(k);
    rng
}

fn tag(family: ModelFamily, regime: BiasRegime) -> u64 {
    let f = FAMILIES.iter().position(|x| *x == family).unwrap_or(0) as u64;
    let r = REGIMES.iter().position(|x| *x == regime).unwrap_or(9) as u64;
    1 + 16 * f + r
}

/// One agent drawn from the simulation population of `family`/`regime`.
pub fn random_type<R: Rng + ?Sized>(family: ModelFamily, regime: BiasRegime, rng: &mut R) -> AgentType {
    let e = sample_economy(&PopulationSpec::new(family, regime), 1, 1, rng).expect("valid population");
    *e.agent(0)
}

/// Largest absolute closed-form-vs-oracle errors over a batch of types.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CurveErrors {
    pub samples: usize,
    pub subjective_utility: f64,
    pub expected_utility: f64,
    pub welfare: f64,
    pub zero_crossing: f64,
}

impl CurveErrors {
    pub fn max(&self) -> f64 {
        self.subjective_utility.max(self.expected_utility).max(self.welfare).max(self.zero_crossing)
    }
}

fn curve_errors_one(a: &AgentType, z: f64, cfg: &OracleConfig) -> Result<CurveErrors> {
    let zc = numeric_zero_crossing(a, cfg)?;
    Ok(CurveErrors {
        samples: 1,
        subjective_utility: (quad_subjective_utility(a, z, cfg)? - a.uhat(z)).abs(),
        expected_utility: (quad_expected_utility(a, z, cfg)? - a.utility_with(z, a.beta())).abs(),
        welfare: (quad_welfare(a, z, cfg)? - a.welfare(z)).abs(),
        zero_crossing: (zc - a.max_acceptable_penalty()).abs(),
    })
}

fn merge(a: CurveErrors, b: CurveErrors) -> CurveErrors {
    CurveErrors {
        samples: a.samples + b.samples,
        subjective_utility: a.subjective_utility.max(b.subjective_utility),
        expected_utility: a.expected_utility.max(b.expected_utility),
        welfare: a.welfare.max(b.welfare),
        zero_crossing: a.zero_crossing.max(b.zero_crossing),
    }
}

/// Curves at a random penalty, and the zero-crossing, for `samples` types.
pub fn curve_errors(family: ModelFamily, regime: BiasRegime, samples: usize, seed: u64) -> Result<CurveErrors> {
    let cfg = OracleConfig { seed, ..OracleConfig::default() };
    (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, tag(family, regime), k);
            let a = random_type(family, regime, &mut rng);
            let z = 1.2 * search_bound(&a) * rng.random::<f64>();
            curve_errors_one(&a, z, &cfg)
        })
        .try_reduce(CurveErrors::default, |a, b| Ok(merge(a, b)))
}

/// Largest `(welfare, utilization)` gaps between the first-best closed
/// forms and constrained grid maximization.
pub fn first_best_errors(family: ModelFamily, regime: BiasRegime, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let cfg = OracleConfig { seed, ..OracleConfig::default() };
    (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, 1000 + tag(family, regime), k);
            let a = random_type(family, regime, &mut rng);
            // the grid has no participation constraint; compare the transfer variant
            let w = first_best_agent(&a, Objective::Welfare, true)?.value;
            let u = first_best_agent(&a, Objective::Utilization, false)?.value;
            Ok((
                (w - grid_first_best(&a, Objective::Welfare, &cfg)).abs(),
                (u - grid_first_best(&a, Objective::Utilization, &cfg)).abs(),
            ))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DseSummary {
    pub economies: usize,
    pub agents_checked: usize,
    pub profiles_checked: usize,
    pub max_gain: f64,
    pub worst: Option<String>,
}

/// Best-response battery for the two-bid mechanism on random economies of
/// 2 to 6 agents with one or two resources.
pub fn dse_battery(family: ModelFamily, economies: usize, seed: u64) -> Result<DseSummary> {
    let cfg = OracleConfig { grid_points: 2001, seed, ..OracleConfig::default() };
    let per_economy = (0..economies as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, 2000 + tag(family, BiasRegime::Rational), k);
            let regime = REGIMES[rng.random_range(0..REGIMES.len())];
            let n = rng.random_range(2..=6);
            let m = 1 + (k as usize % 2);
            let e = sample_economy(&PopulationSpec::new(family, regime), n, m, &mut rng)?;
            let mut s = DseSummary { economies: 1, ..DseSummary::default() };
            s.max_gain = f64::NEG_INFINITY;
            for i in 0..e.len() {
                let profiles = opponent_profiles(&e, i, SearchMechanism::TwoBid, 32, &mut rng);
                let grid = default_bid_grid(e.agent(i), 60);
                let r = best_response_search(&e, i, SearchMechanism::TwoBid, &grid, &profiles, &cfg);
                s.agents_checked += 1;
                s.profiles_checked += profiles.len();
                if r.max_gain > s.max_gain {
                    s.max_gain = r.max_gain;
                    s.worst = Some(format!("{:?} agent {i}: bid {} gains {:e}", e.agent(i), r.best_bid, r.max_gain));
                }
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = DseSummary { max_gain: f64::NEG_INFINITY, ..DseSummary::default() };
    for s in per_economy {
        total.economies += s.economies;
        total.agents_checked += s.agents_checked;
        total.profiles_checked += s.profiles_checked;
        if s.max_gain > total.max_gain {
            total.max_gain = s.max_gain;
            total.worst = s.worst;
        }
    }
    Ok(total)
}

/// Sophisticated CiPi agent (c=10, p=0.8, w=16, beta=0.5) against one rival
/// for one resource under GCSP.
pub fn gcsp_instance() -> Economy {
    Economy::new(
        vec![
            AgentType::cipi(10.0, 0.8, 16.0, 0.5, 0.5).expect("valid"),
            AgentType::cipi(6.0, 0.5, 10.0, 0.8, 0.8).expect("valid"),
        ],
        1,
    )
    .expect("valid")
}

/// Best-response search for agent 0 of [`gcsp_instance`], with opponent
/// bids on both sides of the jump point.
pub fn gcsp_certificate(seed: u64) -> BestResponseReport {
    let e = gcsp_instance();
    let cfg = OracleConfig { grid_points: 2001, seed, ..OracleConfig::default() };
    let mut rng = stream(seed, 3000, 0);
    let mut profiles = opponent_profiles(&e, 0, SearchMechanism::Gcsp, 32, &mut rng);
    profiles.push(vec![1.0]);
    profiles.push(vec![13.0]);
    best_response_search(&e, 0, SearchMechanism::Gcsp, &default_bid_grid(e.agent(0), 200), &profiles, &cfg)
}

pub fn curves_suite(samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for family in FAMILIES {
        for regime in REGIMES {
            let e = curve_errors(family, regime, samples, seed)?;
            out.push(CheckResult {
                name: format!("curves {family:?}/{regime:?}"),
                passed: e.max() <= CURVE_TOL,
                detail: format!(
                    "{} types, max err uhat {:.2e} u {:.2e} sw {:.2e} z0 {:.2e} (tol {CURVE_TOL:e})",
                    e.samples, e.subjective_utility, e.expected_utility, e.welfare, e.zero_crossing
                ),
            });
        }
    }
    Ok(out)
}

pub fn first_best_suite(samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for family in FAMILIES {
        for regime in REGIMES {
            let (w, u) = first_best_errors(family, regime, samples, seed)?;
            out.push(CheckResult {
                name: format!("first best {family:?}/{regime:?}"),
                passed: w.max(u) <= FIRST_BEST_TOL,
                detail: format!("{samples} types, max err welfare {w:.2e} utilization {u:.2e} (tol {FIRST_BEST_TOL:e})"),
            });
        }
    }
    Ok(out)
}

pub fn dse_suite(economies: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for family in FAMILIES {
        let s = dse_battery(family, economies, seed)?;
        out.push(CheckResult {
            name: format!("2BPB dominance {family:?}"),
            passed: s.max_gain <= GAIN_TOLERANCE,
            detail: format!(
                "{} economies, {} agents, {} profiles, max deviation gain {:.2e}{}",
                s.economies,
                s.agents_checked,
                s.profiles_checked,
                s.max_gain,
                s.worst.filter(|_| s.max_gain > GAIN_TOLERANCE).map(|w| format!(" ({w})")).unwrap_or_default()
            ),
        });
    }
    let r = gcsp_certificate(seed);
    out.push(CheckResult {
        name: "GCSP has no dominant bid".into(),
        passed: r.dominant_bids.is_empty() && !r.prescribed_dominant,
        detail: format!("{} profiles, {} dominant bids, prescribed gain {:.3}", r.profiles.len(), r.dominant_bids.len(), r.max_gain),
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Curves,
    Dse,
    FirstBest,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "curves" => Some(Suite::Curves),
            "dse" => Some(Suite::Dse),
            "firstbest" => Some(Suite::FirstBest),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

/// Runs a suite; `samples` overrides the per-battery count (1000 types, or
/// 100 economies for the dominance battery).
pub fn run_suite(suite: Suite, samples: Option<usize>, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Curves | Suite::All) {
        out.extend(curves_suite(samples.unwrap_or(1000), seed)?);
    }
    if matches!(suite, Suite::FirstBest | Suite::All) {
        out.extend(first_best_suite(samples.unwrap_or(1000), seed)?);
    }
    if matches!(suite, Suite::Dse | Suite::All) {
        out.extend(dse_suite(samples.unwrap_or(100), seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batteries_pass() {
        for c in run_suite(Suite::All, Some(8), 1).unwrap() {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = curve_errors(ModelFamily::Uniform, BiasRegime::Naive, 16, 5).unwrap();
        let b = curve_errors(ModelFamily::Uniform, BiasRegime::Naive, 16, 5).unwrap();
        assert_eq!(a, b);
    }
}
