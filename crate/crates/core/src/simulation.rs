//! Random economies and seeded experiment sweeps.
//!
//! Replicate `r` at sweep point `k` draws everything from its own ChaCha
//! stream keyed by `(seed, k, r)`, and all mechanisms of a replicate run on
//! the same economy. Replicates are processed in fixed-size chunks that are
//! reduced in chunk order, so results do not depend on the worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent_types::{AgentType, Economy, ValueModel};
use crate::error::{Error, Result};
use crate::mechanisms::{run_fcfs, run_mplus1_auction, run_two_bid};
use crate::metrics::{evaluate, first_best, AgentMetrics, Objective, OutcomeMetrics};

/// Env var capping the number of worker threads.
pub const THREADS_ENV: &str = "PENALTY_LAB_THREADS";

const CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    CiPi,
    Exponential,
    Uniform,
}

impl ModelFamily {
    /// Scale `L` used in the reference experiments.
    pub fn default_scale(self) -> f64 {
        match self {
            ModelFamily::CiPi => 10.0,
            ModelFamily::Exponential | ModelFamily::Uniform => 20.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cipi" => Some(ModelFamily::CiPi),
            "exponential" => Some(ModelFamily::Exponential),
            "uniform" => Some(ModelFamily::Uniform),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasRegime {
    /// `beta = betahat = 1`.
    Rational,
    /// `beta ~ U[0,1]`, `betahat = 1`.
    Naive,
    /// `beta ~ U[0,1]`, `betahat = beta`.
    Sophisticated,
    /// `beta ~ U[0,1]`, `betahat ~ U[beta, 1]`.
    PartiallyNaive,
    /// `beta_i = i/n`; `betahat_i = 1` if naive, else `beta_i`.
    FixedBetaArray { naive: bool },
    /// `beta_i = 0.5`, `betahat_i = 1 - 0.5 i/n`.
    FixedNaiveteArray,
}

impl BiasRegime {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "rational" => BiasRegime::Rational,
            "naive" => BiasRegime::Naive,
            "sophisticated" => BiasRegime::Sophisticated,
            "partially_naive" => BiasRegime::PartiallyNaive,
            "fixed_beta_array" | "fixed_beta_array_sophisticated" => BiasRegime::FixedBetaArray { naive: false },
            "fixed_beta_array_naive" => BiasRegime::FixedBetaArray { naive: true },
            "fixed_naivete_array" => BiasRegime::FixedNaiveteArray,
            _ => return None,
        })
    }

    /// `(beta, betahat)` of agent `index` (1-based) among `n`.
    fn draw<R: Rng + ?Sized>(self, index: usize, n: usize, rng: &mut R) -> (f64, f64) {
        let frac = index as f64 / n as f64;
        match self {
            BiasRegime::Rational => (1.0, 1.0),
            BiasRegime::Naive => (rng.random::<f64>(), 1.0),
            BiasRegime::Sophisticated => {
                let b = rng.random::<f64>();
                (b, b)
            }
            BiasRegime::PartiallyNaive => {
                let b = rng.random::<f64>();
                (b, b + (1.0 - b) * rng.random::<f64>())
            }
            BiasRegime::FixedBetaArray { naive } => (frac, if naive { 1.0 } else { frac }),
            BiasRegime::FixedNaiveteArray => (0.5, 1.0 - 0.5 * frac),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub family: ModelFamily,
    /// Scale `L` of the type distributions.
    pub scale: f64,
    pub regime: BiasRegime,
}

impl PopulationSpec {
    pub fn new(family: ModelFamily, regime: BiasRegime) -> Self {
        PopulationSpec { family, scale: family.default_scale(), regime }
    }

    fn draw_model<R: Rng + ?Sized>(&self, rng: &mut R) -> (ValueModel, f64) {
        let l = self.scale;
        match self.family {
            ModelFamily::CiPi => {
                let w = l * rng.random::<f64>();
                let cost = w * rng.random::<f64>();
                (ValueModel::CiPi { cost, show_prob: rng.random::<f64>() }, w)
            }
            ModelFamily::Exponential => {
                let mean = l * rng.random::<f64>();
                let w = mean * rng.random::<f64>();
                (ValueModel::Exponential { rate: 1.0 / mean }, w)
            }
            ModelFamily::Uniform => {
                let width = l * rng.random::<f64>();
                let w = 0.5 * width * rng.random::<f64>();
                (ValueModel::Uniform { width }, w)
            }
        }
    }
}

/// Draws `n` agent types; degenerate draws are redrawn.
pub fn sample_economy<R: Rng + ?Sized>(spec: &PopulationSpec, n: usize, m: usize, rng: &mut R) -> Result<Economy> {
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(Error::Config { field: "L".into(), message: format!("must be positive, got {}", spec.scale) });
    }
    let agents = (1..=n)
        .map(|i| loop {
            let (model, w) = spec.draw_model(rng);
            let (beta, betahat) = spec.regime.draw(i, n, rng);
            if let Ok(a) = AgentType::new(model, w, beta, betahat) {
                break a;
            }
        })
        .collect();
    Economy::new(agents, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MechanismSpec {
    TwoBid,
    MPlus1,
    Fcfs(f64),
    FirstBestWelfare,
    FirstBestUtilization,
}

impl MechanismSpec {
    pub fn label(self) -> &'static str {
        match self {
            MechanismSpec::TwoBid => "2BPB",
            MechanismSpec::MPlus1 => "MPlus1",
            MechanismSpec::Fcfs(_) => "FCFS",
            MechanismSpec::FirstBestWelfare => "FB-welfare",
            MechanismSpec::FirstBestUtilization => "FB-utilization",
        }
    }

    pub fn penalty(self) -> Option<f64> {
        match self {
            MechanismSpec::Fcfs(z) => Some(z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub population: PopulationSpec,
    pub resources: usize,
    pub n_values: Vec<usize>,
    pub mechanisms: Vec<MechanismSpec>,
    pub replicates: u64,
    pub seed: u64,
    pub per_agent_stats: bool,
    pub fb_cipi_allow_transfers: bool,
}

impl ExperimentConfig {
    /// The reference sweep: five resources, 2 to 30 agents, every mechanism
    /// with FCFS at penalties 5, 2.5 and 0.
    pub fn reference(population: PopulationSpec, replicates: u64, seed: u64) -> Self {
        ExperimentConfig {
            population,
            resources: 5,
            n_values: (2..=30).collect(),
            mechanisms: vec![
                MechanismSpec::TwoBid,
                MechanismSpec::MPlus1,
                MechanismSpec::Fcfs(5.0),
                MechanismSpec::Fcfs(2.5),
                MechanismSpec::Fcfs(0.0),
                MechanismSpec::FirstBestWelfare,
                MechanismSpec::FirstBestUtilization,
            ],
            replicates,
            seed,
            per_agent_stats: false,
            fb_cipi_allow_transfers: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: String| Err(Error::Config { field: field.into(), message });
        if !(self.population.scale > 0.0 && self.population.scale.is_finite()) {
            return fail("L", format!("must be positive, got {}", self.population.scale));
        }
        if self.resources == 0 {
            return fail("m", "must be at least 1".into());
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return fail("n_values", "need a non-empty list of positive agent counts".into());
        }
        if self.mechanisms.is_empty() {
            return fail("mechanisms", "need at least one mechanism".into());
        }
        for m in &self.mechanisms {
            if let MechanismSpec::Fcfs(z) = m {
                if !(*z >= 0.0 && z.is_finite()) {
                    return fail("fcfs_penalties", format!("penalties must be >= 0, got {z}"));
                }
            }
        }
        if self.replicates == 0 || self.replicates > u32::MAX as u64 {
            return fail("replicates", format!("must lie in [1, {}], got {}", u32::MAX, self.replicates));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStat {
    /// 1-based agent index.
    pub agent_index: usize,
    pub beta: f64,
    pub betahat: f64,
    pub welfare_mean: f64,
    pub usage_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub mechanism: String,
    pub penalty: Option<f64>,
    pub welfare_mean: f64,
    pub welfare_se: f64,
    pub utilization_mean: f64,
    pub utilization_se: f64,
    pub revenue_mean: f64,
    pub revenue_se: f64,
    pub per_agent: Option<Vec<AgentStat>>,
}

/// Everything one replicate produced.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub economy: Economy,
    pub outcomes: Vec<(MechanismSpec, OutcomeMetrics)>,
}

fn replicate_rng(seed: u64, k: usize, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | r);
    rng
}

/// Replicate `r` at sweep point `k` (agent count `cfg.n_values[k]`).
pub fn run_replicate(cfg: &ExperimentConfig, k: usize, r: u64) -> Result<Replicate> {
    let mut rng = replicate_rng(cfg.seed, k, r);
    let economy = sample_economy(&cfg.population, cfg.n_values[k], cfg.resources, &mut rng)?;
    let mut outcomes = Vec::with_capacity(cfg.mechanisms.len());
    for &spec in &cfg.mechanisms {
        let metrics = match spec {
            MechanismSpec::TwoBid => evaluate(&economy, &run_two_bid(&economy, &mut rng))?,
            MechanismSpec::MPlus1 => evaluate(&economy, &run_mplus1_auction(&economy, &mut rng))?,
            MechanismSpec::Fcfs(z) => evaluate(&economy, &run_fcfs(&economy, z, &mut rng))?,
            MechanismSpec::FirstBestWelfare | MechanismSpec::FirstBestUtilization => {
                let objective = if spec == MechanismSpec::FirstBestWelfare {
                    Objective::Welfare
                } else {
                    Objective::Utilization
                };
                let fb = first_best(&economy, objective, cfg.fb_cipi_allow_transfers, &mut rng)?;
                let per_agent = fb
                    .per_agent
                    .iter()
                    .map(|p| AgentMetrics {
                        allocated: p.selected,
                        usage: if p.selected { p.usage } else { 0.0 },
                        welfare: if p.selected { p.welfare } else { 0.0 },
                        ..AgentMetrics::default()
                    })
                    .collect();
                OutcomeMetrics { utilization: fb.utilization, welfare: fb.welfare, revenue: 0.0, per_agent }
            }
        };
        outcomes.push((spec, metrics));
    }
    Ok(Replicate { economy, outcomes })
}

/// Running mean and squared deviations (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn se(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone)]
struct MechAccum {
    welfare: Moments,
    utilization: Moments,
    revenue: Moments,
    agent_welfare: Vec<f64>,
    agent_usage: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Accum {
    count: u64,
    beta: Vec<f64>,
    betahat: Vec<f64>,
    mechs: Vec<MechAccum>,
}

impl Accum {
    fn new(n: usize, mechanisms: usize, per_agent: bool) -> Self {
        let slots = if per_agent { n } else { 0 };
        let mech = MechAccum {
            welfare: Moments::default(),
            utilization: Moments::default(),
            revenue: Moments::default(),
            agent_welfare: vec![0.0; slots],
            agent_usage: vec![0.0; slots],
        };
        Accum { count: 0, beta: vec![0.0; slots], betahat: vec![0.0; slots], mechs: vec![mech; mechanisms] }
    }

    fn add(&mut self, rep: &Replicate) {
        self.count += 1;
        for i in 0..self.beta.len() {
            self.beta[i] += rep.economy.agent(i).beta();
            self.betahat[i] += rep.economy.agent(i).betahat();
        }
        for (acc, (_, m)) in self.mechs.iter_mut().zip(&rep.outcomes) {
            acc.welfare.push(m.welfare);
            acc.utilization.push(m.utilization);
            acc.revenue.push(m.revenue);
            for i in 0..acc.agent_welfare.len() {
                acc.agent_welfare[i] += m.per_agent[i].welfare;
                acc.agent_usage[i] += m.per_agent[i].usage;
            }
        }
    }

    fn merge(&mut self, o: &Accum) {
        self.count += o.count;
        add_into(&mut self.beta, &o.beta);
        add_into(&mut self.betahat, &o.betahat);
        for (a, b) in self.mechs.iter_mut().zip(&o.mechs) {
            a.welfare.merge(&b.welfare);
            a.utilization.merge(&b.utilization);
            a.revenue.merge(&b.revenue);
            add_into(&mut a.agent_welfare, &b.agent_welfare);
            add_into(&mut a.agent_usage, &b.agent_usage);
        }
    }

    fn rows(&self, n: usize, cfg: &ExperimentConfig) -> Vec<ResultRow> {
        let c = self.count as f64;
        cfg.mechanisms
            .iter()
            .zip(&self.mechs)
            .map(|(spec, acc)| ResultRow {
                n,
                mechanism: spec.label().to_string(),
                penalty: spec.penalty(),
                welfare_mean: acc.welfare.mean,
                welfare_se: acc.welfare.se(),
                utilization_mean: acc.utilization.mean,
                utilization_se: acc.utilization.se(),
                revenue_mean: acc.revenue.mean,
                revenue_se: acc.revenue.se(),
                per_agent: cfg.per_agent_stats.then(|| {
                    (0..n)
                        .map(|i| AgentStat {
                            agent_index: i + 1,
                            beta: self.beta[i] / c,
                            betahat: self.betahat[i] / c,
                            welfare_mean: acc.agent_welfare[i] / c,
                            usage_mean: acc.agent_usage[i] / c,
                        })
                        .collect()
                }),
            })
            .collect()
    }
}

fn add_into(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Worker count from the environment, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Config { field: THREADS_ENV.into(), message: format!("expected a positive integer, got {v:?}") }),
        },
    }
}

/// Runs the sweep with the worker count capped by `PENALTY_LAB_THREADS`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with_threads(cfg, threads_from_env()?)
}

pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config { field: THREADS_ENV.into(), message: e.to_string() })?;
    pool.install(|| {
        let mut rows = Vec::new();
        for (k, &n) in cfg.n_values.iter().enumerate() {
            let starts: Vec<u64> = (0..cfg.replicates).step_by(CHUNK as usize).collect();
            let partials: Vec<Result<Accum>> = starts
                .par_iter()
                .map(|&lo| {
                    let mut acc = Accum::new(n, cfg.mechanisms.len(), cfg.per_agent_stats);
                    for r in lo..(lo + CHUNK).min(cfg.replicates) {
                        acc.add(&run_replicate(cfg, k, r)?);
                    }
                    Ok(acc)
                })
                .collect();
            let mut total = Accum::new(n, cfg.mechanisms.len(), cfg.per_agent_stats);
            for p in partials {
                total.merge(&p?);
            }
            rows.extend(total.rows(n, cfg));
        }
        Ok(rows)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquitySummary {
    pub n: usize,
    pub mechanism: String,
    pub penalty: Option<f64>,
    /// Largest minus smallest per-index mean welfare.
    pub spread: f64,
    pub by_index: Vec<AgentStat>,
}

/// Per-index welfare spread of every row carrying per-agent statistics.
pub fn equity_summary(rows: &[ResultRow]) -> Vec<EquitySummary> {
    rows.iter()
        .filter_map(|row| {
            let by_index = row.per_agent.clone()?;
            let (lo, hi) = by_index
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.welfare_mean), hi.max(s.welfare_mean)));
            let spread = if by_index.is_empty() { 0.0 } else { hi - lo };
            Some(EquitySummary { n: row.n, mechanism: row.mechanism.clone(), penalty: row.penalty, spread, by_index })
        })
        .collect()
}
