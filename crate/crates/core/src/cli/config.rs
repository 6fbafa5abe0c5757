//! Flat `key = value` experiment configs.
//!
//! ```text
//! # naive exponential sweep
//! model_family = exponential
//! bias_regime = naive
//! L = 20
//! m = 5
//! n_values = 2..30
//! mechanisms = 2BPB, MPlus1, FCFS, FB-welfare, FB-utilization
//! fcfs_penalties = 5, 2.5, 0
//! replicates = 10000
//! seed = 7
//! per_agent_stats = false
//! fb_cipi_allow_transfers = false
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::simulation::{BiasRegime, ExperimentConfig, MechanismSpec, ModelFamily, PopulationSpec};

pub const KEYS: [&str; 11] = [
    "model_family",
    "L",
    "bias_regime",
    "m",
    "n_values",
    "mechanisms",
    "fcfs_penalties",
    "replicates",
    "seed",
    "per_agent_stats",
    "fb_cipi_allow_transfers",
];

pub const DEFAULT_REPLICATES: u64 = 10_000;

fn err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

fn parse_num<T: std::str::FromStr>(field: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| err(field, format!("cannot parse {:?}", s.trim())))
}

fn parse_bool(field: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(err(field, format!("expected true or false, got {other:?}"))),
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Comma-separated counts and inclusive ranges `a..b`.
fn parse_counts(field: &str, s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in list(s) {
        if let Some((a, b)) = item.split_once("..") {
            let (a, b): (usize, usize) = (parse_num(field, a)?, parse_num(field, b.trim_start_matches('='))?);
            if a > b {
                return Err(err(field, format!("empty range {item}")));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_num(field, item)?);
        }
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut values: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err("config", format!("line {}: expected key = value", lineno + 1)));
        };
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(err(key, "unknown key"));
        };
        if values.insert(known, value.trim()).is_some() {
            return Err(err(key, "given twice"));
        }
    }
    let required = |k: &str| values.get(k).copied().ok_or_else(|| err(k, "missing"));

    let family_s = required("model_family")?;
    let family = ModelFamily::parse(family_s).ok_or_else(|| err("model_family", format!("unknown family {family_s:?}")))?;
    let regime_s = required("bias_regime")?;
    let regime = BiasRegime::parse(regime_s).ok_or_else(|| err("bias_regime", format!("unknown regime {regime_s:?}")))?;
    let mut population = PopulationSpec::new(family, regime);
    if let Some(l) = values.get("L") {
        population.scale = parse_num("L", l)?;
    }

    let penalties: Vec<f64> = match values.get("fcfs_penalties") {
        Some(s) => list(s).map(|x| parse_num("fcfs_penalties", x)).collect::<Result<_>>()?,
        None => vec![5.0, 2.5, 0.0],
    };
    let mechanisms = match values.get("mechanisms") {
        None => ExperimentConfig::reference(population, 1, 0)
            .mechanisms
            .into_iter()
            .filter(|m| !matches!(m, MechanismSpec::Fcfs(_)))
            .chain(penalties.iter().map(|&z| MechanismSpec::Fcfs(z)))
            .collect(),
        Some(s) => {
            let mut out = Vec::new();
            for name in list(s) {
                match name.to_ascii_lowercase().as_str() {
                    "2bpb" => out.push(MechanismSpec::TwoBid),
                    "mplus1" => out.push(MechanismSpec::MPlus1),
                    "fcfs" => out.extend(penalties.iter().map(|&z| MechanismSpec::Fcfs(z))),
                    "fb-welfare" => out.push(MechanismSpec::FirstBestWelfare),
                    "fb-utilization" => out.push(MechanismSpec::FirstBestUtilization),
                    _ => return Err(err("mechanisms", format!("unknown mechanism {name:?}"))),
                }
            }
            out
        }
    };

    let cfg = ExperimentConfig {
        population,
        resources: values.get("m").map(|s| parse_num("m", s)).transpose()?.unwrap_or(5),
        n_values: parse_counts("n_values", required("n_values")?)?,
        mechanisms,
        replicates: values.get("replicates").map(|s| parse_num("replicates", s)).transpose()?.unwrap_or(DEFAULT_REPLICATES),
        seed: values.get("seed").map(|s| parse_num("seed", s)).transpose()?.unwrap_or(0),
        per_agent_stats: values.get("per_agent_stats").map(|s| parse_bool("per_agent_stats", s)).transpose()?.unwrap_or(false),
        fb_cipi_allow_transfers: values
            .get("fb_cipi_allow_transfers")
            .map(|s| parse_bool("fb_cipi_allow_transfers", s))
            .transpose()?
            .unwrap_or(false),
    };
    cfg.validate()?;
    Ok(cfg)
}
