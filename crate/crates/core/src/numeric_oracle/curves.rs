//! Brute-force counterparts of the closed-form penalty curves.

use crate::agent_types::{AgentType, ValueModel};
use crate::error::{Error, Result};
use crate::metrics::Objective;

use super::quadrature::integrate;
use super::OracleConfig;

// Exponential tails beyond this many means carry mass e^-50.
const EXP_TAIL_MEANS: f64 = 50.0;

/// `E[g(V1)]` with `g_never` standing in for the CiPi no-show atom.
fn expectation<G: Fn(f64) -> f64>(a: &AgentType, g: G, g_never: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    match a.model() {
        ValueModel::CiPi { cost, show_prob } => Ok(show_prob * g(-cost) + (1.0 - show_prob) * g_never),
        ValueModel::Exponential { rate } => {
            // integrate over the opportunity cost x = -v
            let upper = breaks.iter().fold(0.0f64, |m, &b| m.max(-b)) + EXP_TAIL_MEANS / rate;
            let xb: Vec<f64> = breaks.iter().map(|b| -b).collect();
            integrate(|x| g(-x) * rate * (-rate * x).exp(), 0.0, upper, &xb, tol).map(|e| e.value)
        }
        ValueModel::Uniform { width } => integrate(|v| g(v) / width, -width, 0.0, breaks, tol).map(|e| e.value),
    }
}

/// Utility curve via the max-form rewriting
/// `E[max(V1 + b w, -z)] + (1 - b) w P[V1 + b w >= -z]`.
pub(crate) fn quad_utility_with(a: &AgentType, z: f64, b: f64, cfg: &OracleConfig) -> Result<f64> {
    let w = a.future_value();
    let threshold = -z - b * w;
    let tol = 0.5 * cfg.quad_abs_tol;
    let max_part = expectation(a, |v| (v + b * w).max(-z), -z, &[threshold], tol)?;
    let show = expectation(a, |v| if v >= threshold { 1.0 } else { 0.0 }, 0.0, &[threshold], tol)?;
    Ok(max_part + (1.0 - b) * w * show)
}

pub fn quad_subjective_utility(a: &AgentType, z: f64, cfg: &OracleConfig) -> Result<f64> {
    crate::agent_types::check_penalty(z)?;
    quad_utility_with(a, z, a.betahat(), cfg)
}

pub fn quad_expected_utility(a: &AgentType, z: f64, cfg: &OracleConfig) -> Result<f64> {
    crate::agent_types::check_penalty(z)?;
    quad_utility_with(a, z, a.beta(), cfg)
}

/// `E[(V1 + w) 1{V1 >= -z - beta w}]` by quadrature.
pub fn quad_welfare(a: &AgentType, z: f64, cfg: &OracleConfig) -> Result<f64> {
    crate::agent_types::check_penalty(z)?;
    let w = a.future_value();
    let threshold = -z - a.beta() * w;
    expectation(a, |v| if v >= threshold { v + w } else { 0.0 }, 0.0, &[threshold], cfg.quad_abs_tol)
}

/// Upper end of the penalty range the grid searches cover; beyond it the
/// subjective utility is known to stay negative or flat.
pub fn search_bound(a: &AgentType) -> f64 {
    let w = a.future_value();
    match a.model() {
        ValueModel::CiPi { cost, show_prob } => 2.0 * (w - cost) * show_prob / (1.0 - show_prob) + cost + 1.0,
        ValueModel::Exponential { rate } => {
            let z0 = a.max_acceptable_penalty();
            if z0.is_finite() {
                2.0 * z0 + 1.0
            } else {
                EXP_TAIL_MEANS / rate
            }
        }
        ValueModel::Uniform { width } => width + 1.0,
    }
}

/// Points where `uhat` jumps; grids always contain them exactly.
fn discontinuities(a: &AgentType) -> Vec<f64> {
    match a.model() {
        ValueModel::CiPi { cost, .. } => vec![cost - a.betahat() * a.future_value()],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSup {
    pub value: f64,
    pub argmax: f64,
}

/// Supremum of `curve` over `[lo, hi]` from a uniform grid plus `probes`,
/// refined by golden-section search around the best interior grid point.
/// Returns the smallest point attaining the supremum (up to 1e-12 relative).
pub fn grid_sup_by<F: Fn(f64) -> f64>(curve: F, lo: f64, hi: f64, probes: &[f64], grid_points: usize) -> GridSup {
    let n = grid_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut pts: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
    pts[n - 1] = hi;
    pts.extend(probes.iter().copied().filter(|&p| p >= lo && p <= hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&z| curve(z)).collect();
    let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
    for (k, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut candidates: Vec<(f64, f64)> = pts.iter().copied().zip(vals.iter().copied()).collect();
    if best_k > 0 && best_k + 1 < pts.len() {
        let (mut a, mut b) = (pts[best_k - 1], pts[best_k + 1]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if curve(c) >= curve(d) {
                b = d;
            } else {
                a = c;
            }
            if b - a <= 1e-14 * (1.0 + a.abs()) {
                break;
            }
        }
        let z = 0.5 * (a + b);
        candidates.push((z, curve(z)));
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + best.abs());
    let argmax = candidates
        .iter()
        .filter(|c| c.1 >= best - tol)
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min);
    GridSup { value: best, argmax }
}

/// `sup_{z >= z_min} uhat(z)` by grid search over the closed-form `uhat`,
/// including the jump point exactly.
pub fn grid_sup(a: &AgentType, z_min: f64, cfg: &OracleConfig) -> Result<GridSup> {
    crate::agent_types::check_penalty(z_min)?;
    let hi = z_min + cfg.z_max_factor * search_bound(a);
    Ok(grid_sup_by(|z| a.uhat(z), z_min, hi, &discontinuities(a), cfg.grid_points))
}

/// Zero-crossing of the sup-utility curve by grid bracketing and bisection.
pub fn numeric_zero_crossing(a: &AgentType, cfg: &OracleConfig) -> Result<f64> {
    let bound = cfg.z_max_factor * search_bound(a);
    let n = cfg.grid_points.max(3);
    let step = bound / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|k| step * k as f64).collect();
    let jumps = discontinuities(a);

    // sup over [grid[k], bound]: suffix maxima plus jump points in each cell
    let mut suffix = vec![f64::NEG_INFINITY; n];
    let mut running = f64::NEG_INFINITY;
    for k in (0..n).rev() {
        running = running.max(a.uhat(grid[k]));
        if k + 1 < n {
            for &j in &jumps {
                if j > grid[k] && j < grid[k + 1] {
                    running = running.max(a.uhat(j));
                }
            }
        }
        suffix[k] = running;
    }
    if suffix[n - 1] >= 0.0 {
        return Err(Error::NoSignChange { bound });
    }
    let k = match (0..n).rev().find(|&k| suffix[k] >= 0.0) {
        Some(k) => k,
        None => return Err(Error::NoSignChange { bound }),
    };
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    let cell_hi = hi;
    let tail = suffix[k + 1];
    let sup_from = |z: f64| {
        let mut s = tail.max(a.uhat(z));
        for i in 1..16 {
            let p = z + (cell_hi - z) * i as f64 / 16.0;
            s = s.max(a.uhat(p));
        }
        for &j in &jumps {
            if j >= z && j <= cell_hi {
                s = s.max(a.uhat(j));
            }
        }
        s
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * (1.0 + hi) {
            break;
        }
        if sup_from(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Per-agent first-best value by grid maximization: welfare over all
/// penalties, or show probability subject to non-negative welfare.
pub fn grid_first_best(a: &AgentType, objective: Objective, cfg: &OracleConfig) -> f64 {
    let w = a.future_value();
    let hi = match a.model() {
        ValueModel::CiPi { cost, .. } => cost + w + 1.0,
        ValueModel::Exponential { rate } => EXP_TAIL_MEANS / rate,
        ValueModel::Uniform { width } => width + 1.0,
    };
    let mut probes = Vec::new();
    if let Some(j) = a.jump_point(crate::agent_types::Belief::True) {
        probes.push(j.max(0.0));
    }
    match objective {
        Objective::Welfare => grid_sup_by(|z| a.welfare(z), 0.0, hi, &probes, cfg.grid_points).value,
        Objective::Utilization => {
            let feasible = |z: f64| a.welfare(z) >= 0.0;
            let usage = |z: f64| a.show_prob(z, crate::agent_types::Belief::True);
            let n = cfg.grid_points.max(3);
            let step = hi / (n - 1) as f64;
            let mut pts: Vec<f64> = (0..n).map(|k| step * k as f64).collect();
            pts.extend(probes);
            pts.sort_by(f64::total_cmp);
            let mut best = 0.0f64;
            let mut edge: Option<(f64, f64)> = None;
            for win in pts.windows(2) {
                let (z0, z1) = (win[0], win[1]);
                if feasible(z0) {
                    best = best.max(usage(z0));
                    if !feasible(z1) {
                        edge = Some((z0, z1));
                    }
                }
            }
            if let Some(&z) = pts.last() {
                if feasible(z) {
                    best = best.max(usage(z));
                }
            }
            // sharpen the feasibility boundary where usage is still rising
            if let Some((mut lo, mut hi)) = edge {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.max(usage(lo));
            }
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    fn ex4_agent1() -> AgentType {
        AgentType::cipi(10.0, 0.8, 16.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn quadrature_matches_example_4_curves() {
        let agents = [ex4_agent1(), AgentType::cipi(6.0, 0.5, 10.0, 0.8, 0.8).unwrap()];
        for a in &agents {
            for z in [0.0, 2.0, 4.0, 24.0] {
                let q = quad_subjective_utility(a, z, &cfg()).unwrap();
                assert!((q - a.subjective_utility(z).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn cipi_quadrature_is_exact_above_jump() {
        let a = ex4_agent1();
        let z = 5.0;
        let q = quad_subjective_utility(&a, z, &cfg()).unwrap();
        assert!((q - ((16.0 - 10.0) * 0.8 - z * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn large_penalty_limit_below_expected_value() {
        for a in [
            AgentType::exponential(0.2, 2.5, 0.3, 0.6).unwrap(),
            AgentType::uniform(10.0, 4.0, 0.3, 0.6).unwrap(),
        ] {
            let q = quad_subjective_utility(&a, 1e4, &cfg()).unwrap();
            assert!(q <= a.expected_value() + 1e-6, "{q} vs {}", a.expected_value());
        }
    }

    #[test]
    fn exponential_quadrature_matches_formula() {
        let a = AgentType::exponential(0.2, 2.5, 1.0, 1.0).unwrap();
        let q = quad_subjective_utility(&a, 1.0, &cfg()).unwrap();
        assert!((q - (2.5 - 5.0 + 5.0 * (-0.7f64).exp())).abs() < 1e-8);
        let q0 = quad_subjective_utility(&a, 0.0, &cfg()).unwrap();
        assert!((q0 - 0.532_653).abs() < 1e-6);
    }

    #[test]
    fn uniform_welfare_by_quadrature() {
        let a = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!((quad_welfare(&a, 1.0, &cfg()).unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn grid_sup_examples() {
        let s = grid_sup(&ex4_agent1(), 0.0, &cfg()).unwrap();
        assert!((s.value - 4.4).abs() < 1e-12);
        assert!((s.argmax - 2.0).abs() < 1e-12);
        let rational = AgentType::exponential(0.1, 3.0, 1.0, 1.0).unwrap();
        let s = grid_sup(&rational, 1.5, &cfg()).unwrap();
        assert_eq!(s.argmax, 1.5);
        let naive = AgentType::cipi(5.0, 0.8, 7.5, 0.2, 1.0).unwrap();
        assert_eq!(grid_sup(&naive, 3.0, &cfg()).unwrap().argmax, 3.0);
    }

    #[test]
    fn zero_crossing_examples() {
        let z = numeric_zero_crossing(&ex4_agent1(), &cfg()).unwrap();
        assert!((z - 24.0).abs() < 1e-6);
        let ex8_2 = AgentType::cipi(5.0, 0.6, 10.0, 1.0, 1.0).unwrap();
        assert!((numeric_zero_crossing(&ex8_2, &cfg()).unwrap() - 7.5).abs() < 1e-6);
        let u = AgentType::uniform(10.0, 4.0, 1.0, 1.0).unwrap();
        assert!((numeric_zero_crossing(&u, &cfg()).unwrap() - (6.0 - 20f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn grid_first_best_examples() {
        let e = AgentType::exponential(0.2, 2.5, 0.4, 0.7).unwrap();
        let fb = grid_first_best(&e, Objective::Welfare, &cfg());
        assert!((fb - (2.5 + 5.0 * ((-0.5f64).exp() - 1.0))).abs() < 1e-6);
        let u = AgentType::uniform(10.0, 4.0, 0.3, 0.3).unwrap();
        assert!((grid_first_best(&u, Objective::Welfare, &cfg()) - 0.8).abs() < 1e-6);
        assert!((grid_first_best(&u, Objective::Utilization, &cfg()) - 0.8).abs() < 1e-6);
    }
}
