//! Python bindings for penalty-lab.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lab as core;
use core::cli::config::parse_config;
use core::mechanisms::{
    run_fcfs_with_order, run_gcsp_with_order, run_mplus1_auction_with_order, run_two_bid_with_order,
    MechanismOutcome,
};
use core::simulation::run_experiment_with_threads;
use core::{AgentType, Belief, Economy, Objective};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn belief(believed: bool) -> Belief {
    if believed {
        Belief::Believed
    } else {
        Belief::True
    }
}

fn objective(name: &str) -> PyResult<Objective> {
    match name {
        "welfare" => Ok(Objective::Welfare),
        "utilization" => Ok(Objective::Utilization),
        other => Err(PyValueError::new_err(format!("unknown objective {other:?}"))),
    }
}

/// One agent: a period-1 value model, future value w and bias factors.
#[pyclass(name = "AgentType", frozen)]
struct PyAgentType {
    inner: AgentType,
}

#[pymethods]
impl PyAgentType {
    #[staticmethod]
    fn cipi(cost: f64, show_prob: f64, w: f64, beta: f64, betahat: f64) -> PyResult<Self> {
        AgentType::cipi(cost, show_prob, w, beta, betahat).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn exponential(rate: f64, w: f64, beta: f64, betahat: f64) -> PyResult<Self> {
        AgentType::exponential(rate, w, beta, betahat).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn uniform(width: f64, w: f64, beta: f64, betahat: f64) -> PyResult<Self> {
        AgentType::uniform(width, w, beta, betahat).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn future_value(&self) -> f64 {
        self.inner.future_value()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn betahat(&self) -> f64 {
        self.inner.betahat()
    }

    #[pyo3(signature = (z, believed = false))]
    fn show_prob(&self, z: f64, believed: bool) -> f64 {
        self.inner.show_prob(z, belief(believed))
    }

    fn expected_utility(&self, z: f64) -> PyResult<f64> {
        self.inner.expected_utility(z).map_err(err)
    }

    fn subjective_utility(&self, z: f64) -> PyResult<f64> {
        self.inner.subjective_utility(z).map_err(err)
    }

    fn sup_utility(&self, z_min: f64) -> PyResult<f64> {
        self.inner.sup_utility(z_min).map_err(err)
    }

    fn welfare_at_penalty(&self, z: f64) -> PyResult<f64> {
        self.inner.welfare_at_penalty(z).map_err(err)
    }

    fn max_acceptable_penalty(&self) -> f64 {
        self.inner.max_acceptable_penalty()
    }

    fn preferred_penalty(&self, z_min: f64) -> PyResult<f64> {
        self.inner.preferred_penalty(z_min).map_err(err)
    }

    fn sp_bid(&self) -> f64 {
        self.inner.sp_bid()
    }

    /// Returns (value, penalty or None) of the single-agent first best.
    #[pyo3(signature = (objective_name, allow_transfers = false))]
    fn first_best(&self, objective_name: &str, allow_transfers: bool) -> PyResult<(f64, Option<f64>)> {
        let fb = core::first_best_agent(&self.inner, objective(objective_name)?, allow_transfers).map_err(err)?;
        Ok((fb.value, fb.penalty))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn economy(agents: Vec<PyRef<'_, PyAgentType>>, m: usize) -> PyResult<Economy> {
    Economy::new(agents.iter().map(|a| a.inner).collect(), m).map_err(err)
}

fn order(n: usize, order: Option<Vec<usize>>) -> Vec<usize> {
    order.unwrap_or_else(|| (0..n).collect())
}

fn outcome_dict<'py>(py: Python<'py>, e: Option<&Economy>, o: &MechanismOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mechanism", o.mechanism.label())?;
    d.set_item("allocated", &o.allocated)?;
    d.set_item("base_payments", o.payments.iter().map(|p| p.base).collect::<Vec<_>>())?;
    d.set_item("penalties", o.payments.iter().map(|p| p.penalty).collect::<Vec<_>>())?;
    d.set_item("first_bids", &o.first_bids)?;
    d.set_item("second_bids", &o.second_bids)?;
    d.set_item("min_penalty", o.min_penalty)?;
    if let Some(e) = e {
        let m = core::evaluate(e, o).map_err(err)?;
        d.set_item("welfare", m.welfare)?;
        d.set_item("utilization", m.utilization)?;
        d.set_item("revenue", m.revenue)?;
    }
    Ok(d)
}

/// Two-bid penalty bidding. `tie_order` breaks ties (earlier wins).
#[pyfunction]
#[pyo3(signature = (agents, m, tie_order = None))]
fn two_bid<'py>(
    py: Python<'py>,
    agents: Vec<PyRef<'py, PyAgentType>>,
    m: usize,
    tie_order: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let e = economy(agents, m)?;
    let o = run_two_bid_with_order(&e, &order(e.len(), tie_order));
    outcome_dict(py, Some(&e), &o)
}

#[pyfunction]
#[pyo3(signature = (agents, m, tie_order = None))]
fn mplus1_auction<'py>(
    py: Python<'py>,
    agents: Vec<PyRef<'py, PyAgentType>>,
    m: usize,
    tie_order: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let e = economy(agents, m)?;
    let o = run_mplus1_auction_with_order(&e, &order(e.len(), tie_order));
    outcome_dict(py, Some(&e), &o)
}

#[pyfunction]
#[pyo3(signature = (agents, m, penalty, arrival = None))]
fn fcfs<'py>(
    py: Python<'py>,
    agents: Vec<PyRef<'py, PyAgentType>>,
    m: usize,
    penalty: f64,
    arrival: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let e = economy(agents, m)?;
    let o = run_fcfs_with_order(&e, penalty, &order(e.len(), arrival));
    outcome_dict(py, Some(&e), &o)
}

/// Generalized critical second price on raw bids.
#[pyfunction]
#[pyo3(signature = (bids, m, tie_order = None))]
fn gcsp<'py>(py: Python<'py>, bids: Vec<f64>, m: usize, tie_order: Option<Vec<usize>>) -> PyResult<Bound<'py, PyDict>> {
    let o = run_gcsp_with_order(&bids, m, &order(bids.len(), tie_order));
    outcome_dict(py, None, &o)
}

/// Economy-wide first best: (value, welfare, utilization).
#[pyfunction]
#[pyo3(signature = (agents, m, objective_name, allow_transfers = false))]
fn first_best(
    agents: Vec<PyRef<'_, PyAgentType>>,
    m: usize,
    objective_name: &str,
    allow_transfers: bool,
) -> PyResult<(f64, f64, f64)> {
    use rand::SeedableRng;
    let e = economy(agents, m)?;
    // ties only affect which agent is picked, not the totals
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let fb = core::first_best(&e, objective(objective_name)?, allow_transfers, &mut rng).map_err(err)?;
    Ok((fb.value, fb.welfare, fb.utilization))
}

#[pyfunction]
fn lambert_w_minus1(x: f64) -> PyResult<f64> {
    core::lambert_w_minus1(x).map_err(err)
}

/// Runs a sweep from config text (same format as the CLI) and returns one
/// dict per result row.
#[pyfunction]
#[pyo3(signature = (config, threads = None))]
fn run_experiment<'py>(py: Python<'py>, config: &str, threads: Option<usize>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = parse_config(config).map_err(err)?;
    let rows = py.detach(|| run_experiment_with_threads(&cfg, threads)).map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("n", r.n)?;
            d.set_item("mechanism", &r.mechanism)?;
            d.set_item("penalty", r.penalty)?;
            d.set_item("welfare_mean", r.welfare_mean)?;
            d.set_item("welfare_se", r.welfare_se)?;
            d.set_item("utilization_mean", r.utilization_mean)?;
            d.set_item("utilization_se", r.utilization_se)?;
            d.set_item("revenue_mean", r.revenue_mean)?;
            d.set_item("revenue_se", r.revenue_se)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "penalty_lab")]
fn penalty_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAgentType>()?;
    m.add_function(wrap_pyfunction!(two_bid, m)?)?;
    m.add_function(wrap_pyfunction!(mplus1_auction, m)?)?;
    m.add_function(wrap_pyfunction!(fcfs, m)?)?;
    m.add_function(wrap_pyfunction!(gcsp, m)?)?;
    m.add_function(wrap_pyfunction!(first_best, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w_minus1, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
