//! Brute-force numerical counterparts of every closed form: quadrature,
//! grid searches, bisection, the lower Lambert W branch, best-response
//! search and Monte Carlo sampling of period-1 decisions.

pub mod best_response;
pub mod curves;
pub mod lambert;
pub mod monte_carlo;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use best_response::{
    allocation_probability, best_response_search, clearing_price, default_bid_grid, opponent_profiles,
    BestResponseReport, ProfileReport, SearchMechanism, GAIN_TOLERANCE,
};
pub use curves::{
    grid_first_best, grid_sup, grid_sup_by, numeric_zero_crossing, quad_expected_utility, quad_subjective_utility,
    quad_welfare, search_bound, GridSup,
};
pub use lambert::lambert_w_minus1;
pub use monte_carlo::{mc_outcome_check, McReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub grid_points: usize,
    /// Multiplier on the model-specific bracketing bound.
    pub z_max_factor: f64,
    pub quad_abs_tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_points: 20001, z_max_factor: 4.0, quad_abs_tol: 1e-9, mc_samples: 1_000_000, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: &str| Err(Error::Config { field: field.into(), message: message.into() });
        if self.grid_points < 3 {
            return fail("grid_points", "need at least 3 points");
        }
        if !(self.z_max_factor > 0.0) {
            return fail("z_max_factor", "must be positive");
        }
        if !(self.quad_abs_tol > 0.0) {
            return fail("quad_abs_tol", "must be positive");
        }
        Ok(())
    }
}
