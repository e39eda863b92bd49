use serde::Serialize;

use crate::model::{GameSpec, InfoState};
use crate::solver::{BruteForceOptions, GameTree, SolverError, ValueSolution};

/// Allowed gap between the solver and the game-tree search on stochastic
/// games, where floating-point sums are taken in different orders.
pub const STOCHASTIC_ORACLE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub z: InfoState,
    pub value: f64,
    pub oracle: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub horizon: usize,
    pub deterministic: bool,
    pub tolerance: f64,
    pub max_discrepancy: f64,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_discrepancy <= self.tolerance
    }
}

/// Compares every state's value with an exhaustive game-tree search of the
/// given horizon. Exact agreement is expected on deterministic games once the
/// horizon reaches the solver's iteration count.
pub fn compare_oracle(
    spec: &GameSpec,
    sol: &ValueSolution,
    horizon: usize,
    options: BruteForceOptions,
) -> Result<OracleReport, SolverError> {
    let deterministic = spec.is_deterministic();
    let mut rows = Vec::with_capacity(spec.num_states);
    let mut max_discrepancy: f64 = 0.0;
    let mut tree = GameTree::new(spec, options);
    for z in spec.states() {
        let oracle = tree.value(z, horizon)?;
        let value = sol.value(z);
        let discrepancy = (oracle - value).abs();
        max_discrepancy = max_discrepancy.max(discrepancy);
        rows.push(OracleRow { z, value, oracle, discrepancy });
    }
    Ok(OracleReport {
        horizon,
        deterministic,
        tolerance: if deterministic { 0.0 } else { STOCHASTIC_ORACLE_TOLERANCE },
        max_discrepancy,
        rows,
    })
}
