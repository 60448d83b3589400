//! Fixtures shared by the benchmarks.

use bbm_core::sim::{self, PopulationState, SimConfig};
use bbm_core::theory::ModelParams;

/// Ladder parameters with a stationary population of about two thousand.
pub fn ladder_params() -> ModelParams {
    ModelParams::new(0.5, 0.01).expect("valid parameters")
}

/// An edge-profile start and a simulation config stepping it.
pub fn population_fixture() -> (SimConfig, PopulationState) {
    let p = ladder_params();
    let cfg = SimConfig::new(p, 0.02, 1.0).expect("valid config");
    let state = sim::initial_airy(&p, 1, 1_000_000).expect("initial state");
    (cfg, state)
}
