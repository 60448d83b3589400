//! Discrete-time Monte Carlo engine for the branching diffusion.

mod engine;
mod init;
pub mod moment;
mod rates;
pub mod rng;

pub use engine::{
    run_replicate, step, EventCounts, InitialMeta, Particle, PopulationState, SimConfig, Snapshot, Status,
    DEFAULT_MAX_PARTICLES, MAX_EVENT_PROBABILITY,
};
pub use init::{initial_airy, initial_single, z_reference};
pub use rates::{working_window, RateFamily};
