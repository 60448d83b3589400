//! Branching Brownian motion with selection: Airy edge asymptotics, the
//! traveling-wave ODE, a Monte Carlo engine, population observables and an
//! experiment harness.

// `!(a < b)` is the idiom used throughout to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod error;
pub mod harness;
pub mod observables;
pub mod quad;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
pub use harness::{ComparisonReport, ExitStatus, ExperimentConfig};
pub use observables::{IntervalQuery, ObservableRow, WeightedSample};
pub use sim::{PopulationState, RateFamily, SimConfig};
pub use theory::{EdgeSet, ModelParams};
