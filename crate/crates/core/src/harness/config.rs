//! Experiment configuration files.
//!
//! A configuration is a JSON object:
//!
//! ```json
//! {
//!   "name": "first_moment",
//!   "params": { "rho": 0.2, "beta": 0.01 },
//!   "sim": { "dt": 0.001, "t_end": 3.0, "snapshot_times": [3.0] },
//!   "rates": { "kind": "canonical" },
//!   "initial": { "kind": "single", "x": 0.0 },
//!   "replicates": 200000,
//!   "intervals": [[-1.0, 1.0], [null, null]],
//!   "comparisons": ["first_moment"],
//!   "output_dir": "out/first_moment",
//!   "base_seed": 20240601
//! }
//! ```
//!
//! Interval endpoints accept numbers, `null` for an infinite end, or the
//! strings `"inf"` and `"-inf"`. Relative `output_dir` values are resolved
//! against the working directory of the process.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::IntervalQuery;
use crate::sim::{RateFamily, SimConfig, DEFAULT_MAX_PARTICLES};
use crate::theory::ModelParams;

/// Theory-versus-simulation checks that `compare` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    FirstMoment,
    Figure1,
    RatioDn,
    ZetaKs,
    XiKs,
    Extremes,
}

/// Whether calibrated bands decide the exit status or are only reported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Monitor,
    Gate,
}

/// Closed band `[lo, hi]`; a missing end is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        !v.is_nan() && self.lo.map_or(true, |lo| v >= lo) && self.hi.map_or(true, |hi| v <= hi)
    }
}

/// Calibrated bands for the medians of the asymptotic statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub ratio_dn: Option<Band>,
    #[serde(default)]
    pub zeta_ks: Option<Band>,
    #[serde(default)]
    pub xi_ks: Option<Band>,
    #[serde(default)]
    pub max_over_l_star: Option<Band>,
    #[serde(default)]
    pub min_over_l_dagger: Option<Band>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateSpec {
    /// `b = 1 + (βx)⁺`, `d = 1 + (βx)⁻` with the configured β.
    Canonical,
    Constant {
        birth: f64,
        death: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialSpec {
    Single {
        x: f64,
    },
    /// Edge-profile start sized by the `Z` statistic.
    Airy,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Single { x: 0.0 }
    }
}

/// Absorbing barrier: a position, or `"right_boundary"` for `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BarrierSpec {
    At(f64),
    Named(NamedBarrier),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedBarrier {
    RightBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTemplate {
    pub dt: f64,
    pub t_end: f64,
    /// Defaults to `[t_end]`.
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub barrier: Option<BarrierSpec>,
    #[serde(default)]
    pub max_particles: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub params: ModelParams,
    pub sim: SimTemplate,
    #[serde(default = "default_rates")]
    pub rates: RateSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub replicates: usize,
    #[serde(default)]
    pub intervals: Vec<IntervalQuery>,
    #[serde(default)]
    pub comparisons: BTreeSet<Comparison>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_rates() -> RateSpec {
    RateSpec::Canonical
}

/// Command-line values that replace fields of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub replicates: Option<usize>,
    pub base_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub mode: Option<Mode>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and revalidates.
    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(n) = o.replicates {
            self.replicates = n;
        }
        if let Some(s) = o.base_seed {
            self.base_seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(dt) = o.dt {
            self.sim.dt = dt;
        }
        if let Some(t) = o.t_end {
            self.sim.t_end = t;
        }
        if o.rho.is_some() || o.beta.is_some() {
            let rho = o.rho.unwrap_or(self.params.rho());
            let beta = o.beta.unwrap_or(self.params.beta());
            self.params =
                ModelParams::with_alpha(rho, beta, self.params.alpha()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.base_seed.checked_add(self.replicates as u64).is_none() {
            return Err(Error::Config("base_seed + replicates overflows".into()));
        }
        if let RateSpec::Constant { birth, death } = self.rates {
            if !(birth >= 0.0 && death >= 0.0 && birth.is_finite() && death.is_finite()) {
                return Err(Error::Config("constant rates must be finite and nonnegative".into()));
            }
        }
        if let Some(BarrierSpec::At(x)) = self.sim.barrier {
            if !x.is_finite() {
                return Err(Error::Config("barrier must be finite".into()));
            }
        }
        if let InitialSpec::Single { x } = self.initial {
            if !x.is_finite() {
                return Err(Error::Config("initial position must be finite".into()));
            }
        }
        self.sim_config().map(|_| ())
    }

    pub fn rate_family(&self) -> RateFamily {
        match self.rates {
            RateSpec::Canonical => RateFamily::canonical(&self.params),
            RateSpec::Constant { birth, death } => RateFamily::Constant { birth, death },
        }
    }

    pub fn barrier(&self) -> Option<f64> {
        self.sim.barrier.map(|b| match b {
            BarrierSpec::At(x) => x,
            BarrierSpec::Named(NamedBarrier::RightBoundary) => self.params.l_right(),
        })
    }

    /// The per-replicate simulation settings; the seed is set per replicate.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let times = self.sim.snapshot_times.clone().unwrap_or_else(|| vec![self.sim.t_end]);
        let cfg = SimConfig {
            params: self.params,
            rates: self.rate_family(),
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            snapshot_times: times,
            barrier: self.barrier(),
            max_particles: self.sim.max_particles.unwrap_or(DEFAULT_MAX_PARTICLES),
            seed: self.base_seed,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })?;
        Ok(cfg)
    }

    /// Seed of replicate `index`.
    pub fn replicate_seed(&self, index: usize) -> u64 {
        self.base_seed + index as u64
    }
}
