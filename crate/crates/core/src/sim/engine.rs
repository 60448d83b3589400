use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rates::{working_window, RateFamily};
use super::rng::{ParticleRng, StreamDomain};
use crate::error::{Error, Result};
use crate::theory::ModelParams;

/// Largest allowed `dt * sup(b + d)` over the working window.
pub const MAX_EVENT_PROBABILITY: f64 = 0.05;
/// Default cap on the number of simultaneously alive particles.
pub const DEFAULT_MAX_PARTICLES: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Alive,
    Died,
    Split,
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub position: f64,
    pub born_at: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub splits: u64,
    pub deaths: u64,
    pub absorptions: u64,
}

/// Size statistics recorded by the initial-configuration generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialMeta {
    pub z: f64,
    pub y: f64,
    pub z_target: f64,
    pub rejected_draws: u64,
}

/// Alive particles at one instant, sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub time: f64,
    pub step: u64,
    pub alive: Vec<Particle>,
    pub cumulative_absorbed: Vec<(f64, u64)>,
    pub events: EventCounts,
    pub initial_count: usize,
    pub next_id: u64,
    pub meta: Option<InitialMeta>,
}

impl PopulationState {
    /// A time-zero state holding particles at `positions` with ids `0..n`.
    pub fn from_positions(positions: &[f64]) -> Self {
        let alive: Vec<Particle> = positions
            .iter()
            .enumerate()
            .map(|(i, &x)| Particle {
                id: i as u64,
                parent_id: None,
                position: x,
                born_at: 0.0,
                status: Status::Alive,
            })
            .collect();
        Self {
            time: 0.0,
            step: 0,
            initial_count: alive.len(),
            next_id: alive.len() as u64,
            alive,
            cumulative_absorbed: Vec::new(),
            events: EventCounts::default(),
            meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.alive.iter().map(|p| p.position)
    }
}

/// Time stepping, barrier and resource settings for one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub rates: RateFamily,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub barrier: Option<f64>,
    pub max_particles: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Canonical rates, no barrier, a single snapshot at `t_end`.
    pub fn new(params: ModelParams, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            params,
            rates: RateFamily::canonical(&params),
            dt,
            t_end,
            snapshot_times: vec![t_end],
            barrier: None,
            max_particles: DEFAULT_MAX_PARTICLES,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rates(mut self, rates: RateFamily) -> Result<Self> {
        self.rates = rates;
        self.validate()?;
        Ok(self)
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Result<Self> {
        self.snapshot_times = times;
        self.validate()?;
        Ok(self)
    }

    pub fn with_barrier(mut self, barrier: Option<f64>) -> Self {
        self.barrier = barrier;
        self
    }

    pub fn with_max_particles(mut self, cap: usize) -> Self {
        self.max_particles = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.max_particles == 0 {
            return Err(Error::Config("max_particles must be positive".into()));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("snapshot_times must be strictly increasing".into()));
        }
        if self.snapshot_times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::Config("snapshot_times must lie in [0, t_end]".into()));
        }
        let (lo, hi) = working_window(&self.params);
        let sup = self.rates.sup_total(lo, hi);
        if self.dt * sup > MAX_EVENT_PROBABILITY {
            return Err(Error::Config(format!(
                "dt * sup(b + d) = {} exceeds {MAX_EVENT_PROBABILITY}",
                self.dt * sup
            )));
        }
        Ok(())
    }

    /// Number of whole steps needed to reach `t`.
    pub fn steps_to(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }
}

/// Advances every alive particle by one step of length `dt`.
///
/// Per particle: rates are read at the pre-move position; an event happens
/// with probability `1 - exp(-(b + d) dt)` and is a split with probability
/// `b / (b + d)`, otherwise a death. A split retires the parent and creates
/// two children. Survivors move by `N(-rho dt, dt)`; children are placed at
/// the parent's post-move position. With a barrier, anything at or above it
/// after the move is absorbed.
pub fn step(state: &mut PopulationState, config: &SimConfig, seed: u64) -> Result<()> {
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let drift = -config.params.rho() * dt;
    let rates = config.rates;
    let step_idx = state.step;
    let t_after = (step_idx + 1) as f64 * dt;

    let mut next = Vec::with_capacity(state.alive.len() + state.alive.len() / 16 + 4);
    let mut newborn: Vec<(u64, f64)> = Vec::new();

    for p in &state.alive {
        let x = p.position;
        let b = rates.birth(x);
        let d = rates.death(x);
        let total = b + d;
        let mut rng = ParticleRng::new(seed, StreamDomain::Dynamics, p.id, step_idx);
        let u = rng.uniform();
        let p_event = -(-total * dt).exp_m1();
        let split = if u < p_event {
            if u < p_event * (b / total) {
                true
            } else {
                state.events.deaths += 1;
                continue;
            }
        } else {
            false
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        let new_x = x + drift + sqrt_dt * z;
        if split {
            state.events.splits += 1;
            newborn.push((p.id, new_x));
            continue;
        }
        if config.barrier.is_some_and(|l| new_x >= l) {
            state.events.absorptions += 1;
            state.cumulative_absorbed.push((t_after, p.id));
            continue;
        }
        next.push(Particle { position: new_x, ..*p });
    }

    for (parent, x) in newborn {
        for _ in 0..2 {
            let id = state.next_id;
            state.next_id += 1;
            if config.barrier.is_some_and(|l| x >= l) {
                state.events.absorptions += 1;
                state.cumulative_absorbed.push((t_after, id));
                continue;
            }
            next.push(Particle {
                id,
                parent_id: Some(parent),
                position: x,
                born_at: t_after,
                status: Status::Alive,
            });
        }
    }

    state.alive = next;
    state.step = step_idx + 1;
    state.time = t_after;
    if state.alive.len() > config.max_particles {
        return Err(Error::Explosion {
            time: state.time,
            count: state.alive.len(),
            cap: config.max_particles,
        });
    }
    Ok(())
}

/// A copy of the state at a configured snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub state: PopulationState,
}

/// Runs one replicate from `initial` and records the configured snapshots.
///
/// The output is a pure function of `(config, initial, seed)`; `config.seed`
/// is ignored in favour of the explicit `seed`.
pub fn run_replicate(config: &SimConfig, initial: &PopulationState, seed: u64) -> Result<Vec<Snapshot>> {
    config.validate()?;
    if initial.time != 0.0 || initial.step != 0 {
        return Err(Error::Argument("initial state must be at time 0".into()));
    }
    let mut state = initial.clone();
    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    let final_step = config.steps_to(config.t_end);
    let mut targets = config.snapshot_times.iter().map(|&t| config.steps_to(t)).peekable();

    loop {
        while let Some(&k) = targets.peek() {
            if k != state.step {
                break;
            }
            snapshots.push(Snapshot {
                time: state.time,
                state: state.clone(),
            });
            targets.next();
        }
        if state.step >= final_step || (state.is_empty() && targets.peek().is_none()) {
            break;
        }
        if state.is_empty() {
            // Extinct: nothing moves any more, jump to the next snapshot step.
            let k = *targets.peek().expect("checked above");
            state.step = k;
            state.time = k as f64 * config.dt;
            continue;
        }
        step(&mut state, config, seed)?;
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rates: RateFamily) -> SimConfig {
        let p = ModelParams::new(0.2, 0.01).unwrap();
        SimConfig::new(p, 0.01, 1.0).unwrap().with_rates(rates).unwrap()
    }

    #[test]
    fn dt_constraint_is_enforced() {
        let p = ModelParams::new(0.2, 0.01).unwrap();
        assert!(SimConfig::new(p, 0.1, 1.0).is_err());
        assert!(SimConfig::new(p, 0.02, 1.0).is_ok());
        assert!(SimConfig::new(p, 0.01, 1.0)
            .unwrap()
            .with_snapshots(vec![0.5, 0.2])
            .is_err());
        assert!(SimConfig::new(p, 0.01, 1.0).unwrap().with_snapshots(vec![2.0]).is_err());
    }

    #[test]
    fn no_branching_only_moves() {
        let c = cfg(RateFamily::Constant { birth: 0.0, death: 0.0 });
        let mut s = PopulationState::from_positions(&[0.0, 1.0]);
        step(&mut s, &c, 3).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.events, EventCounts::default());
        assert!((s.time - 0.01).abs() < 1e-15);
    }

    #[test]
    fn explosion_is_an_error() {
        let c = cfg(RateFamily::Constant { birth: 4.0, death: 0.0 }).with_max_particles(20);
        let init = PopulationState::from_positions(&[0.0; 10]);
        let err = run_replicate(&c, &init, 1).unwrap_err();
        assert!(matches!(err, Error::Explosion { cap: 20, .. }));
    }

    #[test]
    fn barrier_absorbs_everything_above() {
        let c = cfg(RateFamily::Constant { birth: 0.0, death: 0.0 }).with_barrier(Some(0.0));
        let mut s = PopulationState::from_positions(&[5.0, -5.0]);
        step(&mut s, &c, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.cumulative_absorbed, vec![(0.01, 0)]);
        assert_eq!(s.events.absorptions, 1);
    }

    #[test]
    fn ids_stay_sorted_and_parents_are_older() {
        let c = cfg(RateFamily::Constant { birth: 1.5, death: 1.0 });
        let init = PopulationState::from_positions(&[0.0; 5]);
        let snaps = run_replicate(&c, &init, 9).unwrap();
        let s = &snaps.last().unwrap().state;
        assert!(s.alive.windows(2).all(|w| w[0].id < w[1].id));
        for p in &s.alive {
            if let Some(parent) = p.parent_id {
                assert!(parent < p.id);
            }
            assert_eq!(p.status, Status::Alive);
        }
    }

    #[test]
    fn extinct_replicate_still_reports_snapshots() {
        let c = cfg(RateFamily::Constant { birth: 0.0, death: 4.0 })
            .with_snapshots(vec![0.0, 0.5, 1.0])
            .unwrap();
        let init = PopulationState::from_positions(&[0.0]);
        let snaps = run_replicate(&c, &init, 2).unwrap();
        assert_eq!(snaps.len(), 3);
        assert!((snaps[2].time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_initial_state() {
        let c = cfg(RateFamily::Constant { birth: 0.0, death: 0.0 });
        let mut s = PopulationState::from_positions(&[0.0]);
        step(&mut s, &c, 0).unwrap();
        assert!(run_replicate(&c, &s, 0).is_err());
    }
}
