//! Initial configurations.

use super::engine::{InitialMeta, PopulationState};
use super::rng::{ParticleRng, StreamDomain};
use crate::airy::{self, GAMMA_1};
use crate::error::{Error, Result};
use crate::observables;
use crate::theory::{EdgeProfile, ModelParams};

/// One particle at `x`.
pub fn initial_single(x: f64) -> PopulationState {
    PopulationState::from_positions(&[x])
}

/// `(β^{1/3} / ρ³) e^{ρ L}`, the reference size for the initial `Z`.
pub fn z_reference(params: &ModelParams) -> f64 {
    params.beta().cbrt() / params.rho().powi(3) * (params.rho() * params.l_right()).exp()
}

/// Draws particles at `L - (2β)^{-1/3} y` with `y ~ h` until the realized
/// `Z` reaches [`z_reference`]. A draw that would push `Z` past twice the
/// reference is rejected, so the final `Z` lies in `[1, 2]` times the
/// reference.
pub fn initial_airy(params: &ModelParams, seed: u64, max_particles: usize) -> Result<PopulationState> {
    let target = z_reference(params);
    if !target.is_finite() {
        return Err(Error::Overflow {
            exponent: params.rho() * params.l_right(),
        });
    }
    let table = EdgeProfile::get();
    let l = params.l_right();
    let inv_scale = 1.0 / params.edge_scale();
    let mut positions = Vec::new();
    let mut z = 0.0;
    let mut rejected = 0u64;
    let mut draw = 0u64;
    let max_draws = 64 * max_particles as u64 + 1024;

    while z < target {
        if draw >= max_draws || positions.len() >= max_particles {
            return Err(Error::Explosion {
                time: 0.0,
                count: positions.len() + 1,
                cap: max_particles,
            });
        }
        let mut rng = ParticleRng::new(seed, StreamDomain::Initial, draw, 0);
        draw += 1;
        // y = 0 sits exactly on L and contributes nothing; keep y > 0.
        let y = table.quantile(rng.uniform()).max(f64::MIN_POSITIVE);
        let x = l - y * inv_scale;
        let contribution = (params.rho() * x).exp() * airy::ai_tail_flushed(y + GAMMA_1)?;
        if z + contribution > 2.0 * target {
            rejected += 1;
            continue;
        }
        z += contribution;
        positions.push(x);
    }

    let mut state = PopulationState::from_positions(&positions);
    let z_realized = observables::stat_z(&state, params)?;
    let y_realized = observables::stat_y(&state, params)?;
    state.meta = Some(InitialMeta {
        z: z_realized,
        y: y_realized,
        z_target: target,
        rejected_draws: rejected,
    });
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle() {
        let s = initial_single(5.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s.alive[0].position, 5.0);
        assert_eq!(s.time, 0.0);
    }

    #[test]
    fn airy_start_respects_the_z_window() {
        for &(rho, beta) in &[(0.5, 0.01), (0.4, 0.002), (0.2, 0.001)] {
            let p = ModelParams::new(rho, beta).unwrap();
            let s = initial_airy(&p, 11, 1_000_000).unwrap();
            let meta = s.meta.unwrap();
            let ratio = meta.z / z_reference(&p);
            assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
            assert!((1.0..=2.0 + 1e-12).contains(&ratio));
            assert!(s.positions().all(|x| x < p.l_right()));
        }
    }

    #[test]
    fn airy_start_is_deterministic() {
        let p = ModelParams::new(0.5, 0.01).unwrap();
        assert_eq!(
            initial_airy(&p, 3, 100_000).unwrap(),
            initial_airy(&p, 3, 100_000).unwrap()
        );
        assert_ne!(
            initial_airy(&p, 3, 100_000).unwrap(),
            initial_airy(&p, 4, 100_000).unwrap()
        );
    }

    #[test]
    fn airy_start_cap() {
        let p = ModelParams::new(0.4, 0.002).unwrap();
        assert!(matches!(initial_airy(&p, 1, 3), Err(Error::Explosion { .. })));
    }
}
