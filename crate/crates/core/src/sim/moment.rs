//! Exact first moment of the discrete-time scheme.
//!
//! For a single particle started at `x0`, the expected number of particles
//! in `[a, b]` after `n` steps of [`super::step`] is
//! `E[ Π_{k<n} m(X_k) 1{X_n ∈ [a, b]} ]`, where `X` is the Gaussian random walk
//! with increments `N(-ρ dt, dt)` and `m(x) = 1 + (b - d)/(b + d) (1 - e^{-(b+d) dt})`
//! is the mean offspring number of one step. This module propagates that
//! expectation on a grid, which measures the time-discretization bias of the
//! Monte Carlo engine without sampling noise.
//!
//! The grid spacing is `sqrt(dt) / 2.5`; the trapezoidal convolution of the
//! Gaussian kernel is then accurate far below double precision.

use super::rates::RateFamily;
use crate::error::{Error, Result};
use crate::theory::ModelParams;

const SPACING_PER_SIGMA: f64 = 2.5;
const KERNEL_SIGMAS: f64 = 9.0;
const DOMAIN_SIGMAS: f64 = 10.0;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mean offspring number over one step for a particle at `x`.
pub fn step_multiplier(rates: &RateFamily, dt: f64, x: f64) -> f64 {
    let b = rates.birth(x);
    let d = rates.death(x);
    let total = b + d;
    if total == 0.0 {
        1.0
    } else {
        1.0 + (b - d) / total * -(-total * dt).exp_m1()
    }
}

/// Expected count in `[a, b]` after `round(t / dt)` steps from one particle at `x0`.
pub fn scheme_interval_mean(
    params: &ModelParams,
    rates: &RateFamily,
    dt: f64,
    t: f64,
    x0: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(dt > 0.0 && t >= 0.0) {
        return Err(Error::Argument(format!(
            "need dt > 0 and t >= 0, got dt = {dt}, t = {t}"
        )));
    }
    if !(a < b) {
        return Err(Error::Argument(format!("empty interval [{a}, {b}]")));
    }
    let n = (t / dt).round() as usize;
    let drift = -params.rho() * dt;
    let sigma = dt.sqrt();
    let interval_mass =
        |x: f64, m: f64| m * (std_normal_cdf((b - x - drift) / sigma) - std_normal_cdf((a - x - drift) / sigma));
    match n {
        0 => return Ok(if (a..=b).contains(&x0) { 1.0 } else { 0.0 }),
        1 => return Ok(interval_mass(x0, step_multiplier(rates, dt, x0))),
        _ => {}
    }

    let spread = DOMAIN_SIGMAS * t.sqrt() + 1.0;
    let tilt = params.beta() * t * t;
    let lo = x0.min(x0 - params.rho() * t).min(a.max(x0 - 1e3)) - spread;
    let hi = x0.max(b.min(x0 + 1e3)) + spread + tilt;
    let h = sigma / SPACING_PER_SIGMA;
    let len = ((hi - lo) / h).ceil() as usize + 1;
    if len > 50_000_000 {
        return Err(Error::Argument(format!("grid of {len} points is too large")));
    }
    let grid: Vec<f64> = (0..len).map(|i| lo + i as f64 * h).collect();
    let mult: Vec<f64> = grid.iter().map(|&x| step_multiplier(rates, dt, x)).collect();

    let radius = ((KERNEL_SIGMAS * sigma + drift.abs()) / h).ceil() as usize;
    // new[i] = Σ_q kernel[q] v[i - radius + q], kernel[q] = h φ_σ((radius - q) h - drift)
    let kernel: Vec<f64> = (0..=2 * radius)
        .map(|q| {
            let off = (radius as f64 - q as f64) * h - drift;
            h * std_normal_pdf(off / sigma) / sigma
        })
        .collect();

    // Density after the first step.
    let m0 = step_multiplier(rates, dt, x0);
    let mut u: Vec<f64> = grid
        .iter()
        .map(|&x| m0 * std_normal_pdf((x - x0 - drift) / sigma) / sigma)
        .collect();
    let mut v = vec![0.0; len];
    let mut next = vec![0.0; len];

    for _ in 1..n - 1 {
        let (first, last) = support(&u);
        for i in first..=last {
            v[i] = mult[i] * u[i];
        }
        let out_lo = first.saturating_sub(radius);
        let out_hi = (last + radius).min(len - 1);
        for (i, slot) in next.iter_mut().enumerate().take(out_hi + 1).skip(out_lo) {
            let q_lo = (first + radius).saturating_sub(i);
            let q_hi = (last + radius - i).min(2 * radius);
            let base = i + q_lo - radius;
            let mut acc = 0.0;
            for (k, w) in kernel[q_lo..=q_hi].iter().zip(&v[base..]) {
                acc += k * w;
            }
            *slot = acc;
        }
        v[first..=last].fill(0.0);
        std::mem::swap(&mut u, &mut next);
        next[..].fill(0.0);
    }

    let total = grid
        .iter()
        .zip(&u)
        .zip(&mult)
        .filter(|(_, &w)| w != 0.0)
        .map(|((&x, &w), &m)| h * w * interval_mass(x, m))
        .sum();
    Ok(total)
}

fn support(u: &[f64]) -> (usize, usize) {
    let first = u.iter().position(|&w| w != 0.0).unwrap_or(0);
    let last = u.iter().rposition(|&w| w != 0.0).unwrap_or(0);
    (first, last.max(first))
}
