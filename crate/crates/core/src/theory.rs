//! Closed-form predictions for the traveling wave: edges, the look-back time
//! `t(y)`, the exponent `g(y)`, the density profiles, the many-to-one kernel
//! and the predicted interval counts.
//!
//! All lengths are in the model's space units, times in its time units.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::airy::{self, GAMMA_1};
use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance for every density integral in this module.
pub const DENSITY_REL_TOL: f64 = 1e-10;

/// Drift `rho`, selection gradient `beta` and the rate-floor constant `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    rho: f64,
    beta: f64,
    alpha: f64,
}

#[derive(Deserialize)]
struct RawParams {
    rho: f64,
    beta: f64,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

fn default_alpha() -> f64 {
    0.5
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::with_alpha(raw.rho, raw.beta, raw.alpha)
    }
}

/// How deep a parameter pair sits in the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeDiagnostics {
    /// `rho^3 / beta`
    pub rho3_over_beta: f64,
    /// `rho / beta^(1/3)`
    pub rho_over_cbrt_beta: f64,
}

impl ModelParams {
    /// Parameters with the canonical rate floor `alpha = 1/2`.
    pub fn new(rho: f64, beta: f64) -> Result<Self> {
        Self::with_alpha(rho, beta, default_alpha())
    }

    pub fn with_alpha(rho: f64, beta: f64, alpha: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParams(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { rho, beta, alpha })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(2 beta)^(1/3)`, the inverse width of the right-edge boundary layer.
    pub fn edge_scale(&self) -> f64 {
        (2.0 * self.beta).cbrt()
    }

    /// `rho^3 / beta`
    pub fn rho3_over_beta(&self) -> f64 {
        self.rho.powi(3) / self.beta
    }

    pub fn l_star(&self) -> f64 {
        self.rho * self.rho / (2.0 * self.beta)
    }

    pub fn l_dagger(&self) -> f64 {
        -5.0 * self.rho * self.rho / (8.0 * self.beta)
    }

    pub fn l_right(&self) -> f64 {
        self.l_star() - GAMMA_1 / self.edge_scale()
    }

    pub fn l_bar(&self) -> f64 {
        self.l_dagger() + 2.0 * GAMMA_1 / self.edge_scale()
    }

    pub fn diagnostics(&self) -> RegimeDiagnostics {
        RegimeDiagnostics {
            rho3_over_beta: self.rho3_over_beta(),
            rho_over_cbrt_beta: self.rho / self.beta.cbrt(),
        }
    }
}

/// Right edge `L*`, left edge `L†`, right boundary `L` and the predicted
/// left-most position `L̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeSet {
    pub l_star: f64,
    pub l_dagger: f64,
    pub l_right: f64,
    pub l_bar: f64,
}

pub fn edges(params: &ModelParams) -> EdgeSet {
    EdgeSet {
        l_star: params.l_star(),
        l_dagger: params.l_dagger(),
        l_right: params.l_right(),
        l_bar: params.l_bar(),
    }
}

fn check_below_edge(what: &'static str, params: &ModelParams, y: f64) -> Result<f64> {
    let s = params.l_star() - y;
    if y.is_nan() || s < 0.0 {
        Err(Error::Domain { what, value: y })
    } else {
        Ok(s)
    }
}

/// Look-back time `t(y) = sqrt(2 (L* - y) / beta)`.
pub fn t_of(params: &ModelParams, y: f64) -> Result<f64> {
    let s = check_below_edge("t_of", params, y)?;
    Ok((2.0 * s / params.beta).sqrt())
}

/// Exponent `g(y) = rho (L* - y) - (2 sqrt(2 beta) / 3) (L* - y)^(3/2)`.
pub fn g_of(params: &ModelParams, y: f64) -> Result<f64> {
    let s = check_below_edge("g_of", params, y)?;
    Ok(g_from_gap(params, s))
}

fn g_from_gap(params: &ModelParams, s: f64) -> f64 {
    params.rho * s - 2.0 * (2.0 * params.beta).sqrt() / 3.0 * s * s.sqrt()
}

/// `c0 = z / L*` and `c = sqrt(1 - c0)` for a reference point `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveCoeffs {
    pub z: f64,
    pub c0: f64,
    pub c: f64,
}

pub fn coeffs(params: &ModelParams, z: f64) -> Result<WaveCoeffs> {
    if !(z < params.l_star()) {
        return Err(Error::Domain {
            what: "coeffs",
            value: z,
        });
    }
    let c0 = z / params.l_star();
    Ok(WaveCoeffs {
        z,
        c0,
        c: (1.0 - c0).sqrt(),
    })
}

/// Asymptotic empirical density `f(y)`; zero on `[L*, ∞)`.
pub fn profile_f(params: &ModelParams, y: f64) -> f64 {
    let s = params.l_star() - y;
    if !(s > 0.0) {
        return 0.0;
    }
    let t = (2.0 * s / params.beta).sqrt();
    let exponent = g_from_gap(params, s) - params.rho3_over_beta() / 6.0;
    exponent.exp() / (2.0 * PI * t).sqrt()
}

/// Airy density `f^A(y)`.
///
/// Defined wherever the Airy argument `(2 beta)^(1/3) (L* - y)` stays in the
/// kernel's window, which includes `y` slightly above `L*` up to the right
/// boundary `L` where it vanishes.
pub fn profile_airy(params: &ModelParams, y: f64) -> Result<f64> {
    let k = params.edge_scale();
    let arg = k * (params.l_star() - y);
    if !airy::in_window(arg) {
        return Err(Error::Domain {
            what: "profile_airy",
            value: y,
        });
    }
    let exponent = -params.rho * y + params.rho3_over_beta() / 3.0;
    Ok(k * exponent.exp() * airy::ai(arg)?)
}

/// Gaussian density with mean 0 and variance `rho / beta`.
pub fn profile_gauss(params: &ModelParams, y: f64) -> f64 {
    let var = params.rho / params.beta;
    (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// The profile seen in the drift-free frame at time `t`: `f(y - rho t)`.
pub fn traveling_profile(params: &ModelParams, t: f64, y: f64) -> f64 {
    profile_f(params, y - params.rho * t)
}

/// Many-to-one density `p_t(x, y)` of the free process started from one
/// particle at `x`.
pub fn mean_density(params: &ModelParams, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("mean_density needs t > 0, got {t}")));
    }
    Ok(mean_density_raw(params.rho, params.beta, t, x, y))
}

/// [`mean_density`] without parameter validation; `beta = 0` gives the
/// drifted heat kernel.
pub fn mean_density_raw(rho: f64, beta: f64, t: f64, x: f64, y: f64) -> f64 {
    let d = x - y;
    let exponent = rho * x - rho * y - d * d / (2.0 * t) - rho * rho * t / 2.0
        + beta * (x + y) * t / 2.0
        + beta * beta * t * t * t / 24.0;
    exponent.exp() / (2.0 * PI * t).sqrt()
}

/// Interval endpoint on the extended real line; JSON uses `null` or the
/// strings `"-inf"` / `"inf"` for the infinite ends.
pub type ExtReal = f64;

/// `∫_{[lo,hi] ∩ (-∞, L*]} f(y) dy`.
///
/// Evaluated in the variable `w = (L* - y)^(1/4)`, which removes the
/// `(L* - y)^(-1/4)` singularity of `f` at the right edge.
pub fn density_integral(params: &ModelParams, lo: ExtReal, hi: ExtReal) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Argument(format!("empty interval [{lo}, {hi}]")));
    }
    let l_star = params.l_star();
    let hi = hi.min(l_star);
    if lo >= hi {
        return Ok(0.0);
    }
    let w_lo = (l_star - hi).powf(0.25);
    let w_hi = if lo.is_finite() {
        (l_star - lo).powf(0.25)
    } else {
        f64::INFINITY
    };
    let rho = params.rho;
    let c32 = 2.0 * (2.0 * params.beta).sqrt() / 3.0;
    let shift = params.rho3_over_beta() / 6.0;
    let prefactor = 4.0 / ((2.0 * PI).sqrt() * (2.0 / params.beta).powf(0.25));
    let integrand = |w: f64| {
        let w2 = w * w;
        let w4 = w2 * w2;
        prefactor * w2 * (rho * w4 - c32 * w4 * w2 - shift).exp()
    };
    // For large rho^3/beta the mass is a narrow bump around y = 0 of width
    // sqrt(rho/beta); break the range there so the rule cannot step over it.
    let w_peak = l_star.powf(0.25);
    let w_width = (rho / params.beta).sqrt() / (4.0 * l_star.powf(0.75));
    let mut breaks = vec![w_lo];
    breaks.extend(
        [-40.0, -8.0, -2.0, 0.0, 2.0, 8.0, 40.0]
            .iter()
            .map(|m| w_peak + m * w_width)
            .filter(|&w| w > w_lo && w < w_hi),
    );
    breaks.push(w_hi);
    let pieces = breaks
        .windows(2)
        .map(|s| quad::integrate(integrand, s[0], s[1], DENSITY_REL_TOL, 0.0).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::observables::compensated_sum(pieces))
}

/// Expected count in `[a, b]` given the size statistic `z0` at the
/// reference time.
pub fn predicted_count(params: &ModelParams, z0: f64, a: ExtReal, b: ExtReal) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Argument(format!("predicted_count needs a < b, got [{a}, {b}]")));
    }
    if !(z0 >= 0.0) {
        return Err(Error::Argument(format!("z0 must be nonnegative, got {z0}")));
    }
    let integral = density_integral(params, a, b)?;
    // e^{-rho L*} e^{rho^3/6beta} = e^{-rho^3/3beta}; f already carries the latter.
    let ai_d = airy::ai_deriv(GAMMA_1)?;
    let scale = (-params.rho3_over_beta() / 3.0).exp();
    Ok(z0 * scale * integral / (ai_d * ai_d))
}

/// Point of `[a, b]` closest to the origin.
pub fn z_star(a: ExtReal, b: ExtReal) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Argument(format!("z_star needs a < b, got [{a}, {b}]")));
    }
    Ok(if a >= 0.0 {
        a
    } else if b <= 0.0 {
        b
    } else {
        0.0
    })
}

/// Density `h(y) ∝ Ai(y + γ1)` on `(0, ∞)` together with its CDF table.
#[derive(Debug, Clone)]
pub struct EdgeProfile {
    normalizer: f64,
    step: f64,
    cdf: Vec<f64>,
}

const EDGE_TABLE_MAX: f64 = 30.0;
const EDGE_TABLE_CELLS: usize = 6000;

impl EdgeProfile {
    fn build() -> Result<Self> {
        let step = EDGE_TABLE_MAX / EDGE_TABLE_CELLS as f64;
        let upper = airy::WINDOW_MAX - GAMMA_1;
        let ai_shift = |z: f64| airy::ai(z + GAMMA_1).unwrap_or(0.0);
        let normalizer = quad::integrate(ai_shift, 0.0, upper, 1e-13, 0.0)?.value;
        let mut cdf = Vec::with_capacity(EDGE_TABLE_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..EDGE_TABLE_CELLS {
            let a = i as f64 * step;
            acc += quad::integrate(ai_shift, a, a + step, 1e-13, 1e-300)?.value;
            cdf.push(acc / normalizer);
        }
        Ok(Self { normalizer, step, cdf })
    }

    /// Shared table, built on first use.
    pub fn get() -> &'static EdgeProfile {
        static TABLE: OnceLock<EdgeProfile> = OnceLock::new();
        TABLE.get_or_init(|| Self::build().expect("edge profile quadrature converges"))
    }

    /// `∫_0^∞ Ai(z + γ1) dz`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain {
                what: "edge_profile_h",
                value: y,
            });
        }
        Ok(airy::ai_tail_flushed(y + GAMMA_1)? / self.normalizer)
    }

    /// `H(y) = ∫_0^y h`; 0 below the support, 1 beyond the table.
    pub fn cdf(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        let pos = y / self.step;
        let i = pos.floor() as usize;
        if i >= EDGE_TABLE_CELLS {
            return 1.0;
        }
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse of the tabulated CDF for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c <= u);
        if i == 0 {
            return 0.0;
        }
        if i > EDGE_TABLE_CELLS {
            return EDGE_TABLE_MAX;
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        ((i - 1) as f64 + frac) * self.step
    }
}

/// `h(y) = Ai(y + γ1) / ∫_0^∞ Ai(z + γ1) dz` for `y > 0`.
pub fn edge_profile_h(y: f64) -> Result<f64> {
    EdgeProfile::get().pdf(y)
}

/// `ω(y) = C e^{-σ² y / 2D} Ai(σ⁴ / (4 D^{4/3}) - y / D^{1/3})`.
pub fn wave_ode_solution(sigma2: f64, d_coeff: f64, scale_c: f64, y: f64) -> Result<f64> {
    let (arg, growth) = wave_ode_parts(sigma2, d_coeff, y)?;
    Ok(scale_c * growth * airy::ai(arg)?)
}

fn wave_ode_parts(sigma2: f64, d_coeff: f64, y: f64) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0 && d_coeff > 0.0) {
        return Err(Error::Argument(format!(
            "wave ODE needs sigma2 > 0 and D > 0, got ({sigma2}, {d_coeff})"
        )));
    }
    let d13 = d_coeff.cbrt();
    let arg = sigma2 * sigma2 / (4.0 * d13 * d13 * d13 * d13) - y / d13;
    if !airy::in_window(arg) {
        return Err(Error::Domain {
            what: "wave_ode",
            value: y,
        });
    }
    Ok((arg, (-sigma2 * y / (2.0 * d_coeff)).exp()))
}

/// `D ω'' + σ² ω' + y ω` for the closed-form `ω`, with `ω''` obtained from
/// `Ai'' = x Ai`.
pub fn wave_ode_residual(sigma2: f64, d_coeff: f64, scale_c: f64, y: f64) -> Result<f64> {
    let (arg, growth) = wave_ode_parts(sigma2, d_coeff, y)?;
    if scale_c == 0.0 {
        return Ok(0.0);
    }
    let (a, ad) = airy::ai_pair(arg)?;
    let k = sigma2 / (2.0 * d_coeff);
    let d13 = d_coeff.cbrt();
    let w = scale_c * growth * a;
    let w1 = scale_c * growth * (-k * a - ad / d13);
    let w2 = scale_c * growth * (k * k * a + 2.0 * k * ad / d13 + arg * a / (d13 * d13));
    Ok(d_coeff * w2 + sigma2 * w1 + y * w)
}

/// Which closed-form profile a [`TheoryCurve`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CurveKind {
    F,
    FAiry,
    FGauss,
    G,
    T,
    /// `p_t(x, ·)`
    PT {
        t: f64,
        x: f64,
    },
    H,
}

/// A profile sampled on a strictly increasing grid. Points outside the
/// formula's domain hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || n < 2 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Argument(format!("bad grid [{lo}, {hi}] with {n} points")));
    }
    let h = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
        .collect())
}

pub fn sample_curve(params: &ModelParams, kind: CurveKind, grid: &[f64]) -> Result<TheoryCurve> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument("grid must be strictly increasing".into()));
    }
    let values = grid
        .iter()
        .map(|&y| match kind {
            CurveKind::F => Some(profile_f(params, y)),
            CurveKind::FAiry => profile_airy(params, y).ok(),
            CurveKind::FGauss => Some(profile_gauss(params, y)),
            CurveKind::G => g_of(params, y).ok(),
            CurveKind::T => t_of(params, y).ok(),
            CurveKind::PT { t, x } => mean_density(params, t, x, y).ok(),
            CurveKind::H => edge_profile_h(y).ok(),
        })
        .collect();
    Ok(TheoryCurve {
        kind,
        grid: grid.to_vec(),
        values,
    })
}
