use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::ModelParams;

/// Birth and death rates as functions of position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateFamily {
    /// `b(x) = 1 + max(beta x, 0)`, `d(x) = 1 + max(-beta x, 0)`; floor `alpha = 1/2`.
    Canonical { beta: f64 },
    /// Position-independent rates, for controls and unit tests.
    Constant { birth: f64, death: f64 },
}

impl RateFamily {
    pub fn canonical(params: &ModelParams) -> Self {
        RateFamily::Canonical { beta: params.beta() }
    }

    #[inline]
    pub fn birth(&self, x: f64) -> f64 {
        match *self {
            RateFamily::Canonical { beta } => 1.0 + (beta * x).max(0.0),
            RateFamily::Constant { birth, .. } => birth,
        }
    }

    #[inline]
    pub fn death(&self, x: f64) -> f64 {
        match *self {
            RateFamily::Canonical { beta } => 1.0 + (-beta * x).max(0.0),
            RateFamily::Constant { death, .. } => death,
        }
    }

    /// Largest `b + d` over `[lo, hi]`. Both families are convex in `x`.
    pub fn sup_total(&self, lo: f64, hi: f64) -> f64 {
        let total = |x: f64| self.birth(x) + self.death(x);
        total(lo).max(total(hi))
    }

    /// Checks `b - d = beta x`, `d >= alpha` and `b <= 1/alpha` (the latter
    /// for `x <= 1/beta`) on a 1000-point grid over `[L̄ - 5, L + 5]`.
    pub fn check_invariants(&self, params: &ModelParams) -> Result<()> {
        let (lo, hi) = working_window(params);
        let beta = params.beta();
        let alpha = params.alpha();
        for i in 0..1000 {
            let x = lo + (hi - lo) * i as f64 / 999.0;
            let (b, d) = (self.birth(x), self.death(x));
            if !(b >= 0.0 && d >= 0.0) {
                return Err(Error::InvalidParams(format!("negative rate at x = {x}")));
            }
            if ((b - d) - beta * x).abs() > 1e-12 * (1.0 + (beta * x).abs()) {
                return Err(Error::InvalidParams(format!(
                    "b - d = {} differs from beta x = {} at x = {x}",
                    b - d,
                    beta * x
                )));
            }
            if d < alpha {
                return Err(Error::InvalidParams(format!("death rate {d} below alpha at x = {x}")));
            }
            if x <= 1.0 / beta && b > 1.0 / alpha {
                return Err(Error::InvalidParams(format!("birth rate {b} above 1/alpha at x = {x}")));
            }
        }
        Ok(())
    }
}

/// `[L̄ - 5, L + 5]`, the region where rate bounds are checked.
pub fn working_window(params: &ModelParams) -> (f64, f64) {
    (params.l_bar() - 5.0, params.l_right() + 5.0)
}
