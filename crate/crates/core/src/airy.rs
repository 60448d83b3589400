//! Airy function `Ai`, its derivative and its negative zeros on the real line.
//!
//! Evaluation strategy:
//!
//! * `|x| <= 8`: Maclaurin series `Ai = c1 f(x) - c2 g(x)` summed in
//!   double-double arithmetic. The individual series reach ~3e6 at `|x| = 8`
//!   while `Ai` itself is of order 1e-7 there, so plain `f64` summation would
//!   lose about nine digits to cancellation.
//! * `x > 8`: exponentially decaying asymptotic expansion.
//! * `x < -8`: oscillatory asymptotic expansion.
//!
//! Arguments outside `[-40, 40]` are rejected with [`Error::Domain`].

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Lower end of the supported argument window.
pub const WINDOW_MIN: f64 = -40.0;
/// Upper end of the supported argument window.
pub const WINDOW_MAX: f64 = 40.0;
/// Largest zero index served by [`airy_zero`].
pub const MAX_ZERO_INDEX: usize = 50;

/// First (largest) zero of `Ai`.
pub const GAMMA_1: f64 = -2.338_107_410_459_767;

const SERIES_LIMIT: f64 = 8.0;

// Ai(0) and -Ai'(0) as double-double pairs.
const C1: Dd = Dd::new(0.355_028_053_887_817_2, 2.052_336_324_362_12e-17);
const C2: Dd = Dd::new(0.258_819_403_792_806_8, -2.522_243_111_610_832e-17);

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// `Ai(x)` for real `x` in `[-40, 40]`.
pub fn ai(x: f64) -> Result<f64> {
    check_window("ai", x)?;
    let v = if x.abs() <= SERIES_LIMIT {
        series(x).0
    } else if x > 0.0 {
        decaying(x).0
    } else {
        oscillating(-x).0
    };
    // Ai has no zeros to the right of GAMMA_1; clip round-off of the zero itself.
    if x >= GAMMA_1 && v < 0.0 {
        Ok(0.0)
    } else {
        Ok(v)
    }
}

/// `Ai'(x)` for real `x` in `[-40, 40]`.
pub fn ai_deriv(x: f64) -> Result<f64> {
    check_window("ai_deriv", x)?;
    Ok(ai_pair_unchecked(x).1)
}

/// `(Ai(x), Ai'(x))` evaluated together.
pub fn ai_pair(x: f64) -> Result<(f64, f64)> {
    check_window("ai_pair", x)?;
    let (v, d) = ai_pair_unchecked(x);
    Ok((if x >= GAMMA_1 { v.max(0.0) } else { v }, d))
}

/// `Ai(x)` with the decaying tail beyond the window flushed to zero.
///
/// `Ai(40)` is below 1e-72, so for `x > 40` the value is returned as `0.0`
/// instead of an error. Arguments below the window are still rejected.
pub fn ai_tail_flushed(x: f64) -> Result<f64> {
    if x > WINDOW_MAX {
        Ok(0.0)
    } else {
        ai(x)
    }
}

/// `true` when `x` lies inside the accuracy window.
pub fn in_window(x: f64) -> bool {
    x.is_finite() && (WINDOW_MIN..=WINDOW_MAX).contains(&x)
}

fn check_window(what: &'static str, x: f64) -> Result<()> {
    if in_window(x) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

fn ai_pair_unchecked(x: f64) -> (f64, f64) {
    if x.abs() <= SERIES_LIMIT {
        series(x)
    } else if x > 0.0 {
        decaying(x)
    } else {
        oscillating(-x)
    }
}

/// The `k`-th negative zero `γ_k` of `Ai`, `1 <= k <= 50`.
pub fn airy_zero(k: usize) -> Result<f64> {
    if !(1..=MAX_ZERO_INDEX).contains(&k) {
        return Err(Error::Range {
            what: "airy_zero",
            index: k,
            lo: 1,
            hi: MAX_ZERO_INDEX,
        });
    }
    let mut x = zero_estimate(k);
    for _ in 0..50 {
        let (v, d) = ai_pair_unchecked(x);
        let step = v / d;
        x -= step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    Ok(x)
}

/// Asymptotic estimate of the k-th zero, `-T(3π(4k-1)/8)`.
fn zero_estimate(k: usize) -> f64 {
    let t = 3.0 * std::f64::consts::PI * (4.0 * k as f64 - 1.0) / 8.0;
    let t2 = t.powi(-2);
    let series = 1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * (77125.0 / 82944.0)));
    -t.powf(2.0 / 3.0) * series
}

/// The first `count` zeros of `Ai`, ordered `γ_1 > γ_2 > ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct AiryZeroTable {
    zeros: Vec<f64>,
}

impl AiryZeroTable {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 || count > MAX_ZERO_INDEX {
            return Err(Error::Range {
                what: "AiryZeroTable",
                index: count,
                lo: 1,
                hi: MAX_ZERO_INDEX,
            });
        }
        let zeros = (1..=count).map(airy_zero).collect::<Result<Vec<_>>>()?;
        Ok(Self { zeros })
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    /// `γ_k`, one-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }
}

// --- Maclaurin series in double-double -------------------------------------

fn series(x: f64) -> (f64, f64) {
    let x2 = Dd::from(x).mul_f64(x);
    let x3 = x2.mul_f64(x);

    // f = Σ t_k, g = Σ s_k, f' = Σ a_k, g' = 1 + Σ b_k
    let mut t = Dd::from(1.0);
    let mut s = Dd::from(x);
    let mut f = t;
    let mut g = s;
    let mut fp = Dd::from(0.0);
    let mut gp = Dd::from(1.0);

    for k in 1..400 {
        let kf = k as f64;
        let a = t.mul(x2).div_f64(3.0 * kf - 1.0);
        let b = s.mul(x2).div_f64(3.0 * kf);
        t = t.mul(x3).div_f64((3.0 * kf - 1.0) * (3.0 * kf));
        s = s.mul(x3).div_f64((3.0 * kf) * (3.0 * kf + 1.0));
        f = f.add(t);
        g = g.add(s);
        fp = fp.add(a);
        gp = gp.add(b);
        let biggest = t.hi.abs().max(s.hi.abs()).max(a.hi.abs()).max(b.hi.abs());
        if biggest < 1e-30 {
            break;
        }
    }

    let v = C1.mul(f).sub(C2.mul(g));
    let d = C1.mul(fp).sub(C2.mul(gp));
    (v.to_f64(), d.to_f64())
}

// --- Asymptotic expansions ---------------------------------------------------

fn coefficients() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| uv_coefficients(EXPANSION_TERMS))
}

/// Coefficients `u_k`, `v_k` of the large-argument expansions.
fn uv_coefficients(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    u.push(1.0);
    v.push(1.0);
    for k in 1..n {
        let kf = k as f64;
        let uk = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(uk);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
    }
    (u, v)
}

const EXPANSION_TERMS: usize = 40;

/// Sums `Σ sign_k c_k ζ^{-k}` over `k ∈ ks`, stopping at the smallest term.
fn truncated_sum(coeffs: &[f64], zeta: f64, ks: impl Iterator<Item = usize>, alternate: bool) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for (j, k) in ks.enumerate() {
        if k >= coeffs.len() {
            break;
        }
        let term = coeffs[k] / zeta.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        let sign = if alternate && j % 2 == 1 { -1.0 } else { 1.0 };
        sum += sign * term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn decaying(x: f64) -> (f64, f64) {
    let (u, v) = coefficients();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let q = x.powf(0.25);
    let e = (-zeta).exp() * 0.5 * INV_SQRT_PI;
    let su = truncated_sum(u, zeta, 0..EXPANSION_TERMS, true);
    let sv = truncated_sum(v, zeta, 0..EXPANSION_TERMS, true);
    (e / q * su, -e * q * sv)
}

fn oscillating(z: f64) -> (f64, f64) {
    let (u, v) = coefficients();
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let q = z.powf(0.25);
    let phase = zeta - std::f64::consts::FRAC_PI_4;
    let (sn, cs) = phase.sin_cos();
    let u_even = truncated_sum(u, zeta, (0..EXPANSION_TERMS).step_by(2), true);
    let u_odd = truncated_sum(u, zeta, (1..EXPANSION_TERMS).step_by(2), true);
    let v_even = truncated_sum(v, zeta, (0..EXPANSION_TERMS).step_by(2), true);
    let v_odd = truncated_sum(v, zeta, (1..EXPANSION_TERMS).step_by(2), true);
    let value = INV_SQRT_PI / q * (cs * u_even + sn * u_odd);
    let deriv = INV_SQRT_PI * q * (sn * v_even - cs * v_odd);
    (value, deriv)
}

// --- double-double ----------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self::new(s, err)
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self::new(s, b - (s - a))
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let r = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(r.hi, r.lo + t.lo)
    }

    fn sub(self, o: Self) -> Self {
        self.add(Self::new(-o.hi, -o.lo))
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Self::quick_two_sum(p, err + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f64(self, b: f64) -> Self {
        self.mul(Self::from(b))
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self.sub(Self::from(q1).mul_f64(b));
        let q2 = r.hi / b;
        let r = r.sub(Self::from(q2).mul_f64(b));
        let q3 = r.hi / b;
        Self::quick_two_sum(q1, q2).add(Self::from(q3))
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Self::new(v, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert!((ai(0.0).unwrap() - 0.355_028_053_9).abs() < 1e-10);
        assert!((ai_deriv(0.0).unwrap() + 0.258_819_403_8).abs() < 1e-10);
    }

    #[test]
    fn branches_agree_at_the_switch_point() {
        for &x in &[8.0_f64, -8.0] {
            let (sv, sd) = series(x);
            let (av, ad) = if x > 0.0 { decaying(x) } else { oscillating(-x) };
            assert!((sv - av).abs() < 1e-12, "Ai at {x}: {sv} vs {av}");
            assert!((sd - ad).abs() < 1e-11, "Ai' at {x}: {sd} vs {ad}");
        }
    }

    #[test]
    fn window_is_a_hard_precondition() {
        assert!(matches!(ai(40.5), Err(Error::Domain { .. })));
        assert!(matches!(ai(-41.0), Err(Error::Domain { .. })));
        assert!(matches!(ai_deriv(f64::NAN), Err(Error::Domain { .. })));
        assert!(ai(40.0).is_ok() && ai(-40.0).is_ok());
    }

    #[test]
    fn zero_index_range() {
        assert!(matches!(airy_zero(0), Err(Error::Range { .. })));
        assert!(matches!(airy_zero(51), Err(Error::Range { .. })));
        assert!(airy_zero(50).is_ok());
    }

    #[test]
    fn first_zero_matches_constant() {
        assert!((airy_zero(1).unwrap() - GAMMA_1).abs() < 1e-13);
        assert!((airy_zero(2).unwrap() + 4.087_949_444_1).abs() < 1e-9);
    }

    #[test]
    fn nonnegative_right_of_first_zero() {
        assert!(ai(GAMMA_1).unwrap() >= 0.0);
        let mut x = GAMMA_1;
        while x < 40.0 {
            assert!(ai(x).unwrap() >= 0.0, "negative at {x}");
            x += 0.013;
        }
    }

    #[test]
    fn zero_table_invariants() {
        let table = AiryZeroTable::new(50).unwrap();
        assert_eq!(table.count(), 50);
        for w in table.zeros().windows(2) {
            assert!(w[1] < w[0]);
        }
        for &z in table.zeros() {
            assert!(z < 0.0);
            assert!(ai(z).unwrap().abs() < 1e-10);
        }
        assert_eq!(table.get(1), Some(table.zeros()[0]));
        assert_eq!(table.get(0), None);
        assert!(AiryZeroTable::new(0).is_err());
    }
}
