//! Statistics of a population snapshot: interval counts, the exponential sums
//! `Y` and `Z`, the scaled empirical measures, KS distances and extremes.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::airy::{self, GAMMA_1};
use crate::error::{Error, Result};
use crate::sim::PopulationState;
use crate::theory::{self, ModelParams};

/// Largest `ρ x` whose exponential is finite in `f64`.
const MAX_EXPONENT: f64 = 709.78;

/// Closed interval `[lo, hi]` on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalQuery {
    lo: f64,
    hi: f64,
}

impl IntervalQuery {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Argument(format!("interval needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn everything() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn ext_to_json(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.into()
    }
}

/// Accepts a number, `null` (infinite on that side), or `"inf"` / `"-inf"`.
fn ext_from_json(v: &serde_json::Value, side: f64) -> std::result::Result<f64, String> {
    match v {
        serde_json::Value::Null => Ok(side * f64::INFINITY),
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
        serde_json::Value::String(s) => match s.as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => other.parse().map_err(|_| format!("bad endpoint {other:?}")),
        },
        other => Err(format!("bad endpoint {other}")),
    }
}

impl Serialize for IntervalQuery {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [ext_to_json(self.lo), ext_to_json(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalQuery {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let pair: [serde_json::Value; 2] = Deserialize::deserialize(d)?;
        let lo = ext_from_json(&pair[0], -1.0).map_err(D::Error::custom)?;
        let hi = ext_from_json(&pair[1], 1.0).map_err(D::Error::custom)?;
        IntervalQuery::new(lo, hi).map_err(D::Error::custom)
    }
}

/// Neumaier-compensated sum, accumulated in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Alive positions in id order.
fn positions_by_id(state: &PopulationState) -> Vec<f64> {
    if state.alive.windows(2).all(|w| w[0].id < w[1].id) {
        state.positions().collect()
    } else {
        let mut v: Vec<(u64, f64)> = state.alive.iter().map(|p| (p.id, p.position)).collect();
        v.sort_by_key(|&(id, _)| id);
        v.into_iter().map(|(_, x)| x).collect()
    }
}

fn weight(params: &ModelParams, x: f64) -> Result<f64> {
    let e = params.rho() * x;
    if e > MAX_EXPONENT {
        return Err(Error::Overflow { exponent: e });
    }
    Ok(e.exp())
}

pub fn count_interval(state: &PopulationState, q: &IntervalQuery) -> usize {
    state.positions().filter(|&x| q.contains(x)).count()
}

/// `Y = Σ e^{ρ x_i}`.
pub fn stat_y(state: &PopulationState, params: &ModelParams) -> Result<f64> {
    let terms = positions_by_id(state)
        .into_iter()
        .map(|x| weight(params, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// `Z = Σ e^{ρ x_i} Ai((2β)^{1/3}(L - x_i) + γ1) 1{x_i < L}`.
pub fn stat_z(state: &PopulationState, params: &ModelParams) -> Result<f64> {
    let l = params.l_right();
    let k = params.edge_scale();
    let mut terms = Vec::with_capacity(state.len());
    for x in positions_by_id(state) {
        if x >= l {
            continue;
        }
        let a = airy::ai_tail_flushed(k * (l - x) + GAMMA_1)?;
        if a == 0.0 {
            continue;
        }
        terms.push(weight(params, x)? * a);
    }
    Ok(compensated_sum(terms))
}

/// Atoms with nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Normalizes `weights` to sum to one.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Argument("points and weights differ in length".into()));
        }
        if points.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Argument("weights must be finite and nonnegative".into()));
        }
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::ZeroDenominator("total weight is zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `ζ`: positions scaled by `sqrt(β/ρ)`, uniform weights.
pub fn empirical_zeta(state: &PopulationState, params: &ModelParams) -> Result<WeightedSample> {
    if state.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let s = (params.beta() / params.rho()).sqrt();
    WeightedSample::uniform(positions_by_id(state).into_iter().map(|x| x * s).collect())
}

/// `ξ`: points `(2β)^{-1/3}(L - x)` weighted by `e^{ρ x} / Y`.
pub fn empirical_xi(state: &PopulationState, params: &ModelParams) -> Result<WeightedSample> {
    if state.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let xs = positions_by_id(state);
    let l = params.l_right();
    let k = params.edge_scale();
    // Weights relative to the largest one; the normalization by Y cancels the shift.
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = xs.iter().map(|&x| (params.rho() * (x - x_max)).exp()).collect();
    let points = xs.iter().map(|&x| k * (l - x)).collect();
    WeightedSample::new(points, weights)
}

/// `sup |F_n - F|` over both sides of every atom of the weighted sample.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &WeightedSample, cdf: F) -> f64 {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&i, &j| sample.points[i].total_cmp(&sample.points[j]));
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < order.len() {
        let x = sample.points[order[i]];
        let mut mass = 0.0;
        while i < order.len() && sample.points[order[i]] == x {
            mass += sample.weights[order[i]];
            i += 1;
        }
        let f = cdf(x);
        let above = (below + mass).min(1.0);
        worst = worst.max((below - f).abs()).max((above - f).abs());
        below = above;
    }
    worst
}

/// `(max, min)` of the alive positions.
pub fn extremes(state: &PopulationState) -> Option<(f64, f64)> {
    let mut it = state.positions();
    let first = it.next()?;
    Some(it.fold((first, first), |(hi, lo), x| (hi.max(x), lo.min(x))))
}

/// `(N(q) / N) / ∫_{q ∩ (-∞, L*]} f`.
pub fn ratio_dn(state: &PopulationState, params: &ModelParams, q: &IntervalQuery) -> Result<f64> {
    if state.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let denom = theory::density_integral(params, q.lo, q.hi)?;
    if !(denom > 0.0) {
        return Err(Error::ZeroDenominator(format!(
            "∫ f over [{}, {}] vanishes",
            q.lo, q.hi
        )));
    }
    let frac = count_interval(state, q) as f64 / state.len() as f64;
    Ok(frac / denom)
}

/// Per-snapshot summary row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableRow {
    pub time: f64,
    pub n_total: usize,
    pub n_interval: Vec<usize>,
    pub y_stat: f64,
    pub z_stat: f64,
    pub max_pos: Option<f64>,
    pub min_pos: Option<f64>,
}

pub fn observe(state: &PopulationState, params: &ModelParams, queries: &[IntervalQuery]) -> Result<ObservableRow> {
    let ext = extremes(state);
    Ok(ObservableRow {
        time: state.time,
        n_total: state.len(),
        n_interval: queries.iter().map(|q| count_interval(state, q)).collect(),
        y_stat: stat_y(state, params)?,
        z_stat: stat_z(state, params)?,
        max_pos: ext.map(|e| e.0),
        min_pos: ext.map(|e| e.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy::ai;

    fn params() -> ModelParams {
        ModelParams::new(0.1, 0.001).unwrap()
    }

    fn state(xs: &[f64]) -> PopulationState {
        PopulationState::from_positions(xs)
    }

    #[test]
    fn counting() {
        let q = IntervalQuery::new(0.0, 3.0).unwrap();
        assert_eq!(count_interval(&state(&[]), &q), 0);
        assert_eq!(count_interval(&state(&[-1.0, 0.0, 2.0]), &q), 2);
        assert_eq!(
            count_interval(&state(&[-1.0, 0.0, 2.0]), &IntervalQuery::everything()),
            3
        );
        assert!(IntervalQuery::new(1.0, 1.0).is_err());
    }

    #[test]
    fn y_and_z_basics() {
        let p = params();
        assert_eq!(stat_y(&state(&[0.0]), &p).unwrap(), 1.0);
        assert_eq!(stat_y(&state(&[0.0, 0.0]), &p).unwrap(), 2.0);
        assert_eq!(stat_y(&state(&[]), &p).unwrap(), 0.0);
        assert_eq!(stat_z(&state(&[p.l_right()]), &p).unwrap(), 0.0);
        assert_eq!(stat_z(&state(&[p.l_right() + 3.0]), &p).unwrap(), 0.0);
        let x = p.l_right() - 1.0 / p.edge_scale();
        let want = (p.rho() * x).exp() * ai(1.0 + GAMMA_1).unwrap();
        assert!((stat_z(&state(&[x]), &p).unwrap() - want).abs() < 1e-14 * want);
    }

    #[test]
    fn overflow_is_reported() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(matches!(stat_y(&state(&[800.0]), &p), Err(Error::Overflow { .. })));
    }

    #[test]
    fn zeta_and_xi() {
        let p = params();
        let z = empirical_zeta(&state(&[0.0]), &p).unwrap();
        assert_eq!((z.points(), z.weights()), (&[0.0][..], &[1.0][..]));
        let s = (p.rho() / p.beta()).sqrt();
        let z = empirical_zeta(&state(&[-s, s]), &p).unwrap();
        assert!((z.points()[0] + 1.0).abs() < 1e-14 && (z.points()[1] - 1.0).abs() < 1e-14);
        assert_eq!(z.weights(), &[0.5, 0.5]);
        let xi = empirical_xi(&state(&[1.0, 2.0, -3.0]), &p).unwrap();
        assert!((xi.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let w = xi.weights();
        assert!((w[1] / w[0] - (0.1f64).exp()).abs() < 1e-12);
        assert!(empirical_xi(&state(&[]), &p).is_err());
        assert!(empirical_zeta(&state(&[]), &p).is_err());
    }

    #[test]
    fn ks_point_mass() {
        let s = WeightedSample::uniform(vec![0.3]).unwrap();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!((ks_distance(&s, cdf) - 0.7).abs() < 1e-15);
        // Exact quantiles: distance equals the atom weight.
        let n = 10;
        let pts = (1..=n).map(|i| i as f64 / n as f64).collect();
        let s = WeightedSample::uniform(pts).unwrap();
        assert!((ks_distance(&s, cdf) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn extremes_and_ratio() {
        assert_eq!(extremes(&state(&[-1.0, 0.0, 2.0])), Some((2.0, -1.0)));
        assert_eq!(extremes(&state(&[4.0])), Some((4.0, 4.0)));
        assert_eq!(extremes(&state(&[])), None);
        let p = params();
        let above = IntervalQuery::new(6.0, 7.0).unwrap();
        assert!(matches!(
            ratio_dn(&state(&[0.0]), &p, &above),
            Err(Error::ZeroDenominator(_))
        ));
        assert!(matches!(ratio_dn(&state(&[]), &p, &above), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn interval_json_forms() {
        let q: IntervalQuery = serde_json::from_str(r#"[null, 1.5]"#).unwrap();
        assert_eq!((q.lo(), q.hi()), (f64::NEG_INFINITY, 1.5));
        let q: IntervalQuery = serde_json::from_str(r#"["-inf", "inf"]"#).unwrap();
        assert_eq!(q, IntervalQuery::everything());
        assert_eq!(serde_json::to_string(&q).unwrap(), r#"["-inf","inf"]"#);
        assert!(serde_json::from_str::<IntervalQuery>("[2, 1]").is_err());
    }
}
