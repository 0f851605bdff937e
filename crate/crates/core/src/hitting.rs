//! Hitting probabilities of standard max-stable processes.
//!
//! A continuous path attains the level `x` on an interval iff its minimum
//! there is `<= x` and its maximum is `>= x`. On a grid the same rule can
//! only miss excursions between grid points, so grid estimates of hitting
//! probabilities are biased low, never high. Three-point events such as the
//! down-up-down event are exact on the grid.
//!
//! Every estimator simulates η-path `i` from substream `(seed, i)`; calls
//! with the same seed and grid see the same paths.

use serde::{Deserialize, Serialize};

use crate::dnorm::LevelFunction;
use crate::error::{invalid, Result};
use crate::generators::{generator_moments, GeneratorSpec};
use crate::msp::{simulate_map, MspSampler};
use crate::paths::{extrema, function_hits, hits_level, Interval, TimeGrid};
use crate::rng;
use crate::stats::Estimate;

/// Default lower end of the level range for hitting-curve integrals.
pub const DEFAULT_X_MIN: f64 = -12.0;

/// `count` strictly negative levels from `-0.05` down to `x_min`, equally
/// spaced in `log(1 - x)` so they crowd near 0 where `h` changes fastest.
/// Returned in decreasing order.
pub fn default_levels(count: usize, x_min: f64) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(invalid("need at least 2 levels"));
    }
    if !(x_min < -0.05) {
        return Err(invalid("x_min must be below -0.05"));
    }
    let lo = 0.05f64.ln_1p();
    let hi = (-x_min).ln_1p();
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                x_min
            } else {
                -(lo + step * k as f64).exp_m1()
            }
        })
        .collect())
}

fn require_negative(x: f64) -> Result<()> {
    if x < 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "level must be negative, got {x} (h(0) = 0 by convention)"
        )))
    }
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("replication count n must be at least 1"));
    }
    Ok(())
}

fn count_true(flags: &[bool]) -> usize {
    flags.iter().filter(|&&b| b).count()
}

/// `h(x)` restricted to `I`: the frequency of paths attaining `x` in `I`,
/// with a Wilson interval (rule of three when no path hits).
pub fn hitting_prob(
    spec: &GeneratorSpec,
    x: f64,
    interval: Interval,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    require_negative(x)?;
    require_n(n)?;
    let range = grid.interval_range(interval)?;
    let sampler = MspSampler::new(spec, grid)?;
    let hits = simulate_map(&sampler, n, seed, |eta| hits_level(&eta[range.clone()], x))?;
    Ok(Estimate::proportion(count_true(&hits), n, seed))
}

/// Frequency of paths meeting the function `f` somewhere (`η_t = f(t)` for
/// some `t`), on the grid of `f`.
pub fn meets_function_prob(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    require_n(n)?;
    let sampler = MspSampler::new(spec, f.grid())?;
    let hits = simulate_map(&sampler, n, seed, |eta| function_hits(eta, f.values()).hit)?;
    Ok(Estimate::proportion(count_true(&hits), n, seed))
}

/// Estimated hitting probabilities over a set of levels, with the upper
/// bound `e^{x·m̃} - e^{x·m}` at each level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingCurve {
    /// Strictly negative, decreasing.
    pub levels: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub upper_bounds: Vec<f64>,
    /// The `(m, m̃)` pair the bounds were computed from.
    pub m: f64,
    pub m_tilde: f64,
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(invalid("no levels given"));
    }
    for &x in levels {
        require_negative(x)?;
    }
    if levels.windows(2).any(|w| w[0] <= w[1]) {
        return Err(invalid("levels must be strictly decreasing"));
    }
    Ok(())
}

/// Hitting probabilities at every level on shared draws. When `moments` is
/// `None`, `(m, m̃)` are estimated from `n` generator paths under the same
/// seed.
pub fn hitting_curve(
    spec: &GeneratorSpec,
    levels: &[f64],
    interval: Interval,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
    moments: Option<(f64, f64)>,
) -> Result<HittingCurve> {
    check_levels(levels)?;
    require_n(n)?;
    let range = grid.interval_range(interval)?;
    let sampler = MspSampler::new(spec, grid)?;
    let ext = simulate_map(&sampler, n, seed, |eta| extrema(&eta[range.clone()]))?;
    let estimates = levels
        .iter()
        .map(|&x| {
            let k = ext.iter().filter(|(lo, hi)| *lo <= x && x <= *hi).count();
            Estimate::proportion(k, n, seed)
        })
        .collect();
    let (m, m_tilde) = match moments {
        Some(pair) => pair,
        None => {
            let gm = generator_moments(spec, grid, n, seed)?;
            (gm.m_hat.value, gm.m_tilde_hat.value.min(gm.m_hat.value))
        }
    };
    let upper_bounds = levels
        .iter()
        .map(|&x| hitting_bound(m, m_tilde, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(HittingCurve {
        levels: levels.to_vec(),
        estimates,
        upper_bounds,
        m,
        m_tilde,
    })
}

/// Trapezoid integral of a hitting curve over `[min level, 0]` (with
/// `h(0) = 0` appended) and a bound on the neglected tail `∫_{-∞}^{x_min} h`.
///
/// The tail bound is `e^{x_min·m̃}/m̃` from `h(x) <= e^{x·m̃}`; it is infinite
/// when `m̃ = 0`.
pub fn hitting_integral(curve: &HittingCurve, m_tilde: f64) -> Result<(f64, f64)> {
    if curve.levels.len() < 3 {
        return Err(invalid("hitting_integral needs at least 3 levels"));
    }
    if curve.levels.len() != curve.estimates.len() {
        return Err(invalid("levels and estimates differ in length"));
    }
    check_levels(&curve.levels)?;
    if !(m_tilde >= 0.0) {
        return Err(invalid("m_tilde must be nonnegative"));
    }
    let values: Vec<f64> = curve.estimates.iter().map(|e| e.value).collect();
    let integral = trapezoid(&curve.levels, &values);
    let x_min = *curve.levels.last().unwrap();
    let tail = if m_tilde > 0.0 {
        (x_min * m_tilde).exp() / m_tilde
    } else {
        f64::INFINITY
    };
    Ok((integral, tail))
}

/// Trapezoid rule over decreasing `levels` with the point `(0, 0)` added.
pub fn trapezoid(levels: &[f64], values: &[f64]) -> f64 {
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    for (&x, &h) in levels.iter().zip(values) {
        area += 0.5 * (prev.1 + h) * (prev.0 - x);
        prev = (x, h);
    }
    area
}

/// `max(e^{x·m̃} - e^{x·m}, 0)`, the upper bound on `h(x)`.
pub fn hitting_bound(m: f64, m_tilde: f64, x: f64) -> Result<f64> {
    if m < m_tilde {
        return Err(invalid(format!(
            "m = {m} must not be below m_tilde = {m_tilde}"
        )));
    }
    if m_tilde < 0.0 {
        return Err(invalid("m_tilde must be nonnegative"));
    }
    if x > 0.0 {
        return Err(invalid("level must be nonpositive"));
    }
    Ok(((x * m_tilde).exp() - (x * m).exp()).max(0.0))
}

/// Times and level of a multi-hit event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiHitQuery {
    /// Hits in `[0, t0]` and in `[t0, 1]`.
    Split { x0: f64, t0: f64 },
    /// `η_{t_lo} <= x0 < η_{t_mid}`, `η_{t_hi} <= x0`.
    Triple {
        x0: f64,
        t_lo: f64,
        t_mid: f64,
        t_hi: f64,
    },
}

impl MultiHitQuery {
    pub fn x0(&self) -> f64 {
        match *self {
            MultiHitQuery::Split { x0, .. } | MultiHitQuery::Triple { x0, .. } => x0,
        }
    }

    /// Grid indices of the query times, after checking orderings.
    fn indices(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        require_negative(self.x0())?;
        match *self {
            MultiHitQuery::Split { t0, .. } => {
                if !(t0 > 0.0 && t0 < 1.0) {
                    return Err(invalid(format!("split time {t0} must lie in (0, 1)")));
                }
                Ok(vec![grid.require_index(t0, "split time")?])
            }
            MultiHitQuery::Triple {
                t_lo, t_mid, t_hi, ..
            } => {
                if !(0.0 <= t_lo && t_lo < t_mid && t_mid < t_hi && t_hi <= 1.0) {
                    return Err(invalid(format!(
                        "times must satisfy 0 <= {t_lo} < {t_mid} < {t_hi} <= 1"
                    )));
                }
                Ok(vec![
                    grid.require_index(t_lo, "time")?,
                    grid.require_index(t_mid, "time")?,
                    grid.require_index(t_hi, "time")?,
                ])
            }
        }
    }
}

/// The down-up-down event at three grid indices.
#[inline]
pub fn down_up_down(eta: &[f64], lo: usize, mid: usize, hi: usize, x0: f64) -> bool {
    eta[lo] <= x0 && eta[mid] > x0 && eta[hi] <= x0
}

/// The two-hit event with split index `mid` (hits in `[0, t0]` and `[t0, 1]`).
#[inline]
pub fn two_hit(eta: &[f64], mid: usize, x0: f64) -> bool {
    hits_level(&eta[..=mid], x0) && hits_level(&eta[mid..], x0)
}

/// `P(η_{t'} <= x0, η_{t0} > x0, η_{t''} <= x0)`.
pub fn down_up_down_prob(
    spec: &GeneratorSpec,
    query: &MultiHitQuery,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    let idx = match query {
        MultiHitQuery::Triple { .. } => query.indices(grid)?,
        _ => return Err(invalid("down_up_down_prob needs a triple query")),
    };
    require_n(n)?;
    let x0 = query.x0();
    let sampler = MspSampler::new(spec, grid)?;
    let hits = simulate_map(&sampler, n, seed, |eta| {
        down_up_down(eta, idx[0], idx[1], idx[2], x0)
    })?;
    Ok(Estimate::proportion(count_true(&hits), n, seed))
}

/// Probability of hitting `x0` both in `[0, t0]` and in `[t0, 1]`.
pub fn two_hit_prob(
    spec: &GeneratorSpec,
    query: &MultiHitQuery,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    let mid = match query {
        MultiHitQuery::Split { .. } => query.indices(grid)?[0],
        _ => return Err(invalid("two_hit_prob needs a split query")),
    };
    require_n(n)?;
    let x0 = query.x0();
    let sampler = MspSampler::new(spec, grid)?;
    let hits = simulate_map(&sampler, n, seed, |eta| two_hit(eta, mid, x0))?;
    Ok(Estimate::proportion(count_true(&hits), n, seed))
}

/// Checks that intervals do not overlap. Sharing an endpoint is allowed.
pub fn check_disjoint(intervals: &[Interval]) -> Result<()> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for w in sorted.windows(2) {
        if w[1].lo < w[0].hi {
            return Err(invalid(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                w[0].lo, w[0].hi, w[1].lo, w[1].hi
            )));
        }
    }
    Ok(())
}

/// Probability that `x0` is hit in every one of the given intervals
/// (pairwise non-overlapping; `k` is their number).
pub fn multi_hit_prob(
    spec: &GeneratorSpec,
    x0: f64,
    intervals: &[Interval],
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    require_negative(x0)?;
    require_n(n)?;
    if intervals.is_empty() {
        return Err(invalid("need at least one interval"));
    }
    check_disjoint(intervals)?;
    let ranges = intervals
        .iter()
        .map(|&i| grid.interval_range(i))
        .collect::<Result<Vec<_>>>()?;
    let sampler = MspSampler::new(spec, grid)?;
    let hits = simulate_map(&sampler, n, seed, |eta| {
        ranges.iter().all(|r| hits_level(&eta[r.clone()], x0))
    })?;
    Ok(Estimate::proportion(count_true(&hits), n, seed))
}

/// The five equivalent conditions on `[t', t'']`, estimated on shared draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceBundle {
    /// Down-up-down probability at each `(x0, t_mid)` pair, in
    /// `x0`-major order.
    pub down_up_down: Vec<Estimate>,
    /// Frequency of `sup_{[t',t'']} Z = max(Z_{t'}, Z_{t''})`.
    pub sup_equals_max: Estimate,
    /// `E sup_{[t',t'']} Z - E max(Z_{t'}, Z_{t''})` (paired).
    pub sup_minus_max: Estimate,
    /// Per `x0`: `P(η <= x0 on [t',t'']) - P(η_{t'} <= x0, η_{t''} <= x0)`.
    pub cdf_gap: Vec<Estimate>,
    /// Per `x0`: `P(η <= x0 on [t',t'']) - P(η_{t'} > x0, η_{t''} > x0)
    /// - (2e^{x0} - 1)`.
    pub survivor_residual: Vec<Estimate>,
}

/// Estimates all quantities of the equivalence bundle for the interval
/// `[t_lo, t_hi]`, levels `x0s` and interior times `mids`.
#[allow(clippy::too_many_arguments)]
pub fn equivalence_bundle(
    spec: &GeneratorSpec,
    t_lo: f64,
    t_hi: f64,
    x0s: &[f64],
    mids: &[f64],
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<EquivalenceBundle> {
    require_n(n)?;
    for &x in x0s {
        require_negative(x)?;
    }
    let interval = Interval::new(t_lo, t_hi)?;
    let range = grid.interval_range(interval)?;
    let (lo, hi) = (range.start, range.end - 1);
    let mid_idx = mids
        .iter()
        .map(|&t| {
            let j = grid.require_index(t, "interior time")?;
            if j <= lo || j >= hi {
                return Err(invalid(format!("{t} is not interior to [{t_lo}, {t_hi}]")));
            }
            Ok(j)
        })
        .collect::<Result<Vec<_>>>()?;

    // Generator side.
    let gen = crate::generators::PreparedGenerator::new(spec, grid)?;
    let z_pairs = rng::replicate(n, seed, |s| {
        let z = gen.sample_values(s);
        let sup = extrema(&z[range.clone()]).1;
        (sup, z[lo].max(z[hi]))
    });
    let equal: Vec<bool> = z_pairs
        .iter()
        .map(|(s, m)| (s - m).abs() <= crate::generators::SUP_MAX_TOL)
        .collect();
    let diffs: Vec<f64> = z_pairs.iter().map(|(s, m)| s - m).collect();

    // Process side: per path and x0, bit 0 = all below on [t',t''],
    // bit 1 = both ends below, bit 2 = both ends above, bits 3.. = one
    // down-up-down flag per interior time.
    let width = 3 + mid_idx.len();
    if width * x0s.len() > 64 {
        return Err(invalid("too many (x0, interior time) combinations"));
    }
    let sampler = MspSampler::new(spec, grid)?;
    let masks = simulate_map(&sampler, n, seed, |eta| {
        let top = extrema(&eta[range.clone()]).1;
        let mut mask = 0u64;
        for (k, &x) in x0s.iter().enumerate() {
            let mut bits = u64::from(top <= x)
                | u64::from(eta[lo] <= x && eta[hi] <= x) << 1
                | u64::from(eta[lo] > x && eta[hi] > x) << 2;
            for (m, &j) in mid_idx.iter().enumerate() {
                bits |= u64::from(down_up_down(eta, lo, j, hi, x)) << (3 + m);
            }
            mask |= bits << (k * width);
        }
        mask
    })?;
    let bit = |mask: u64, k: usize, b: usize| (mask >> (k * width + b)) & 1 == 1;
    let indicator = |b: bool| f64::from(u8::from(b));

    let mut down_up_down_est = Vec::new();
    let mut cdf_gap = Vec::new();
    let mut survivor_residual = Vec::new();
    for (k, &x) in x0s.iter().enumerate() {
        for m in 0..mid_idx.len() {
            let c = masks.iter().filter(|&&r| bit(r, k, 3 + m)).count();
            down_up_down_est.push(Estimate::proportion(c, n, seed));
        }
        let gap: Vec<f64> = masks
            .iter()
            .map(|&r| indicator(bit(r, k, 0)) - indicator(bit(r, k, 1)))
            .collect();
        cdf_gap.push(Estimate::mean(&gap, seed));
        let target = 2.0 * x.exp() - 1.0;
        let resid: Vec<f64> = masks
            .iter()
            .map(|&r| indicator(bit(r, k, 0)) - indicator(bit(r, k, 2)))
            .collect();
        let mut e = Estimate::mean(&resid, seed);
        e.value -= target;
        e.ci_lo -= target;
        e.ci_hi -= target;
        survivor_residual.push(e);
    }

    Ok(EquivalenceBundle {
        down_up_down: down_up_down_est,
        sup_equals_max: Estimate::proportion(count_true(&equal), n, seed),
        sup_minus_max: Estimate::mean(&diffs, seed),
        cdf_gap,
        survivor_residual,
    })
}

/// η-paths held in memory for per-draw comparisons (property checks).
#[derive(Debug, Clone)]
pub struct EtaCorpus {
    grid: TimeGrid,
    paths: Vec<Vec<f64>>,
}

impl EtaCorpus {
    /// Path `i` equals the one every streaming estimator draws for replica
    /// `i` under `seed`.
    pub fn new(spec: &GeneratorSpec, grid: &TimeGrid, n: usize, seed: u64) -> Result<Self> {
        let sampler = MspSampler::new(spec, grid)?;
        Ok(EtaCorpus {
            grid: grid.clone(),
            paths: simulate_map(&sampler, n, seed, |eta| eta.to_vec())?,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// Per-path hit indicators for level `x` on `interval`.
    pub fn hits(&self, x: f64, interval: Interval) -> Result<Vec<bool>> {
        let r = self.grid.interval_range(interval)?;
        Ok(self
            .paths
            .iter()
            .map(|p| hits_level(&p[r.clone()], x))
            .collect())
    }

    pub fn two_hits(&self, query: &MultiHitQuery) -> Result<Vec<bool>> {
        let mid = match query {
            MultiHitQuery::Split { .. } => query.indices(&self.grid)?[0],
            _ => return Err(invalid("two_hits needs a split query")),
        };
        Ok(self
            .paths
            .iter()
            .map(|p| two_hit(p, mid, query.x0()))
            .collect())
    }

    pub fn down_up_downs(&self, query: &MultiHitQuery) -> Result<Vec<bool>> {
        let idx = match query {
            MultiHitQuery::Triple { .. } => query.indices(&self.grid)?,
            _ => return Err(invalid("down_up_downs needs a triple query")),
        };
        Ok(self
            .paths
            .iter()
            .map(|p| down_up_down(p, idx[0], idx[1], idx[2], query.x0()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::make_grid;
    use proptest::prelude::*;

    fn h_two_branch(x: f64) -> f64 {
        (1.0 - x.exp() - x) * x.exp()
    }

    #[test]
    fn hitting_bound_examples() {
        assert_eq!(hitting_bound(1.0, 1.0, -1.0).unwrap(), 0.0);
        let b = hitting_bound(2.0, 0.0, -1.0).unwrap();
        assert!((b - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        let b = hitting_bound(1.125, 0.875, -1.0).unwrap();
        assert!((b - ((-0.875f64).exp() - (-1.125f64).exp())).abs() < 1e-15);
        assert!((b - 0.0922).abs() < 1e-4, "{b}");
        assert!(hitting_bound(0.9, 1.0, -1.0).is_err());
        assert_eq!(hitting_bound(1.5, 0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn default_levels_shape() {
        let l = default_levels(25, -12.0).unwrap();
        assert_eq!(l.len(), 25);
        assert!((l[0] + 0.05).abs() < 1e-12);
        assert_eq!(l[24], -12.0);
        assert!(l.windows(2).all(|w| w[0] > w[1]));
        assert!(default_levels(1, -12.0).is_err());
    }

    #[test]
    fn trapezoid_of_exact_two_branch_curve() {
        // The quadrature alone (exact h values) lands within 0.002 of 3/2.
        let l = default_levels(25, -12.0).unwrap();
        let h: Vec<f64> = l.iter().map(|&x| h_two_branch(x)).collect();
        let area = trapezoid(&l, &h);
        assert!((area - 1.5).abs() < 0.002, "{area}");
    }

    #[test]
    fn integral_rejects_bad_curves() {
        let est = Estimate::proportion(1, 2, 0);
        let curve = HittingCurve {
            levels: vec![-1.0, -2.0],
            estimates: vec![est; 2],
            upper_bounds: vec![0.0; 2],
            m: 1.0,
            m_tilde: 1.0,
        };
        assert!(hitting_integral(&curve, 0.5).is_err());
        let curve = HittingCurve {
            levels: vec![-1.0, -3.0, -2.0],
            estimates: vec![est; 3],
            upper_bounds: vec![0.0; 3],
            m: 1.0,
            m_tilde: 1.0,
        };
        assert!(hitting_integral(&curve, 0.5).is_err());
        let curve = HittingCurve {
            levels: vec![-1.0, -2.0, -3.0],
            ..curve
        };
        let (_, tail) = hitting_integral(&curve, 0.0).unwrap();
        assert!(tail.is_infinite());
        let (area, tail) = hitting_integral(&curve, 0.5).unwrap();
        assert!((area - 1.25).abs() < 1e-15);
        assert!((tail - 2.0 * (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn nonnegative_levels_are_rejected() {
        let g = make_grid(11).unwrap();
        let spec = GeneratorSpec::two_branch();
        assert!(hitting_prob(&spec, 0.0, Interval::unit(), &g, 10, 0).is_err());
        assert!(hitting_prob(&spec, 0.5, Interval::unit(), &g, 10, 0).is_err());
        assert!(hitting_curve(&spec, &[-1.0, -0.5], Interval::unit(), &g, 10, 0, None).is_err());
    }

    #[test]
    fn complete_dependence_never_hits() {
        let g = make_grid(1001).unwrap();
        let spec = GeneratorSpec::complete_dependence();
        let e = hitting_prob(&spec, -1.0, Interval::unit(), &g, 20_000, 1).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.ci_hi <= 3.0 / 20_000.0);
        let q = MultiHitQuery::Triple {
            x0: -1.0,
            t_lo: 0.1,
            t_mid: 0.5,
            t_hi: 0.9,
        };
        assert_eq!(
            down_up_down_prob(&spec, &q, &g, 2_000, 1).unwrap().value,
            0.0
        );
        let q = MultiHitQuery::Split { x0: -1.0, t0: 0.3 };
        assert_eq!(two_hit_prob(&spec, &q, &g, 2_000, 1).unwrap().value, 0.0);
        let e = multi_hit_prob(&spec, -1.0, &[Interval::unit()], &g, 2_000, 1).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn two_branch_hitting_matches_closed_form() {
        let g = make_grid(1001).unwrap();
        let e = hitting_prob(
            &GeneratorSpec::two_branch(),
            -1.0,
            Interval::unit(),
            &g,
            50_000,
            2,
        )
        .unwrap();
        assert!(e.within(h_two_branch(-1.0), 3.0, 0.005), "{e:?}");
    }

    #[test]
    fn piecewise_constant_stretch_is_never_hit() {
        let g = make_grid(1001).unwrap();
        let e = hitting_prob(
            &GeneratorSpec::piecewise_default(),
            -1.0,
            Interval::new(0.25, 0.75).unwrap(),
            &g,
            20_000,
            3,
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn multi_hit_interval_handling() {
        let g = make_grid(101).unwrap();
        let spec = GeneratorSpec::two_branch();
        let overlapping = [
            Interval::new(0.0, 0.5).unwrap(),
            Interval::new(0.4, 1.0).unwrap(),
        ];
        assert!(multi_hit_prob(&spec, -1.0, &overlapping, &g, 10, 0).is_err());
        let halves = [
            Interval::new(0.0, 0.5).unwrap(),
            Interval::new(0.5, 1.0).unwrap(),
        ];
        let a = multi_hit_prob(&spec, -1.0, &halves, &g, 5_000, 4).unwrap();
        let b = two_hit_prob(
            &spec,
            &MultiHitQuery::Split { x0: -1.0, t0: 0.5 },
            &g,
            5_000,
            4,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn query_validation() {
        let g = make_grid(11).unwrap();
        let spec = GeneratorSpec::two_branch();
        let bad = MultiHitQuery::Triple {
            x0: -1.0,
            t_lo: 0.5,
            t_mid: 0.2,
            t_hi: 0.9,
        };
        assert!(down_up_down_prob(&spec, &bad, &g, 10, 0).is_err());
        let split = MultiHitQuery::Split { x0: -1.0, t0: 1.0 };
        assert!(two_hit_prob(&spec, &split, &g, 10, 0).is_err());
        let split = MultiHitQuery::Split { x0: -1.0, t0: 0.5 };
        assert!(down_up_down_prob(&spec, &split, &g, 10, 0).is_err());
    }

    #[test]
    fn meets_sloped_function_under_complete_dependence() {
        let g = make_grid(1001).unwrap();
        let f = LevelFunction::piecewise_linear(vec![(0.0, -1.0), (1.0, -2.0)], &g).unwrap();
        let e = meets_function_prob(&GeneratorSpec::complete_dependence(), &f, 50_000, 5).unwrap();
        let exact = (-1.0f64).exp() - (-2.0f64).exp();
        assert!(e.within(exact, 3.0, 0.0), "{e:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn shared_draw_event_inclusions(spec_idx in 0usize..5, x in -3.0f64..-0.1, t0 in 1usize..20) {
            let g = make_grid(21).unwrap();
            let spec = GeneratorSpec::catalogue()[spec_idx];
            let corpus = EtaCorpus::new(&spec, &g, 300, 13).unwrap();
            let p = g.points();
            let inner = corpus.hits(x, Interval::new(p[5], p[15]).unwrap()).unwrap();
            let outer = corpus.hits(x, Interval::unit()).unwrap();
            prop_assert!(inner.iter().zip(&outer).all(|(a, b)| !a || *b));

            let split = MultiHitQuery::Split { x0: x, t0: p[t0] };
            let triple = MultiHitQuery::Triple { x0: x, t_lo: 0.0, t_mid: p[t0], t_hi: 1.0 };
            let two = corpus.two_hits(&split).unwrap();
            let dud = corpus.down_up_downs(&triple).unwrap();
            prop_assert!(dud.iter().zip(&two).all(|(d, t)| !d || *t));

            // P(hit) = P(min <= x) - P(max < x), per draw.
            for path in corpus.paths() {
                let (lo, hi) = extrema(path);
                let hit = hits_level(path, x);
                let some_below = lo <= x;
                let all_below = hi < x;
                prop_assert_eq!(hit, some_below && !all_below);
            }
        }
    }
}
