//! D-norm functionals `‖f‖_D = E sup_t |f(t)| Z_t` of nonpositive level
//! functions, estimated from generator paths.
//!
//! All estimators draw generator path `i` from substream `(seed, i)`, so two
//! calls with the same seed evaluate different functions on the same paths
//! (shared draws) and per-draw inequalities carry over to the estimates
//! exactly. Use different seeds for independent estimates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::generators::{GeneratorSpec, PreparedGenerator};
use crate::paths::{extrema, Interval, TimeGrid};
use crate::rng;
use crate::stats::Estimate;

/// Parametric description of a level function, as read from JSON
/// (`{"shape": "constant", "level": -1}` and so on).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum LevelShape {
    /// `f ≡ level`.
    Constant { level: f64 },
    /// `f = offset + level·1_[lo, hi]`; endpoints must be grid points.
    IndicatorStep {
        lo: f64,
        hi: f64,
        level: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Linear interpolation through `(t, value)` breakpoints spanning [0, 1].
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
}

/// A nonpositive function sampled on a grid, not identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFunction {
    grid: TimeGrid,
    values: Vec<f64>,
    shape: LevelShape,
}

impl LevelFunction {
    pub fn new(shape: LevelShape, grid: &TimeGrid) -> Result<Self> {
        let ts = grid.points();
        let values: Vec<f64> = match &shape {
            LevelShape::Constant { level } => vec![*level; ts.len()],
            LevelShape::IndicatorStep {
                lo,
                hi,
                level,
                offset,
            } => {
                let range = grid.interval_range(Interval::new(*lo, *hi)?)?;
                (0..ts.len())
                    .map(|j| {
                        if range.contains(&j) {
                            offset + level
                        } else {
                            *offset
                        }
                    })
                    .collect()
            }
            LevelShape::PiecewiseLinear { breakpoints } => interpolate(breakpoints, ts)?,
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v > 0.0) {
            return Err(invalid(format!(
                "level function must be finite and nonpositive, found {v}"
            )));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(invalid("level function must be negative somewhere"));
        }
        Ok(LevelFunction {
            grid: grid.clone(),
            values,
            shape,
        })
    }

    pub fn constant(level: f64, grid: &TimeGrid) -> Result<Self> {
        Self::new(LevelShape::Constant { level }, grid)
    }

    /// `offset + level·1_I`.
    pub fn indicator(interval: Interval, level: f64, offset: f64, grid: &TimeGrid) -> Result<Self> {
        Self::new(
            LevelShape::IndicatorStep {
                lo: interval.lo,
                hi: interval.hi,
                level,
                offset,
            },
            grid,
        )
    }

    pub fn piecewise_linear(breakpoints: Vec<(f64, f64)>, grid: &TimeGrid) -> Result<Self> {
        Self::new(LevelShape::PiecewiseLinear { breakpoints }, grid)
    }

    pub fn from_json(text: &str, grid: &TimeGrid) -> Result<Self> {
        let shape: LevelShape = serde_json::from_str(text)?;
        Self::new(shape, grid)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &LevelShape {
        &self.shape
    }

    /// `max_t |f(t)|` over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `c·f` for `c > 0`. The shape tag is kept; only the values change.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        Ok(LevelFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            shape: self.shape.clone(),
        })
    }
}

fn interpolate(points: &[(f64, f64)], ts: &[f64]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(invalid("piecewise_linear needs at least 2 breakpoints"));
    }
    if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
        return Err(invalid("piecewise_linear breakpoints must span [0, 1]"));
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(invalid("piecewise_linear breakpoint times must increase"));
    }
    Ok(ts
        .iter()
        .map(|&t| {
            let k = points
                .partition_point(|p| p.0 <= t)
                .clamp(1, points.len() - 1);
            let (t0, v0) = points[k - 1];
            let (t1, v1) = points[k];
            let w = (t - t0) / (t1 - t0);
            v0 + w * (v1 - v0)
        })
        .collect())
}

/// D-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DNormEstimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl From<Estimate> for DNormEstimate {
    fn from(e: Estimate) -> Self {
        DNormEstimate {
            value: e.value,
            se: e.se,
            n: e.n,
        }
    }
}

/// Generator paths kept in memory for per-draw comparisons. Path `i` is the
/// same one every streaming estimator uses for replica `i` under this seed.
#[derive(Debug, Clone)]
pub struct GeneratorCorpus {
    grid: TimeGrid,
    paths: Vec<Vec<f64>>,
    seed: u64,
}

impl GeneratorCorpus {
    pub fn new(spec: &GeneratorSpec, grid: &TimeGrid, n: usize, seed: u64) -> Result<Self> {
        let g = PreparedGenerator::new(spec, grid)?;
        Ok(GeneratorCorpus {
            grid: grid.clone(),
            paths: rng::replicate(n, seed, |s| g.sample_values(s)),
            seed,
        })
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// `sup_t |f(t)| Z_t` for every stored path.
    pub fn per_draw_dnorm(&self, f: &LevelFunction) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        Ok(self
            .paths
            .iter()
            .map(|z| weighted_sup(f.values(), z))
            .collect())
    }

    /// `sup_{t∈I} Z_t` for every stored path.
    pub fn per_draw_indicator(&self, interval: Interval) -> Result<Vec<f64>> {
        let r = self.grid.interval_range(interval)?;
        Ok(self
            .paths
            .iter()
            .map(|z| extrema(&z[r.clone()]).1)
            .collect())
    }

    pub fn dnorm(&self, f: &LevelFunction) -> Result<DNormEstimate> {
        Ok(Estimate::mean(&self.per_draw_dnorm(f)?, self.seed).into())
    }

    fn check_grid(&self, f: &LevelFunction) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(invalid("level function lives on a different grid"));
        }
        Ok(())
    }
}

#[inline]
fn weighted_sup(f: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(z)
        .map(|(a, b)| a.abs() * b)
        .fold(0.0, f64::max)
}

#[inline]
fn weighted_inf(f: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(z)
        .map(|(a, b)| a.abs() * b)
        .fold(f64::INFINITY, f64::min)
}

fn per_draw<F>(spec: &GeneratorSpec, grid: &TimeGrid, n: usize, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let g = PreparedGenerator::new(spec, grid)?;
    Ok(rng::replicate(n, seed, |s| f(&g.sample_values(s))))
}

/// Monte Carlo estimate of `‖f‖_D` over `n` generator paths.
pub fn dnorm_estimate(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<DNormEstimate> {
    if n < 2 {
        return Err(invalid("dnorm_estimate needs n >= 2"));
    }
    let vals = per_draw(spec, f.grid(), n, seed, |z| weighted_sup(f.values(), z))?;
    Ok(Estimate::mean(&vals, seed).into())
}

/// Estimate of `‖1_I‖_D = E sup_{t∈I} Z_t`.
pub fn dnorm_indicator(
    spec: &GeneratorSpec,
    interval: Interval,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<DNormEstimate> {
    if n < 2 {
        return Err(invalid("dnorm_indicator needs n >= 2"));
    }
    let r = grid.interval_range(interval)?;
    let vals = per_draw(spec, grid, n, seed, |z| extrema(&z[r.clone()]).1)?;
    Ok(Estimate::mean(&vals, seed).into())
}

/// Estimate of `E inf_t |f(t)| Z_t`.
pub fn inf_functional(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(invalid("inf_functional needs n >= 1"));
    }
    let vals = per_draw(spec, f.grid(), n, seed, |z| weighted_inf(f.values(), z))?;
    Ok(Estimate::mean(&vals, seed))
}

/// Lower bound `1 - exp(-E inf_t |f(t)| Z_t)` on `P(η_t > f(t) for all t)`.
pub fn survivor_lower_bound(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let e = inf_functional(spec, f, n, seed)?;
    Ok(1.0 - (-e.value).exp())
}

/// Outcome of the complete-dependence test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TakahashiReport {
    /// Every probe had `|‖f‖_D - ‖f‖_∞| <= 3·se`.
    pub complete_dependence: bool,
    pub m_hat: DNormEstimate,
    /// `(sup norm, D-norm estimate)` per probe.
    pub probes: Vec<(f64, DNormEstimate)>,
}

/// Tests `‖·‖_D = ‖·‖_∞` on at least three probe functions (shared draws).
pub fn takahashi_check(
    spec: &GeneratorSpec,
    probes: &[LevelFunction],
    n: usize,
    seed: u64,
) -> Result<TakahashiReport> {
    if probes.len() < 3 {
        return Err(invalid("takahashi_check needs at least 3 probe functions"));
    }
    let grid = probes[0].grid();
    let m_hat = dnorm_indicator(spec, Interval::unit(), grid, n, seed)?;
    let probes = probes
        .iter()
        .map(|f| Ok((f.sup_norm(), dnorm_estimate(spec, f, n, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    let complete_dependence = probes
        .iter()
        .all(|(sup, d)| (d.value - sup).abs() <= 3.0 * d.se);
    Ok(TakahashiReport {
        complete_dependence,
        m_hat,
        probes,
    })
}
