//! Exact simulation of standard max-stable processes on a grid.
//!
//! Spectral construction: with unit-rate Poisson arrivals `Γ_1 < Γ_2 < …`
//! and i.i.d. generator paths `Z_i`, the process `ξ(t) = max_i Z_i(t)/Γ_i`
//! is simple max-stable, and `η = -1/ξ` has standard negative exponential
//! margins `P(η_t <= x) = e^x`.
//!
//! Arrivals are consumed until `C/Γ_i < min_t ξ(t)`, where `C` bounds
//! `sup_t Z_t` almost surely. No later arrival can then change any grid
//! value, so the returned path is exact on the grid.
//!
//! Per replica the stream is consumed as: one uniform for the exponential
//! spacing of `Γ_i`, then the generator's draws for `Z_i`, repeated.

use crate::dnorm::LevelFunction;
use crate::error::{invalid, Error, Result};
use crate::generators::{GeneratorSpec, PreparedGenerator};
use crate::paths::{SamplePath, TimeGrid};
use crate::rng::{self, Stream};
use crate::stats::{self, Estimate};

/// Arrival budget per path before giving up with [`Error::BoundTooLoose`].
pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

/// Relative slack on `C` in the stopping rule, absorbing rounding in the
/// tabulated generator paths.
const BOUND_SLACK: f64 = 1.0 + 1e-9;

/// State of the spectral construction for one path.
#[derive(Debug, Clone)]
pub struct SpectralState {
    /// `Γ_1 < Γ_2 < …` consumed so far.
    pub arrivals: Vec<f64>,
    /// Pointwise `max_i Z_i(t)/Γ_i` over the consumed arrivals.
    pub running_max: Vec<f64>,
    /// The sup bound `C`.
    pub bound: f64,
}

/// Samples η-paths for one generator on one grid.
#[derive(Debug, Clone)]
pub struct MspSampler {
    generator: PreparedGenerator,
    max_points: usize,
}

impl MspSampler {
    pub fn new(spec: &GeneratorSpec, grid: &TimeGrid) -> Result<Self> {
        Ok(MspSampler {
            generator: PreparedGenerator::new(spec, grid)?,
            max_points: DEFAULT_MAX_POINTS,
        })
    }

    pub fn with_max_points(mut self, max_points: usize) -> Result<Self> {
        if max_points == 0 {
            return Err(invalid("max_points must be at least 1"));
        }
        self.max_points = max_points;
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.generator.grid()
    }

    pub fn generator(&self) -> &PreparedGenerator {
        &self.generator
    }

    /// Runs the construction up to the stopping rule. Returns the state and
    /// the first unused arrival `Γ`, which is already drawn from the stream.
    fn run(&self, stream: &mut Stream, keep_arrivals: bool) -> Result<(SpectralState, f64)> {
        let g = &self.generator;
        let bound = g.bound();
        let stop_bound = bound * BOUND_SLACK;
        let mut xi = vec![0.0; g.grid().len()];
        let mut scratch = vec![0.0; xi.len()];
        let mut arrivals = Vec::new();
        let mut gamma = 0.0;
        let mut min_xi = 0.0;
        let mut used = 0;
        loop {
            gamma += rng::std_exponential(stream);
            if stop_bound / gamma < min_xi {
                break;
            }
            if used == self.max_points {
                return Err(Error::BoundTooLoose {
                    arrivals: used,
                    deficit: stop_bound / gamma - min_xi,
                });
            }
            let draw = g.draw(stream);
            used += 1;
            if keep_arrivals {
                arrivals.push(gamma);
            }
            g.fill(&draw, &mut scratch);
            let inv = 1.0 / gamma;
            let mut m = f64::INFINITY;
            for (x, z) in xi.iter_mut().zip(&scratch) {
                let v = z * inv;
                if v > *x {
                    *x = v;
                }
                m = m.min(*x);
            }
            min_xi = m;
        }
        Ok((
            SpectralState {
                arrivals,
                running_max: xi,
                bound,
            },
            gamma,
        ))
    }

    /// One η-path as raw grid values (all strictly negative).
    pub fn sample_values(&self, stream: &mut Stream) -> Result<Vec<f64>> {
        let (state, _) = self.run(stream, false)?;
        Ok(state.running_max.into_iter().map(|x| -1.0 / x).collect())
    }

    pub fn sample(&self, stream: &mut Stream) -> Result<SamplePath> {
        SamplePath::new(self.grid().clone(), self.sample_values(stream)?)
    }

    /// Spectral state at the moment the stopping rule fires.
    pub fn spectral_state(&self, stream: &mut Stream) -> Result<SpectralState> {
        Ok(self.run(stream, true)?.0)
    }

    /// Samples a path, then keeps consuming `extra` further arrivals and
    /// reports whether any grid value changed (bitwise). `false` means the
    /// stopping rule was exact for this path.
    pub fn extra_arrivals_change_path(&self, stream: &mut Stream, extra: usize) -> Result<bool> {
        let g = &self.generator;
        let (state, mut gamma) = self.run(stream, false)?;
        let before = state.running_max;
        let mut after = before.clone();
        for k in 0..extra {
            if k > 0 {
                gamma += rng::std_exponential(stream);
            }
            let draw = g.draw(stream);
            let inv = 1.0 / gamma;
            for (j, x) in after.iter_mut().enumerate() {
                let v = g.value(&draw, j) * inv;
                if v > *x {
                    *x = v;
                }
            }
        }
        Ok(before
            .iter()
            .zip(&after)
            .any(|(a, b)| a.to_bits() != b.to_bits()))
    }
}

/// One η-path on `grid`.
pub fn sample_msp(
    spec: &GeneratorSpec,
    grid: &TimeGrid,
    stream: &mut Stream,
    max_points: usize,
) -> Result<SamplePath> {
    MspSampler::new(spec, grid)?
        .with_max_points(max_points)?
        .sample(stream)
}

/// Simulates `n` η-paths (replica `i` on substream `(seed, i)`) and maps
/// each through `f` without retaining the paths.
pub fn simulate_map<T, F>(sampler: &MspSampler, n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    rng::try_replicate(n, seed, |s| sampler.sample_values(s).map(|eta| f(&eta)))
}

/// Monte Carlo estimate of `P(η_t <= f(t) at every grid point)`, on the
/// grid of `f`.
pub fn joint_cdf_estimate(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(joint_cdf_estimates(spec, std::slice::from_ref(f), n, seed)?.remove(0))
}

/// [`joint_cdf_estimate`] for several functions on shared draws. All
/// functions must live on the same grid.
pub fn joint_cdf_estimates(
    spec: &GeneratorSpec,
    fs: &[LevelFunction],
    n: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if n == 0 {
        return Err(invalid("joint_cdf_estimate needs n >= 1"));
    }
    let Some(first) = fs.first() else {
        return Err(invalid("no level functions given"));
    };
    if fs.len() > 64 {
        return Err(invalid("at most 64 level functions per call"));
    }
    if fs.iter().any(|f| f.grid() != first.grid()) {
        return Err(invalid("level functions live on different grids"));
    }
    let sampler = MspSampler::new(spec, first.grid())?;
    let masks = simulate_map(&sampler, n, seed, |eta| {
        fs.iter().enumerate().fold(0u64, |acc, (k, f)| {
            let below = eta.iter().zip(f.values()).all(|(e, l)| e <= l);
            acc | u64::from(below) << k
        })
    })?;
    Ok((0..fs.len())
        .map(|k| {
            let c = masks.iter().filter(|&&m| (m >> k) & 1 == 1).count();
            Estimate::proportion(c, n, seed)
        })
        .collect())
}

/// Monte Carlo estimate of `P(η_t > f(t) at every grid point)`, on the grid
/// of `f`.
pub fn survivor_estimate(
    spec: &GeneratorSpec,
    f: &LevelFunction,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(invalid("survivor_estimate needs n >= 1"));
    }
    let sampler = MspSampler::new(spec, f.grid())?;
    let level = f.values();
    let above = simulate_map(&sampler, n, seed, |eta| {
        eta.iter().zip(level).all(|(e, l)| e > l)
    })?;
    Ok(Estimate::proportion(
        above.iter().filter(|&&b| b).count(),
        n,
        seed,
    ))
}

/// KS distance between the simulated law of `η_t` and `x ↦ e^x`.
pub fn marginal_gof(
    spec: &GeneratorSpec,
    t: f64,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<f64> {
    Ok(marginal_gof_many(spec, &[t], grid, n, seed)?[0])
}

/// [`marginal_gof`] at several times on shared draws.
pub fn marginal_gof_many(
    spec: &GeneratorSpec,
    times: &[f64],
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("marginal_gof needs a nonempty sample (n >= 1)"));
    }
    let idx = times
        .iter()
        .map(|&t| grid.require_index(t, "time"))
        .collect::<Result<Vec<_>>>()?;
    let sampler = MspSampler::new(spec, grid)?;
    let rows = simulate_map(&sampler, n, seed, |eta| {
        idx.iter().map(|&j| eta[j]).collect::<Vec<_>>()
    })?;
    Ok((0..idx.len())
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            stats::ks_distance_neg_exp(&column).expect("nonempty")
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::make_grid;
    use crate::rng::substream;
    use crate::stats::ks_band;

    #[test]
    fn complete_dependence_path_is_minus_first_arrival() {
        let grid = make_grid(11).unwrap();
        let sampler = MspSampler::new(&GeneratorSpec::complete_dependence(), &grid).unwrap();
        let path = sampler.sample_values(&mut substream(4, 0)).unwrap();
        let gamma1 = rng::std_exponential(&mut substream(4, 0));
        assert!(path.iter().all(|&v| v == path[0]));
        assert!((path[0] + gamma1).abs() < 1e-15 * gamma1.max(1.0));
    }

    #[test]
    fn all_values_are_strictly_negative() {
        let grid = make_grid(201).unwrap();
        for spec in GeneratorSpec::catalogue() {
            let sampler = MspSampler::new(&spec, &grid).unwrap();
            for i in 0..300 {
                let eta = sampler.sample_values(&mut substream(8, i)).unwrap();
                assert!(eta.iter().all(|&v| v < 0.0 && v.is_finite()), "{spec:?}");
            }
        }
    }

    #[test]
    fn spectral_state_invariants() {
        let grid = make_grid(101).unwrap();
        let sampler = MspSampler::new(&GeneratorSpec::nonlinear_default(), &grid).unwrap();
        let st = sampler.spectral_state(&mut substream(2, 5)).unwrap();
        assert!(st.arrivals.windows(2).all(|w| w[0] < w[1]));
        assert!(!st.arrivals.is_empty());
        let min = st.running_max.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
    }

    #[test]
    fn tiny_budget_reports_bound_too_loose() {
        let grid = make_grid(11).unwrap();
        let sampler = MspSampler::new(&GeneratorSpec::two_branch(), &grid)
            .unwrap()
            .with_max_points(1)
            .unwrap();
        // One arrival never suffices: a single branch vanishes at an endpoint.
        match sampler.sample_values(&mut substream(0, 0)) {
            Err(Error::BoundTooLoose { arrivals, deficit }) => {
                assert_eq!(arrivals, 1);
                assert!(deficit > 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(MspSampler::new(&GeneratorSpec::two_branch(), &grid)
            .unwrap()
            .with_max_points(0)
            .is_err());
    }

    #[test]
    fn stopping_rule_is_exact() {
        let grid = make_grid(101).unwrap();
        for spec in GeneratorSpec::catalogue() {
            let sampler = MspSampler::new(&spec, &grid).unwrap();
            for i in 0..50 {
                assert!(!sampler
                    .extra_arrivals_change_path(&mut substream(1, i), 100)
                    .unwrap());
            }
        }
    }

    #[test]
    fn two_branch_margin_at_minus_half() {
        let grid = make_grid(101).unwrap();
        let sampler = MspSampler::new(&GeneratorSpec::two_branch(), &grid).unwrap();
        let n = 100_000;
        let j = grid.index_of(0.3).unwrap();
        let below = simulate_map(&sampler, n, 12, |eta| eta[j] <= -0.5).unwrap();
        let est = Estimate::proportion(below.iter().filter(|&&b| b).count(), n, 12);
        assert!(est.within((-0.5f64).exp(), 3.0, 0.0), "{est:?}");
    }

    #[test]
    fn marginal_gof_is_within_band_and_rejects_empty() {
        let grid = make_grid(101).unwrap();
        let n = 20_000;
        let d = marginal_gof(&GeneratorSpec::complete_dependence(), 0.5, &grid, n, 3).unwrap();
        assert!(d <= ks_band(n), "{d}");
        let d = marginal_gof(&GeneratorSpec::two_branch(), 0.0, &grid, n, 3).unwrap();
        assert!(d <= ks_band(n), "{d}");
        assert!(marginal_gof(&GeneratorSpec::two_branch(), 0.0, &grid, 0, 3).is_err());
        assert!(marginal_gof(&GeneratorSpec::two_branch(), 0.005, &grid, 10, 3).is_err());
    }

    #[test]
    fn max_stability_of_margins() {
        // k · max of k independent copies has the same e^x margins.
        let grid = make_grid(51).unwrap();
        let n = 20_000;
        for spec in [GeneratorSpec::sine_bump(0.5), GeneratorSpec::two_branch()] {
            let sampler = MspSampler::new(&spec, &grid).unwrap();
            for k in [2usize, 5] {
                let j = grid.index_of(0.4).unwrap();
                let vals = rng::try_replicate(n, 77 + k as u64, |s| {
                    let mut m = f64::NEG_INFINITY;
                    for _ in 0..k {
                        m = m.max(sampler.sample_values(s)?[j]);
                    }
                    Ok::<_, Error>(k as f64 * m)
                })
                .unwrap();
                let d = stats::ks_distance_neg_exp(&vals).unwrap();
                assert!(d <= ks_band(n), "{spec:?} k={k} d={d}");
            }
        }
    }
}
