//! Catalogue of generator processes.
//!
//! A generator `Z` is a nonnegative continuous process on [0, 1] with
//! `E Z_t = 1` for every `t` and a bounded supremum. Each variant below is
//! sampled as a linear combination of fixed basis functions with random
//! coefficients, so a prepared generator evaluates a path with a few
//! multiply-adds per grid point.
//!
//! Random draws per path, in order (each is one uniform `U` on [0, 1)):
//!
//! | variant               | draws | meaning                                                      |
//! |-----------------------|-------|--------------------------------------------------------------|
//! | `complete_dependence` | 0     | `Z ≡ 1`                                                      |
//! | `piecewise_example`   | 2     | `Z_0 = n` if `U_1 < 1/(n+1)` else `1/n`; `Z_1` likewise from `U_2` |
//! | `nonlinear_example`   | 2     | `Y = [U_1 < p]`, `Ỹ = [U_2 < p̃]`                             |
//! | `two_branch`          | 1     | `U_1 < 1/2` selects `2(1-t)`, otherwise `2t`                  |
//! | `sine_bump`           | 1     | `W = amp·(U_1 - 1/2)`                                         |

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{Interval, SamplePath, TimeGrid};
use crate::rng::{self, Stream};
use crate::stats::Estimate;

/// Equality tolerance for "grid sup equals endpoint max".
pub const SUP_MAX_TOL: f64 = 1e-12;

/// Description of a generator process.
///
/// JSON form: `{"variant": "<snake_case name>", "params": {...}}`; `params`
/// may be omitted for parameterless variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
#[serde(remote = "Self")]
pub enum GeneratorSpec {
    /// `Z_t ≡ 1`.
    CompleteDependence {},
    /// Random endpoint values in `{1/n, n}`, linear ramps to the constant 1 on
    /// `[a, b]`.
    PiecewiseExample { n: u32, a: f64, b: f64 },
    /// Piecewise linear through random `Z_0`, `Z_{1/2} = 1` and random `Z_1`
    /// built from two Bernoulli variables.
    NonlinearExample {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        e: f64,
    },
    /// `Z_t = 2(1-t)` or `Z_t = 2t`, each with probability 1/2.
    TwoBranch {},
    /// `Z_t = 1 + sin(2πt)·W` with `W` uniform on `[-amp/2, amp/2]`.
    SineBump { amp: f64 },
}

impl Serialize for GeneratorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GeneratorSpec::serialize(self, s)
    }
}

impl<'de> Deserialize<'de> for GeneratorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut doc = serde_json::Value::deserialize(d)?;
        if let Some(obj) = doc.as_object_mut() {
            obj.entry("params")
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
        GeneratorSpec::deserialize(doc).map_err(serde::de::Error::custom)
    }
}

impl GeneratorSpec {
    pub const fn complete_dependence() -> Self {
        GeneratorSpec::CompleteDependence {}
    }

    pub const fn two_branch() -> Self {
        GeneratorSpec::TwoBranch {}
    }

    /// `(n, a, b) = (2, 0.25, 0.75)`.
    pub const fn piecewise_default() -> Self {
        GeneratorSpec::PiecewiseExample {
            n: 2,
            a: 0.25,
            b: 0.75,
        }
    }

    /// `(a, b, c, d, e) = (2, 0.5, 1.25, 7, 0.5)`, giving `p = 1/3`,
    /// `p̃ = 1/13`.
    pub const fn nonlinear_default() -> Self {
        GeneratorSpec::NonlinearExample {
            a: 2.0,
            b: 0.5,
            c: 1.25,
            d: 7.0,
            e: 0.5,
        }
    }

    pub const fn sine_bump(amp: f64) -> Self {
        GeneratorSpec::SineBump { amp }
    }

    /// One instance of every variant with default parameters.
    pub fn catalogue() -> Vec<GeneratorSpec> {
        vec![
            Self::complete_dependence(),
            Self::piecewise_default(),
            Self::nonlinear_default(),
            Self::two_branch(),
            Self::sine_bump(0.5),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::CompleteDependence {} => "complete_dependence",
            GeneratorSpec::PiecewiseExample { .. } => "piecewise_example",
            GeneratorSpec::NonlinearExample { .. } => "nonlinear_example",
            GeneratorSpec::TwoBranch {} => "two_branch",
            GeneratorSpec::SineBump { .. } => "sine_bump",
        }
    }

    /// Parses the JSON document form and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GeneratorSpec = serde_json::from_str(text)?;
        validate_spec(&spec)?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("generator spec serializes")
    }
}

/// Probabilities `p = (1-b)/(a-b)` and `p̃ = (1-e)/(d-e)` of the nonlinear
/// example, and the factor `k = 1 - c(a-1)/(a-b)` multiplying the `Ỹ` term.
fn nonlinear_constants(a: f64, b: f64, c: f64, d: f64, e: f64) -> (f64, f64, f64) {
    let p = (1.0 - b) / (a - b);
    let p_tilde = (1.0 - e) / (d - e);
    let k = 1.0 - (a - 1.0) / (a - b) * c;
    (p, p_tilde, k)
}

/// The four equally structured outcomes `(probability, Z_0, Z_1)` of the
/// nonlinear example, indexed by `(Y, Ỹ)`.
fn nonlinear_outcomes(a: f64, b: f64, c: f64, d: f64, e: f64) -> [(f64, f64, f64); 4] {
    let (p, pt, k) = nonlinear_constants(a, b, c, d, e);
    let z1 = |y: bool, yt: bool| {
        let base = if y { 0.0 } else { c };
        base + k * if yt { d } else { e }
    };
    [
        (p * pt, a, z1(true, true)),
        (p * (1.0 - pt), a, z1(true, false)),
        ((1.0 - p) * pt, b, z1(false, true)),
        ((1.0 - p) * (1.0 - pt), b, z1(false, false)),
    ]
}

/// Checks the variant's parameter constraints, reporting every violation.
pub fn validate_spec(spec: &GeneratorSpec) -> Result<()> {
    let mut errs = Vec::new();
    let mut need = |ok: bool, msg: &str| {
        if !ok {
            errs.push(format!("{msg} violated"));
        }
    };
    match *spec {
        GeneratorSpec::CompleteDependence {} | GeneratorSpec::TwoBranch {} => {}
        GeneratorSpec::PiecewiseExample { n, a, b } => {
            need(n >= 1, "n >= 1");
            need(a > 0.0, "0 < a");
            need(a < b, "a < b");
            need(b < 1.0, "b < 1");
        }
        GeneratorSpec::NonlinearExample { a, b, c, d, e } => {
            need(
                [a, b, c, d, e].iter().all(|v| v.is_finite() && *v > 0.0),
                "a, b, c, d, e > 0",
            );
            need(a > 1.0, "1 < a");
            need(b < 1.0, "b < 1");
            need(c > 1.0, "1 < c");
            if a > 1.0 {
                need(c < (a - b) / (a - 1.0), "c < (a-b)/(a-1)");
                let denom = a - b - c * (a - 1.0);
                need(denom > 0.0 && (a - b) / denom < d, "(a-b)/(a-b-c(a-1)) < d");
            }
            need(e < 1.0, "e < 1");
        }
        GeneratorSpec::SineBump { amp } => {
            need(amp > 0.0 && amp < 1.0, "0 < amp < 1");
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(errs))
    }
}

/// Almost-sure upper bound `C` on `sup_t Z_t`.
pub fn generator_bound(spec: &GeneratorSpec) -> f64 {
    match *spec {
        GeneratorSpec::CompleteDependence {} => 1.0,
        GeneratorSpec::PiecewiseExample { n, .. } => f64::from(n),
        GeneratorSpec::TwoBranch {} => 2.0,
        GeneratorSpec::SineBump { amp } => 1.0 + amp,
        GeneratorSpec::NonlinearExample { a, b, c, d, e } => {
            // Every path is linear between its nodes Z_0, 1 and Z_1.
            nonlinear_outcomes(a, b, c, d, e)
                .iter()
                .map(|&(_, z0, z1)| z0.max(z1).max(1.0))
                .fold(1.0, f64::max)
        }
    }
}

/// Exact `m = E sup_t Z_t` where it is known in closed form.
///
/// * piecewise example: `(3n² + n)/(n + 1)²`
/// * two-branch: `2`
/// * sine bump: `1 + E|W| = 1 + amp/4`
/// * nonlinear example: expectation of `max(Z_0, 1, Z_1)` over the four
///   outcomes (paths are linear between those nodes)
pub fn closed_form_m(spec: &GeneratorSpec) -> Option<f64> {
    match *spec {
        GeneratorSpec::CompleteDependence {} => Some(1.0),
        GeneratorSpec::PiecewiseExample { n, .. } => {
            let n = f64::from(n);
            Some((3.0 * n * n + n) / ((n + 1.0) * (n + 1.0)))
        }
        GeneratorSpec::TwoBranch {} => Some(2.0),
        GeneratorSpec::SineBump { amp } => Some(1.0 + amp / 4.0),
        GeneratorSpec::NonlinearExample { a, b, c, d, e } => Some(
            nonlinear_outcomes(a, b, c, d, e)
                .iter()
                .map(|&(p, z0, z1)| p * z0.max(z1).max(1.0))
                .sum(),
        ),
    }
}

/// Exact `m̃ = E inf_t Z_t` where it is known in closed form.
pub fn closed_form_m_tilde(spec: &GeneratorSpec) -> Option<f64> {
    match *spec {
        GeneratorSpec::CompleteDependence {} => Some(1.0),
        GeneratorSpec::PiecewiseExample { n, .. } => {
            // inf = 1/n unless both endpoints equal n.
            let n = f64::from(n);
            let both_high = 1.0 / ((n + 1.0) * (n + 1.0));
            Some(both_high + (1.0 - both_high) / n)
        }
        GeneratorSpec::TwoBranch {} => Some(0.0),
        GeneratorSpec::SineBump { amp } => Some(1.0 - amp / 4.0),
        GeneratorSpec::NonlinearExample { a, b, c, d, e } => Some(
            nonlinear_outcomes(a, b, c, d, e)
                .iter()
                .map(|&(p, z0, z1)| p * z0.min(z1).min(1.0))
                .sum(),
        ),
    }
}

/// Random coefficients of one generator path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    first: f64,
    second: f64,
}

#[derive(Debug, Clone)]
enum Basis {
    Constant,
    /// `Z = first·left + middle + second·right`
    Nodes {
        left: Vec<f64>,
        middle: Vec<f64>,
        right: Vec<f64>,
    },
    /// `Z = first·down + (1 - first)·up`, `first ∈ {0, 1}`
    Branches {
        down: Vec<f64>,
        up: Vec<f64>,
    },
    /// `Z = 1 + first·shape`
    Bump {
        shape: Vec<f64>,
    },
}

/// A generator bound to a grid, with its basis functions tabulated.
#[derive(Debug, Clone)]
pub struct PreparedGenerator {
    spec: GeneratorSpec,
    grid: TimeGrid,
    basis: Basis,
    bound: f64,
}

impl PreparedGenerator {
    pub fn new(spec: &GeneratorSpec, grid: &TimeGrid) -> Result<Self> {
        validate_spec(spec)?;
        let ts = grid.points();
        let tab = |f: &dyn Fn(f64) -> f64| ts.iter().map(|&t| f(t)).collect::<Vec<_>>();
        let basis = match *spec {
            GeneratorSpec::CompleteDependence {} => Basis::Constant,
            GeneratorSpec::PiecewiseExample { a, b, .. } => Basis::Nodes {
                left: tab(&|t| if t < a { (a - t) / a } else { 0.0 }),
                middle: tab(&|t| {
                    if t < a {
                        t / a
                    } else if t <= b {
                        1.0
                    } else {
                        (1.0 - t) / (1.0 - b)
                    }
                }),
                right: tab(&|t| if t > b { (t - b) / (1.0 - b) } else { 0.0 }),
            },
            GeneratorSpec::NonlinearExample { .. } => Basis::Nodes {
                left: tab(&|t| if t <= 0.5 { 2.0 * (0.5 - t) } else { 0.0 }),
                middle: tab(&|t| if t <= 0.5 { 2.0 * t } else { 2.0 * (1.0 - t) }),
                right: tab(&|t| if t > 0.5 { 2.0 * (t - 0.5) } else { 0.0 }),
            },
            GeneratorSpec::TwoBranch {} => Basis::Branches {
                down: tab(&|t| 2.0 * (1.0 - t)),
                up: tab(&|t| 2.0 * t),
            },
            GeneratorSpec::SineBump { .. } => Basis::Bump {
                shape: tab(&|t| (2.0 * std::f64::consts::PI * t).sin()),
            },
        };
        Ok(PreparedGenerator {
            spec: *spec,
            grid: grid.clone(),
            basis,
            bound: generator_bound(spec),
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The almost-sure sup bound `C`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Draws the random coefficients of one path (see the module table for
    /// the number of uniforms consumed).
    pub fn draw(&self, stream: &mut Stream) -> Draw {
        match self.spec {
            GeneratorSpec::CompleteDependence {} => Draw {
                first: 1.0,
                second: 1.0,
            },
            GeneratorSpec::PiecewiseExample { n, .. } => {
                let high = 1.0 / (f64::from(n) + 1.0);
                let n = f64::from(n);
                let pick = |u: f64| if u < high { n } else { 1.0 / n };
                let z0 = pick(rng::uniform(stream));
                let z1 = pick(rng::uniform(stream));
                Draw {
                    first: z0,
                    second: z1,
                }
            }
            GeneratorSpec::NonlinearExample { a, b, c, d, e } => {
                let (p, pt, k) = nonlinear_constants(a, b, c, d, e);
                let y = rng::uniform(stream) < p;
                let yt = rng::uniform(stream) < pt;
                let z0 = if y { a } else { b };
                let z1 = if y { 0.0 } else { c } + k * if yt { d } else { e };
                Draw {
                    first: z0,
                    second: z1,
                }
            }
            GeneratorSpec::TwoBranch {} => Draw {
                first: if rng::uniform(stream) < 0.5 { 1.0 } else { 0.0 },
                second: 0.0,
            },
            GeneratorSpec::SineBump { amp } => Draw {
                first: amp * (rng::uniform(stream) - 0.5),
                second: 0.0,
            },
        }
    }

    /// A draw with explicit node values, for the node-based variants:
    /// `(Z_0, Z_1)` for the piecewise and nonlinear examples, `(1, _)` for
    /// the `2(1-t)` branch and `(0, _)` for the `2t` branch, `(W, _)` for the
    /// sine bump.
    pub fn draw_from(&self, first: f64, second: f64) -> Draw {
        Draw { first, second }
    }

    /// `Z` at grid index `j`.
    #[inline]
    pub fn value(&self, draw: &Draw, j: usize) -> f64 {
        match &self.basis {
            Basis::Constant => 1.0,
            Basis::Nodes {
                left,
                middle,
                right,
            } => draw.first * left[j] + middle[j] + draw.second * right[j],
            Basis::Branches { down, up } => {
                if draw.first == 1.0 {
                    down[j]
                } else {
                    up[j]
                }
            }
            Basis::Bump { shape } => 1.0 + draw.first * shape[j],
        }
    }

    /// Writes the path of `draw` into `out` (one value per grid point).
    pub fn fill(&self, draw: &Draw, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid.len());
        match &self.basis {
            Basis::Constant => out.fill(1.0),
            Basis::Branches { down, up } => {
                out.copy_from_slice(if draw.first == 1.0 { down } else { up })
            }
            Basis::Nodes {
                left,
                middle,
                right,
            } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = draw.first * left[j] + middle[j] + draw.second * right[j];
                }
            }
            Basis::Bump { shape } => {
                for (o, s) in out.iter_mut().zip(shape) {
                    *o = 1.0 + draw.first * s;
                }
            }
        }
    }

    /// Samples one path as a vector.
    pub fn sample_values(&self, stream: &mut Stream) -> Vec<f64> {
        let draw = self.draw(stream);
        let mut out = vec![0.0; self.grid.len()];
        self.fill(&draw, &mut out);
        out
    }
}

/// One realization of `Z` on `grid`.
pub fn sample_generator(
    spec: &GeneratorSpec,
    grid: &TimeGrid,
    stream: &mut Stream,
) -> Result<SamplePath> {
    let prepared = PreparedGenerator::new(spec, grid)?;
    SamplePath::new(grid.clone(), prepared.sample_values(stream))
}

/// Monte Carlo estimates of `m = E sup Z` and `m̃ = E inf Z` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMoments {
    pub m_hat: Estimate,
    pub m_tilde_hat: Estimate,
}

/// Grid-sup and grid-inf means over `n` generator paths. Replica `i` uses
/// substream `(seed, i)`, the same paths every other generator-level
/// estimator sees for that seed.
pub fn generator_moments(
    spec: &GeneratorSpec,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<GeneratorMoments> {
    if n == 0 {
        return Err(invalid("generator_moments needs n >= 1"));
    }
    let prepared = PreparedGenerator::new(spec, grid)?;
    let pairs = rng::replicate(n, seed, |s| {
        let z = prepared.sample_values(s);
        crate::paths::extrema(&z)
    });
    let sups: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let infs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(GeneratorMoments {
        m_hat: Estimate::mean(&sups, seed),
        m_tilde_hat: Estimate::mean(&infs, seed),
    })
}

/// Monte Carlo means of `Z_t` at the given grid times (shared draws).
pub fn pointwise_means(
    spec: &GeneratorSpec,
    times: &[f64],
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if n == 0 {
        return Err(invalid("pointwise_means needs n >= 1"));
    }
    let idx = times
        .iter()
        .map(|&t| grid.require_index(t, "time"))
        .collect::<Result<Vec<_>>>()?;
    let prepared = PreparedGenerator::new(spec, grid)?;
    let rows = rng::replicate(n, seed, |s| {
        let draw = prepared.draw(s);
        idx.iter()
            .map(|&j| prepared.value(&draw, j))
            .collect::<Vec<_>>()
    });
    Ok((0..idx.len())
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            Estimate::mean(&column, seed)
        })
        .collect())
}

/// Frequency of `sup_{t∈I} Z_t = max(Z_lo, Z_hi)` (grid sup, tolerance
/// [`SUP_MAX_TOL`]).
pub fn sup_equals_max_rate(
    spec: &GeneratorSpec,
    interval: Interval,
    grid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(invalid("sup_equals_max_rate needs n >= 1"));
    }
    let range = grid.interval_range(interval)?;
    let prepared = PreparedGenerator::new(spec, grid)?;
    let hits = rng::replicate(n, seed, |s| {
        let z = prepared.sample_values(s);
        let seg = &z[range.clone()];
        let sup = crate::paths::extrema(seg).1;
        let ends = seg[0].max(seg[seg.len() - 1]);
        (sup - ends).abs() <= SUP_MAX_TOL
    });
    Ok(Estimate::proportion(
        hits.iter().filter(|&&h| h).count(),
        n,
        seed,
    ))
}
