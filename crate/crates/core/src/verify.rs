//! Named numerical checks of the closed forms, bounds and equivalences of the
//! theory, runnable as a suite that produces a JSON report.
//!
//! Every check derives its own seed from the master seed and its id, so a
//! subset of the suite reproduces the corresponding entries of a full run.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dnorm::{dnorm_estimate, dnorm_indicator, inf_functional, takahashi_check};
use crate::dnorm::{GeneratorCorpus, LevelFunction};
use crate::error::{invalid, Error, Result};
use crate::generators::{
    closed_form_m, closed_form_m_tilde, generator_moments, pointwise_means, sup_equals_max_rate,
    GeneratorSpec,
};
use crate::hitting::{
    default_levels, down_up_down, down_up_down_prob, equivalence_bundle, hitting_curve,
    hitting_integral, hitting_prob, meets_function_prob, multi_hit_prob, two_hit, two_hit_prob,
    MultiHitQuery, DEFAULT_X_MIN,
};
use crate::msp::{
    joint_cdf_estimates, marginal_gof_many, simulate_map, survivor_estimate, MspSampler,
};
use crate::paths::{extrema, hits_level, make_grid, Interval, TimeGrid, DEFAULT_GRID_POINTS};
use crate::rng::{self, derive_seed};
use crate::stats::{ks_band, Estimate};

/// Name of the suite that runs every registered check.
pub const PAPER_SUITE: &str = "paper";
/// Default replication count per estimate.
pub const DEFAULT_N: usize = 100_000;
/// Default statistical tolerance multiplier.
pub const DEFAULT_Z: f64 = 3.0;
/// Discretization allowance for path-functional probabilities at 1001 points.
pub const GRID_ALLOWANCE: f64 = 0.005;

/// Closed-form values of the two-branch process `η_t = max(η_0/(1-t), η_1/t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalExampleReference {
    /// Hitting probability `(1 - e^x - x) e^x`.
    pub h: f64,
    /// Generator constant.
    pub m: f64,
    /// `(e^{x(1-t0)} - e^x)(e^{x t0} - e^x)`, when `t0` is given.
    pub two_hit: Option<f64>,
}

pub fn final_example_reference(x: f64, t0: Option<f64>) -> Result<FinalExampleReference> {
    if !(x < 0.0 && x.is_finite()) {
        return Err(invalid(format!("level must be negative, got {x}")));
    }
    let ex = x.exp();
    let two_hit = match t0 {
        None => None,
        Some(t) if t > 0.0 && t < 1.0 => Some(((x * (1.0 - t)).exp() - ex) * ((x * t).exp() - ex)),
        Some(t) => return Err(invalid(format!("split time {t} must lie in (0, 1)"))),
    };
    Ok(FinalExampleReference {
        h: (1.0 - ex - x) * ex,
        m: 2.0,
        two_hit,
    })
}

/// `∫_{-∞}^{x} (1 - e^u - u) e^u du` for the two-branch process.
fn two_branch_tail(x: f64) -> f64 {
    (2.0 - x) * x.exp() - 0.5 * (2.0 * x).exp()
}

/// How many replications a check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replications {
    /// The run's default `n`.
    Default,
    /// A multiple of the default.
    Times(usize),
    /// A fixed count, independent of the default.
    Fixed(usize),
}

impl Replications {
    fn resolve(self, n_default: usize) -> usize {
        match self {
            Replications::Default => n_default,
            Replications::Times(k) => k * n_default,
            Replications::Fixed(n) => n,
        }
    }
}

/// A registered check and its tolerance policy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckSpec {
    pub id: &'static str,
    pub description: &'static str,
    /// Multiplier on the standard error.
    pub z: f64,
    /// Additive allowance for grid discretization.
    pub allowance: f64,
    pub n: Replications,
    #[serde(skip)]
    run: fn(&Ctx) -> Result<Vec<Comparison>>,
}

/// Outcome of one check. `observed`, `expected` and `tol` are aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub tol: Vec<f64>,
    pub pass: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    pub seed: u64,
    pub n_default: usize,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scale and reporting options of a suite run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub n_default: usize,
    pub grid_points: usize,
    /// When false, every `seconds` field is 0 so reports compare byte for byte.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            n_default: DEFAULT_N,
            grid_points: DEFAULT_GRID_POINTS,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Relation {
    /// `|observed - expected| <= tol`.
    Near,
    /// `observed <= expected + tol`.
    AtMost,
    /// `observed >= expected - tol`.
    AtLeast,
    /// `observed > expected + tol`.
    Exceeds,
    /// `|observed - expected| > tol`.
    Away,
}

#[derive(Debug, Clone, Copy)]
struct Comparison {
    observed: f64,
    expected: f64,
    tol: f64,
    relation: Relation,
}

impl Comparison {
    fn new(observed: f64, expected: f64, tol: f64, relation: Relation) -> Self {
        Comparison {
            observed,
            expected,
            tol,
            relation,
        }
    }

    fn pass(&self) -> bool {
        let d = self.observed - self.expected;
        match self.relation {
            Relation::Near => d.abs() <= self.tol,
            Relation::AtMost => d <= self.tol,
            Relation::AtLeast => d >= -self.tol,
            Relation::Exceeds => d > self.tol,
            Relation::Away => d.abs() > self.tol,
        }
    }
}

struct Ctx {
    grid: TimeGrid,
    n: usize,
    seed: u64,
    z: f64,
    allowance: f64,
}

impl Ctx {
    fn seed_for(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    /// `estimate ≈ expected` within `z·se + allowance`.
    fn near(&self, e: &Estimate, expected: f64, allowance: f64) -> Comparison {
        Comparison::new(e.value, expected, self.z * e.se + allowance, Relation::Near)
    }

    /// A zero estimate with a confidence bound no larger than `3/n`.
    fn null(&self, e: &Estimate) -> [Comparison; 2] {
        [
            Comparison::new(e.value, 0.0, 0.0, Relation::Near),
            Comparison::new(e.ci_hi, 3.0 / e.n as f64, 0.0, Relation::AtMost),
        ]
    }

    /// A confidence interval that excludes 0.
    fn positive(e: &Estimate) -> Comparison {
        Comparison::new(e.ci_lo, 0.0, 0.0, Relation::Exceeds)
    }
}

fn count(flags: &[bool]) -> usize {
    flags.iter().filter(|&&b| b).count()
}

fn exact_zero(observed: f64) -> Comparison {
    Comparison::new(observed, 0.0, 0.0, Relation::Near)
}

fn eq1_moments(c: &Ctx) -> Result<Vec<Comparison>> {
    let times = [0.0, 0.25, 0.37, 0.5, 1.0];
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let seed = c.seed_for(spec.name());
        for e in pointwise_means(&spec, &times, &c.grid, c.n, seed)? {
            out.push(c.near(&e, 1.0, 0.0));
        }
        let gm = generator_moments(&spec, &c.grid, c.n, seed)?;
        // Z >= 0 forces a nonnegative inf; a finite m is the sup mean itself.
        out.push(Comparison::new(
            gm.m_tilde_hat.value,
            0.0,
            0.0,
            Relation::AtLeast,
        ));
        if let Some(m) = closed_form_m(&spec) {
            out.push(c.near(&gm.m_hat, m, c.allowance));
        }
    }
    Ok(out)
}

fn roundtrip_functions(grid: &TimeGrid) -> Result<Vec<LevelFunction>> {
    Ok(vec![
        LevelFunction::constant(-1.0, grid)?,
        LevelFunction::indicator(Interval::new(0.5, 1.0)?, -1.0, -0.01, grid)?,
        LevelFunction::piecewise_linear(vec![(0.0, -0.5), (1.0, -1.5)], grid)?,
    ])
}

fn eq2_roundtrip(c: &Ctx) -> Result<Vec<Comparison>> {
    let fs = roundtrip_functions(&c.grid)?;
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let joint = joint_cdf_estimates(&spec, &fs, c.n, c.seed_for(spec.name()))?;
        let d_seed = c.seed_for(&format!("{}/dnorm", spec.name()));
        for (f, j) in fs.iter().zip(&joint) {
            let d = dnorm_estimate(&spec, f, c.n, d_seed)?;
            let target = (-d.value).exp();
            // Delta method for exp(-D); the two sides use independent draws.
            let se = (j.se.powi(2) + (target * d.se).powi(2)).sqrt();
            out.push(Comparison::new(j.value, target, c.z * se, Relation::Near));
        }
    }
    Ok(out)
}

fn eq3_negative_paths(c: &Ctx) -> Result<Vec<Comparison>> {
    let level = -1.0;
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let sampler = MspSampler::new(&spec, &c.grid)?;
        let flags = simulate_map(&sampler, c.n, c.seed_for(spec.name()), |eta| {
            let hi = extrema(eta).1;
            // A path touching 0 somewhere, and a path below the level
            // everywhere that meets it somewhere.
            (hi >= 0.0, hi <= level && eta.contains(&level))
        })?;
        out.push(exact_zero(flags.iter().filter(|f| f.0).count() as f64));
        out.push(exact_zero(flags.iter().filter(|f| f.1).count() as f64));
    }
    Ok(out)
}

fn margins_ks(c: &Ctx) -> Result<Vec<Comparison>> {
    let band = ks_band(c.n);
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let ks = marginal_gof_many(
            &spec,
            &[0.0, 0.37, 1.0],
            &c.grid,
            c.n,
            c.seed_for(spec.name()),
        )?;
        out.extend(
            ks.into_iter()
                .map(|d| Comparison::new(d, 0.0, band, Relation::AtMost)),
        );
    }
    Ok(out)
}

fn takahashi(c: &Ctx) -> Result<Vec<Comparison>> {
    let g = &c.grid;
    let probes = vec![
        LevelFunction::constant(-1.0, g)?,
        LevelFunction::indicator(Interval::new(0.25, 0.75)?, -2.0, -0.5, g)?,
        LevelFunction::piecewise_linear(vec![(0.0, -0.2), (0.6, -1.7), (1.0, -0.4)], g)?,
    ];
    let cd = takahashi_check(&GeneratorSpec::complete_dependence(), &probes, c.n, c.seed)?;
    let pw = takahashi_check(&GeneratorSpec::piecewise_default(), &probes, c.n, c.seed)?;
    let mut out = vec![
        Comparison::new(
            f64::from(u8::from(cd.complete_dependence)),
            1.0,
            0.0,
            Relation::Near,
        ),
        Comparison::new(cd.m_hat.value, 1.0, 0.0, Relation::Near),
        Comparison::new(
            f64::from(u8::from(pw.complete_dependence)),
            0.0,
            0.0,
            Relation::Near,
        ),
        Comparison::new(
            pw.m_hat.value - c.z * pw.m_hat.se,
            1.0,
            0.0,
            Relation::Exceeds,
        ),
    ];
    for (sup, d) in &cd.probes {
        out.push(Comparison::new(d.value, *sup, 0.0, Relation::Near));
    }
    Ok(out)
}

fn cd_null_and_image(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::complete_dependence();
    let hit = hitting_prob(
        &spec,
        -1.0,
        Interval::unit(),
        &c.grid,
        c.n,
        c.seed_for("hit"),
    )?;
    let f = LevelFunction::piecewise_linear(vec![(0.0, -1.0), (1.0, -2.0)], &c.grid)?;
    let meets = meets_function_prob(&spec, &f, c.n, c.seed_for("image"))?;
    let mut out = c.null(&hit).to_vec();
    // Fixed-time event for a constant path: no grid allowance.
    out.push(c.near(&meets, (-1.0f64).exp() - (-2.0f64).exp(), 0.0));
    Ok(out)
}

fn prop2_null(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::piecewise_default();
    let i = Interval::new(0.25, 0.75)?;
    let e = hitting_prob(&spec, -1.0, i, &c.grid, c.n, c.seed)?;
    let norm = dnorm_indicator(&spec, i, &c.grid, c.n, c.seed)?;
    let mut out = c.null(&e).to_vec();
    out.push(Comparison::new(norm.value, 1.0, 0.0, Relation::Near));
    Ok(out)
}

fn prop2_positive(c: &Ctx) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for spec in [
        GeneratorSpec::piecewise_default(),
        GeneratorSpec::nonlinear_default(),
        GeneratorSpec::sine_bump(0.5),
    ] {
        let seed = c.seed_for(spec.name());
        let norm = dnorm_indicator(&spec, Interval::unit(), &c.grid, c.n, seed)?;
        out.push(Comparison::new(
            norm.value - c.z * norm.se,
            1.0,
            0.0,
            Relation::Exceeds,
        ));
        let e = hitting_prob(&spec, -1.0, Interval::unit(), &c.grid, c.n, seed)?;
        out.push(Ctx::positive(&e));
    }
    Ok(out)
}

fn survivor_bound(c: &Ctx) -> Result<Vec<Comparison>> {
    let g = &c.grid;
    let fs = [
        LevelFunction::constant(-1.0, g)?,
        LevelFunction::piecewise_linear(vec![(0.0, -0.5), (1.0, -1.5)], g)?,
    ];
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        for (k, f) in fs.iter().enumerate() {
            let seed = c.seed_for(&format!("{}/{k}", spec.name()));
            let p = survivor_estimate(&spec, f, c.n, seed)?;
            let inf = inf_functional(&spec, f, c.n, derive_seed(seed, "inf"))?;
            let bound = 1.0 - (-inf.value).exp();
            let se = (p.se.powi(2) + ((-inf.value).exp() * inf.se).powi(2)).sqrt();
            out.push(Comparison::new(
                p.value,
                bound,
                c.z * se + c.allowance,
                Relation::AtLeast,
            ));
        }
    }
    Ok(out)
}

fn sine_moments() -> (f64, f64) {
    let spec = GeneratorSpec::sine_bump(0.5);
    (
        closed_form_m(&spec).expect("closed form"),
        closed_form_m_tilde(&spec).expect("closed form"),
    )
}

fn hcurve_bound(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::sine_bump(0.5);
    let levels = [-0.25, -1.0, -4.0];
    let curve = hitting_curve(
        &spec,
        &levels,
        Interval::unit(),
        &c.grid,
        c.n,
        c.seed,
        Some(sine_moments()),
    )?;
    let mut out = Vec::new();
    for (e, b) in curve.estimates.iter().zip(&curve.upper_bounds) {
        out.push(Comparison::new(
            e.value,
            *b,
            c.z * e.se + c.allowance,
            Relation::AtMost,
        ));
    }
    out.push(Ctx::positive(&curve.estimates[1]));
    Ok(out)
}

fn hintegral_bound(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::sine_bump(0.5);
    let (m, mt) = sine_moments();
    let levels = default_levels(25, DEFAULT_X_MIN)?;
    let curve = hitting_curve(
        &spec,
        &levels,
        Interval::unit(),
        &c.grid,
        c.n,
        c.seed,
        Some((m, mt)),
    )?;
    let (integral, _) = hitting_integral(&curve, mt)?;
    Ok(vec![
        Comparison::new(integral, (m - mt) / (m * mt), 0.02, Relation::AtMost),
        Comparison::new(integral, 0.001, 0.0, Relation::AtLeast),
    ])
}

fn example2_m(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::piecewise_default();
    let gm = generator_moments(&spec, &c.grid, c.n, c.seed)?;
    let mut out = vec![c.near(&gm.m_hat, 14.0 / 9.0, 0.0)];
    for n in [1u32, 2, 3, 5, 10] {
        let s = GeneratorSpec::PiecewiseExample {
            n,
            a: 0.25,
            b: 0.75,
        };
        let nf = f64::from(n);
        let expected = (3.0 * nf * nf + nf) / ((nf + 1.0) * (nf + 1.0));
        let got = closed_form_m(&s).expect("closed form");
        out.push(Comparison::new(got, expected, 1e-15, Relation::Near));
    }
    Ok(out)
}

fn lemma31(c: &Ctx) -> Result<Vec<Comparison>> {
    let q = MultiHitQuery::Triple {
        x0: -1.0,
        t_lo: 0.0,
        t_mid: 0.25,
        t_hi: 0.5,
    };
    let sine = down_up_down_prob(
        &GeneratorSpec::sine_bump(0.5),
        &q,
        &c.grid,
        c.n,
        c.seed_for("sine"),
    )?;
    let nonlinear = down_up_down_prob(
        &GeneratorSpec::nonlinear_default(),
        &q,
        &c.grid,
        c.n,
        c.seed_for("nonlinear"),
    )?;
    let mut out = vec![c.near(&sine, (-1.0f64).exp() - (-1.0625f64).exp(), 0.0)];
    out.extend(c.null(&nonlinear));
    Ok(out)
}

fn prop32_two_hit(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::sine_bump(0.5);
    let (x0, t0) = (-1.0, 0.25);
    let lo = c.grid.require_index(0.0, "time")?;
    let mid = c.grid.require_index(t0, "time")?;
    let hi = c.grid.require_index(1.0, "time")?;
    let sampler = MspSampler::new(&spec, &c.grid)?;
    let flags = simulate_map(&sampler, c.n, c.seed, |eta| {
        (two_hit(eta, mid, x0), down_up_down(eta, lo, mid, hi, x0))
    })?;
    let twice = Estimate::proportion(flags.iter().filter(|f| f.0).count(), c.n, c.seed);
    let violations = flags.iter().filter(|f| f.1 && !f.0).count();
    // Down-up-down probability on (0, t0, 1): E max(Z_0, Z_1) = 1 and
    // E max(Z_0, Z_t0, Z_1) = 1 + amp/8.
    let dud = x0.exp() - (x0 * 1.0625).exp();
    Ok(vec![
        Ctx::positive(&twice),
        Comparison::new(
            twice.value,
            dud,
            c.z * twice.se + c.allowance,
            Relation::AtLeast,
        ),
        exact_zero(violations as f64),
    ])
}

fn cor33(c: &Ctx) -> Result<Vec<Comparison>> {
    let (t_lo, t_hi) = (0.2, 0.9);
    let x0s = [-0.5, -2.0];
    let mids = [0.25, 0.7];
    let mut out = Vec::new();

    let nl = equivalence_bundle(
        &GeneratorSpec::nonlinear_default(),
        t_lo,
        t_hi,
        &x0s,
        &mids,
        &c.grid,
        c.n,
        c.seed_for("nonlinear"),
    )?;
    for e in &nl.down_up_down {
        out.extend(c.null(e));
    }
    out.push(Comparison::new(
        nl.sup_equals_max.value,
        1.0,
        0.0,
        Relation::Near,
    ));
    out.push(Comparison::new(
        nl.sup_minus_max.value,
        0.0,
        c.z * nl.sup_minus_max.se + 1e-9,
        Relation::Near,
    ));
    for e in &nl.cdf_gap {
        out.push(Comparison::new(e.value, 0.0, c.z * e.se, Relation::Near));
    }
    for e in &nl.survivor_residual {
        out.push(Comparison::new(e.value, 0.0, 4.0 * e.se, Relation::Near));
    }

    // The strict case needs ten times the replications to separate the
    // small survivor residual from zero by five standard errors.
    let sine = equivalence_bundle(
        &GeneratorSpec::sine_bump(0.5),
        t_lo,
        t_hi,
        &x0s,
        &mids,
        &c.grid,
        10 * c.n,
        c.seed_for("sine"),
    )?;
    out.push(Ctx::positive(&sine.down_up_down[0]));
    out.push(Comparison::new(
        sine.sup_equals_max.value,
        1.0,
        0.0,
        Relation::Away,
    ));
    let away = |e: &Estimate| Comparison::new(e.value, 0.0, 5.0 * e.se, Relation::Away);
    out.push(away(&sine.sup_minus_max));
    out.extend(sine.cdf_gap.iter().map(away));
    out.extend(sine.survivor_residual.iter().map(away));
    Ok(out)
}

fn nonlinear_supmax(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::nonlinear_default();
    let mut out = Vec::new();
    for (lo, hi) in [(0.0, 1.0), (0.2, 0.9), (0.1, 0.45), (0.5, 1.0), (0.3, 0.6)] {
        let e = sup_equals_max_rate(&spec, Interval::new(lo, hi)?, &c.grid, c.n, c.seed)?;
        out.push(Comparison::new(e.value, 1.0, 0.0, Relation::Near));
    }
    Ok(out)
}

fn final_h(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::two_branch();
    let levels = [-0.5, -1.0, -2.0, -4.0];
    let curve = hitting_curve(
        &spec,
        &levels,
        Interval::unit(),
        &c.grid,
        c.n,
        c.seed,
        Some((2.0, 0.0)),
    )?;
    let mut out = Vec::new();
    for (&x, e) in levels.iter().zip(&curve.estimates) {
        out.push(c.near(e, final_example_reference(x, None)?.h, c.allowance));
    }
    let gm = generator_moments(&spec, &c.grid, c.n, c.seed)?;
    out.push(c.near(&gm.m_hat, final_example_reference(-1.0, None)?.m, 0.0));
    Ok(out)
}

fn final_integral(c: &Ctx) -> Result<Vec<Comparison>> {
    let spec = GeneratorSpec::two_branch();
    let levels = default_levels(25, DEFAULT_X_MIN)?;
    let curve = hitting_curve(
        &spec,
        &levels,
        Interval::unit(),
        &c.grid,
        c.n,
        c.seed,
        Some((2.0, 0.0)),
    )?;
    let (integral, _) = hitting_integral(&curve, 0.0)?;
    let total = integral + two_branch_tail(DEFAULT_X_MIN);
    Ok(vec![Comparison::new(total, 1.5, 0.05, Relation::Near)])
}

fn final_two_hit(c: &Ctx) -> Result<Vec<Comparison>> {
    let q = MultiHitQuery::Split { x0: -1.0, t0: 0.5 };
    let e = two_hit_prob(&GeneratorSpec::two_branch(), &q, &c.grid, c.n, c.seed)?;
    let expected = final_example_reference(-1.0, Some(0.5))?
        .two_hit
        .expect("split time given");
    Ok(vec![c.near(&e, expected, c.allowance)])
}

fn final_no_three_hit(c: &Ctx) -> Result<Vec<Comparison>> {
    let intervals = [
        Interval::new(0.0, 0.3)?,
        Interval::new(0.4, 0.6)?,
        Interval::new(0.7, 1.0)?,
    ];
    let mut out = Vec::new();
    for x0 in [-0.5, -1.0] {
        let e = multi_hit_prob(
            &GeneratorSpec::two_branch(),
            x0,
            &intervals,
            &c.grid,
            c.n,
            c.seed_for(&x0.to_string()),
        )?;
        out.extend(c.null(&e));
    }
    Ok(out)
}

fn msp_exactness(c: &Ctx) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let sampler = MspSampler::new(&spec, &c.grid)?;
        let changed = rng::try_replicate(c.n, c.seed_for(spec.name()), |s| {
            sampler.extra_arrivals_change_path(s, 100)
        })?;
        out.push(exact_zero(count(&changed) as f64));
    }
    Ok(out)
}

/// Violations of per-draw orderings that hold on every shared draw.
fn shared_draw_properties(c: &Ctx) -> Result<Vec<Comparison>> {
    let g = &c.grid;
    let small = LevelFunction::piecewise_linear(vec![(0.0, -0.5), (0.5, -1.0), (1.0, -0.25)], g)?;
    let large = LevelFunction::piecewise_linear(vec![(0.0, -0.75), (0.5, -1.0), (1.0, -0.5)], g)?;
    let (inner, outer) = (Interval::new(0.3, 0.6)?, Interval::new(0.1, 0.8)?);
    let split = MultiHitQuery::Split { x0: -1.0, t0: 0.5 };
    let triple = MultiHitQuery::Triple {
        x0: -1.0,
        t_lo: 0.2,
        t_mid: 0.5,
        t_hi: 0.9,
    };
    let mut out = Vec::new();
    for spec in GeneratorSpec::catalogue() {
        let seed = c.seed_for(spec.name());
        let corpus = GeneratorCorpus::new(&spec, g, c.n, seed)?;
        let (a, b) = (
            corpus.per_draw_dnorm(&small)?,
            corpus.per_draw_dnorm(&large)?,
        );
        let dnorm_bad = a.iter().zip(&b).filter(|(x, y)| x > y).count();
        let (a, b) = (
            corpus.per_draw_indicator(inner)?,
            corpus.per_draw_indicator(outer)?,
        );
        let ind_bad = a.iter().zip(&b).filter(|(x, y)| x > y).count();

        let eta = crate::hitting::EtaCorpus::new(&spec, g, c.n, seed)?;
        let (hi, ho) = (eta.hits(-1.0, inner)?, eta.hits(-1.0, outer)?);
        let hit_bad = hi.iter().zip(&ho).filter(|(x, y)| **x && !**y).count();
        let (two, dud) = (eta.two_hits(&split)?, eta.down_up_downs(&triple)?);
        let multi_bad = dud.iter().zip(&two).filter(|(d, t)| **d && !**t).count();
        // The same hits recomputed by the streaming rule.
        let r = g.interval_range(inner)?;
        let stream_bad = eta
            .paths()
            .iter()
            .zip(&hi)
            .filter(|(p, h)| hits_level(&p[r.clone()], -1.0) != **h)
            .count();
        for v in [dnorm_bad, ind_bad, hit_bad, multi_bad, stream_bad] {
            out.push(exact_zero(v as f64));
        }
    }
    Ok(out)
}

const fn check(
    id: &'static str,
    description: &'static str,
    allowance: f64,
    n: Replications,
    run: fn(&Ctx) -> Result<Vec<Comparison>>,
) -> CheckSpec {
    CheckSpec {
        id,
        description,
        z: DEFAULT_Z,
        allowance,
        n,
        run,
    }
}

use Replications::{Default as Dflt, Fixed};

static REGISTRY: &[CheckSpec] = &[
    check(
        "eq1-moments",
        "generator means are 1 at fixed times, Z >= 0, sup means match closed forms",
        GRID_ALLOWANCE,
        Dflt,
        eq1_moments,
    ),
    check(
        "eq2-roundtrip",
        "joint cdf equals exp(-D-norm) for three level functions",
        0.0,
        Dflt,
        eq2_roundtrip,
    ),
    check(
        "eq3-negative-paths",
        "paths stay below 0 and never touch a level from below",
        0.0,
        Fixed(10_000),
        eq3_negative_paths,
    ),
    check(
        "margins-ks",
        "one-dimensional margins are standard negative exponential",
        0.0,
        Dflt,
        margins_ks,
    ),
    check(
        "takahashi",
        "m = 1 exactly when the D-norm is the sup-norm",
        0.0,
        Dflt,
        takahashi,
    ),
    check(
        "cd-null-and-image",
        "complete dependence misses constant levels but meets a sloped one",
        0.0,
        Dflt,
        cd_null_and_image,
    ),
    check(
        "prop2-null-on-constant-interval",
        "a generator constant on I gives zero hitting probability on I",
        0.0,
        Dflt,
        prop2_null,
    ),
    check(
        "prop2-positive-when-norm-gt-1",
        "indicator D-norm above 1 gives positive hitting probability",
        0.0,
        Dflt,
        prop2_positive,
    ),
    check(
        "survivor-bound",
        "survivor probability dominates 1 - exp(-E inf |f| Z)",
        GRID_ALLOWANCE,
        Dflt,
        survivor_bound,
    ),
    check(
        "hcurve-bound",
        "hitting probability is at most exp(x m~) - exp(x m)",
        GRID_ALLOWANCE,
        Dflt,
        hcurve_bound,
    ),
    check(
        "hintegral-bound",
        "integral of h is positive and at most (m - m~)/(m m~)",
        GRID_ALLOWANCE,
        Dflt,
        hintegral_bound,
    ),
    check(
        "example2-m",
        "piecewise generator constant (3n^2 + n)/(n + 1)^2",
        0.0,
        Dflt,
        example2_m,
    ),
    check(
        "lemma31-closedform",
        "down-up-down probability equals the difference of two exponentials",
        0.0,
        Dflt,
        lemma31,
    ),
    check(
        "prop32-two-hit",
        "E sup > E max gives two hits with positive probability",
        GRID_ALLOWANCE,
        Dflt,
        prop32_two_hit,
    ),
    check(
        "cor33-equivalences",
        "five equivalent conditions hold together or fail together",
        0.0,
        Dflt,
        cor33,
    ),
    check(
        "nonlinear-supmax",
        "nonlinear generator has sup = max of endpoints on every interval",
        0.0,
        Dflt,
        nonlinear_supmax,
    ),
    check(
        "final-h",
        "two-branch hitting probability (1 - e^x - x) e^x and m = 2",
        GRID_ALLOWANCE,
        Dflt,
        final_h,
    ),
    check(
        "final-integral-3/2",
        "two-branch hitting curve integrates to 3/2",
        GRID_ALLOWANCE,
        Dflt,
        final_integral,
    ),
    check(
        "final-two-hit",
        "two-branch two-hit probability closed form",
        GRID_ALLOWANCE,
        Dflt,
        final_two_hit,
    ),
    check(
        "final-no-three-hit",
        "two-branch paths never hit a level in three disjoint intervals",
        0.0,
        Dflt,
        final_no_three_hit,
    ),
    check(
        "msp-exactness",
        "100 extra arrivals never change a stopped path",
        0.0,
        Fixed(100),
        msp_exactness,
    ),
    check(
        "shared-draw-properties",
        "per-draw monotonicity and containment orderings",
        0.0,
        Fixed(1_000),
        shared_draw_properties,
    ),
];

/// Every registered check, in suite order.
pub fn registry() -> &'static [CheckSpec] {
    REGISTRY
}

/// Resolves ids (or the single name [`PAPER_SUITE`]) to checks, failing on
/// the first unknown id.
pub fn resolve_suite<S: AsRef<str>>(ids: &[S]) -> Result<Vec<&'static CheckSpec>> {
    if ids.is_empty() {
        return Err(invalid("empty suite"));
    }
    if ids.len() == 1 && ids[0].as_ref() == PAPER_SUITE {
        return Ok(REGISTRY.iter().collect());
    }
    ids.iter()
        .map(|id| {
            let id = id.as_ref();
            REGISTRY
                .iter()
                .find(|c| c.id == id)
                .ok_or_else(|| Error::UnknownCheck(id.to_string()))
        })
        .collect()
}

fn suite_label<S: AsRef<str>>(ids: &[S]) -> String {
    ids.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",")
}

/// Runs the named checks. All ids are resolved before anything executes.
pub fn run_checks<S: AsRef<str>>(ids: &[S], seed: u64, opts: &RunOptions) -> Result<CheckReport> {
    let checks = resolve_suite(ids)?;
    if opts.n_default < 2 {
        return Err(invalid("n_default must be at least 2"));
    }
    let grid = make_grid(opts.grid_points)?;
    let mut results = Vec::with_capacity(checks.len());
    for spec in checks {
        let ctx = Ctx {
            grid: grid.clone(),
            n: spec.n.resolve(opts.n_default),
            seed: derive_seed(seed, spec.id),
            z: spec.z,
            allowance: spec.allowance,
        };
        let start = Instant::now();
        let comparisons = (spec.run)(&ctx)?;
        let seconds = if opts.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        results.push(CheckResult {
            id: spec.id.to_string(),
            observed: comparisons.iter().map(|c| c.observed).collect(),
            expected: comparisons.iter().map(|c| c.expected).collect(),
            tol: comparisons.iter().map(|c| c.tol).collect(),
            pass: comparisons.iter().all(Comparison::pass),
            seconds,
        });
    }
    Ok(CheckReport {
        suite: suite_label(ids),
        seed,
        n_default: opts.n_default,
        pass: results.iter().all(|r| r.pass),
        checks: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_examples() {
        let r = final_example_reference(-1.0, None).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(r.h, (2.0 - e) * e);
        assert!((r.h - 0.600424).abs() < 1e-6, "{}", r.h);
        assert_eq!(r.m, 2.0);
        assert_eq!(r.two_hit, None);
        let r = final_example_reference(-1.0, Some(0.5)).unwrap();
        assert!((r.two_hit.unwrap() - 0.056954).abs() < 1e-6);
        assert!(final_example_reference(-1e-12, None).unwrap().h.abs() < 1e-11);
        assert!(final_example_reference(0.0, None).is_err());
        assert!(final_example_reference(0.5, None).is_err());
        assert!(final_example_reference(-1.0, Some(1.0)).is_err());
    }

    #[test]
    fn tail_formula_matches_quadrature() {
        let h = |x: f64| final_example_reference(x, None).unwrap().h;
        let (a, b, k) = (-60.0, -12.0, 200_000);
        let step = (b - a) / k as f64;
        let mut area = 0.5 * (h(a) + h(b));
        for i in 1..k {
            area += h(a + step * i as f64);
        }
        area *= step;
        assert!((area - two_branch_tail(-12.0)).abs() < 1e-9);
        assert!((two_branch_tail(-1e-15) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<_> = registry().iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), registry().len());
    }

    #[test]
    fn unknown_id_fails_before_running() {
        let err = run_checks(&["eq1-moments", "no-such-check"], 7, &RunOptions::default());
        assert!(matches!(err, Err(Error::UnknownCheck(id)) if id == "no-such-check"));
        assert!(resolve_suite::<&str>(&[]).is_err());
        assert_eq!(resolve_suite(&["paper"]).unwrap().len(), registry().len());
    }

    #[test]
    fn relations() {
        use Relation::*;
        assert!(Comparison::new(1.0, 1.0, 0.0, Near).pass());
        assert!(!Comparison::new(1.1, 1.0, 0.05, Near).pass());
        assert!(Comparison::new(0.9, 1.0, 0.0, AtMost).pass());
        assert!(Comparison::new(0.96, 1.0, 0.05, AtLeast).pass());
        assert!(!Comparison::new(0.0, 0.0, 0.0, Exceeds).pass());
        assert!(Comparison::new(1.2, 1.0, 0.1, Away).pass());
        assert!(!Comparison::new(1.05, 1.0, 0.1, Away).pass());
    }

    #[test]
    fn small_runs_are_deterministic_and_seed_per_id() {
        let opts = RunOptions {
            n_default: 2_000,
            grid_points: 101,
            timing: false,
        };
        let a = run_checks(&["example2-m", "final-two-hit"], 7, &opts).unwrap();
        let b = run_checks(&["example2-m", "final-two-hit"], 7, &opts).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let single = run_checks(&["final-two-hit"], 7, &opts).unwrap();
        assert_eq!(single.checks[0], a.checks[1]);
        assert_eq!(single.suite, "final-two-hit");
        assert_eq!(a.pass, a.checks.iter().all(|c| c.pass));
    }
}
