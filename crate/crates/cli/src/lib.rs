//! Argument parsing, validation and dispatch for the `mshit` binary.
//!
//! [`parse_invocation`] turns argv into a fully validated [`RunConfig`];
//! [`dispatch`] runs it and writes CSV or JSON output.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use mshit_core::dnorm::{dnorm_estimate, dnorm_indicator};
use mshit_core::generators::{closed_form_m, closed_form_m_tilde, validate_spec};
use mshit_core::hitting::{
    check_disjoint, default_levels, down_up_down_prob, hitting_curve, multi_hit_prob, two_hit_prob,
    MultiHitQuery, DEFAULT_X_MIN,
};
use mshit_core::msp::MspSampler;
use mshit_core::paths::{make_grid, DEFAULT_GRID_POINTS};
use mshit_core::rng;
use mshit_core::verify::{self, RunOptions, PAPER_SUITE};
use mshit_core::{DNormEstimate, Estimate, GeneratorSpec, Interval, LevelFunction, LevelShape};

/// Replication default when neither `--n` nor `MSHIT_DEFAULT_N` is given.
pub const DEFAULT_N: usize = 100_000;

/// Exit status for a bad invocation.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for a failed run or a failed verification.
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, values or input files. Exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Simulation or I/O failure. Exit status 1.
    #[error("{0}")]
    Run(String),
    /// Help or version text requested. Exit status 0.
    #[error("{0}")]
    Info(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(_) => EXIT_FAILURE,
            CliError::Info(_) => 0,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "mshit",
    version,
    about = "Simulate standard max-stable processes and estimate level-hitting probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// Generator spec JSON file, e.g. {"variant": "two_branch"}.
    #[arg(long, value_name = "FILE")]
    generator: Option<PathBuf>,
    /// Number of grid points on [0, 1].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid: usize,
    /// Replications per estimate.
    #[arg(long, env = "MSHIT_DEFAULT_N", default_value_t = DEFAULT_N)]
    n: usize,
    /// Master seed; the only source of randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write k simulated paths as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of paths.
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Estimate a D-norm.
    Dnorm {
        #[command(flatten)]
        common: Common,
        /// Level function as inline JSON or a JSON file, e.g.
        /// {"shape": "constant", "level": -1}.
        #[arg(long, value_name = "JSON|FILE", conflicts_with = "interval")]
        f: Option<String>,
        /// Estimate the indicator norm of [lo, hi] instead.
        #[arg(long, value_name = "LO,HI")]
        interval: Option<String>,
    },
    /// Hitting probabilities as CSV `x,estimate,ci_lo,ci_hi,bound`.
    Hitting {
        #[command(flatten)]
        common: Common,
        /// A single negative level.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["levels", "level_count"])]
        x: Option<String>,
        /// Comma-separated negative levels.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "level_count")]
        levels: Option<String>,
        /// This many default levels between -0.05 and -12.
        #[arg(long)]
        level_count: Option<usize>,
        /// Time interval to search, default [0, 1].
        #[arg(long, value_name = "LO,HI")]
        interval: Option<String>,
    },
    /// Multi-hit probabilities as JSON.
    Multihit {
        #[command(flatten)]
        common: Common,
        /// The negative level x0.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Split time: hits in [0, t0] and in [t0, 1].
        #[arg(long, conflicts_with_all = ["times", "intervals"])]
        t0: Option<f64>,
        /// Down-up-down times t',t0,t''.
        #[arg(long, value_name = "T1,T0,T2", conflicts_with = "intervals")]
        times: Option<String>,
        /// Semicolon-separated disjoint intervals, e.g. "0,0.3;0.4,0.6;0.7,1".
        #[arg(long)]
        intervals: Option<String>,
        /// Expected number of intervals.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run verification checks and write the JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// "paper" or comma-separated check ids.
        #[arg(long, default_value = PAPER_SUITE)]
        suite: String,
        /// Write 0 for every runtime field.
        #[arg(long)]
        no_timing: bool,
    },
}

/// A multi-hit query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiHit {
    Split {
        x0: f64,
        t0: f64,
    },
    Triple {
        x0: f64,
        t_lo: f64,
        t_mid: f64,
        t_hi: f64,
    },
    Intervals {
        x0: f64,
        intervals: Vec<Interval>,
    },
}

/// Subcommand and its validated parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Simulate {
        k: usize,
    },
    Dnorm {
        f: Option<LevelShape>,
        interval: Option<Interval>,
    },
    Hitting {
        levels: Vec<f64>,
        interval: Interval,
    },
    Multihit {
        query: MultiHit,
    },
    Verify {
        suite: Vec<String>,
        timing: bool,
    },
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    /// Absent only for `verify`.
    pub generator: Option<GeneratorSpec>,
    pub grid_points: usize,
    pub n: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| usage(format!("malformed config: {e}")))
    }
}

fn parse_f64(token: &str, what: &str) -> Result<f64, CliError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("invalid {what} '{token}'")))
}

fn parse_level(token: &str) -> Result<f64, CliError> {
    let x = parse_f64(token, "level")?;
    if !(x < 0.0 && x.is_finite()) {
        return Err(usage(format!("level must be negative, got '{token}'")));
    }
    Ok(x)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(|t| parse_f64(t, what)).collect()
}

fn parse_interval(text: &str) -> Result<Interval, CliError> {
    match parse_list(text, "interval endpoint")?.as_slice() {
        [lo, hi] => Interval::new(*lo, *hi).map_err(|e| usage(format!("'{text}': {e}"))),
        _ => Err(usage(format!("interval '{text}' must be LO,HI"))),
    }
}

fn load_generator(path: &Path) -> Result<GeneratorSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read generator '{}': {e}", path.display())))?;
    let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| {
        usage(format!(
            "malformed generator JSON '{}': {e}",
            path.display()
        ))
    })?;
    validate_spec(&spec).map_err(|e| usage(format!("'{}': {e}", path.display())))?;
    Ok(spec)
}

fn require_generator(common: &Common) -> Result<GeneratorSpec, CliError> {
    match &common.generator {
        Some(p) => load_generator(p),
        None => Err(usage("missing --generator FILE")),
    }
}

fn level_shape(arg: &str) -> Result<LevelShape, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)
            .map_err(|e| usage(format!("cannot read level function '{arg}': {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed level function '{arg}': {e}")))
}

/// Parses and validates argv (including the program name).
///
/// Parameter checks run before the generator file is read, so a bad level
/// is reported even when no generator is given.
pub fn parse_invocation<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
        _ => usage(e.to_string()),
    })?;
    let (command, common, needs_generator) = match cli.command {
        Cmd::Simulate { common, k } => {
            if k == 0 {
                return Err(usage("--k must be at least 1"));
            }
            (Command::Simulate { k }, common, true)
        }
        Cmd::Dnorm {
            common,
            f,
            interval,
        } => {
            let interval = interval.as_deref().map(parse_interval).transpose()?;
            let f = f.as_deref().map(level_shape).transpose()?;
            if f.is_none() && interval.is_none() {
                return Err(usage("dnorm needs --f or --interval"));
            }
            (Command::Dnorm { f, interval }, common, true)
        }
        Cmd::Hitting {
            common,
            x,
            levels,
            level_count,
            interval,
        } => {
            let mut levels = match (x, levels, level_count) {
                (Some(x), _, _) => vec![parse_level(&x)?],
                (_, Some(list), _) => list.split(',').map(parse_level).collect::<Result<_, _>>()?,
                (_, _, Some(count)) => default_levels(count, DEFAULT_X_MIN)
                    .map_err(|e| usage(format!("--level-count {count}: {e}")))?,
                _ => return Err(usage("hitting needs --x, --levels or --level-count")),
            };
            levels.sort_by(|a, b| b.total_cmp(a));
            if levels.windows(2).any(|w| w[0] == w[1]) {
                return Err(usage("levels must be distinct"));
            }
            let interval = match interval {
                Some(text) => parse_interval(&text)?,
                None => Interval::unit(),
            };
            (Command::Hitting { levels, interval }, common, true)
        }
        Cmd::Multihit {
            common,
            x,
            t0,
            times,
            intervals,
            k,
        } => {
            let x0 = parse_level(&x)?;
            let query = match (t0, times, intervals) {
                (Some(t0), _, _) => {
                    if !(t0 > 0.0 && t0 < 1.0) {
                        return Err(usage(format!("--t0 {t0} must lie in (0, 1)")));
                    }
                    MultiHit::Split { x0, t0 }
                }
                (_, Some(text), _) => match parse_list(&text, "time")?.as_slice() {
                    [t_lo, t_mid, t_hi]
                        if 0.0 <= *t_lo && t_lo < t_mid && t_mid < t_hi && *t_hi <= 1.0 =>
                    {
                        MultiHit::Triple {
                            x0,
                            t_lo: *t_lo,
                            t_mid: *t_mid,
                            t_hi: *t_hi,
                        }
                    }
                    _ => {
                        return Err(usage(format!(
                            "--times '{text}' must be increasing T1,T0,T2 in [0, 1]"
                        )))
                    }
                },
                (_, _, Some(text)) => {
                    let intervals = text
                        .split(';')
                        .map(parse_interval)
                        .collect::<Result<Vec<_>, _>>()?;
                    check_disjoint(&intervals)
                        .map_err(|e| usage(format!("--intervals '{text}': {e}")))?;
                    if let Some(k) = k {
                        if k != intervals.len() {
                            return Err(usage(format!(
                                "--k {k} but {} intervals given",
                                intervals.len()
                            )));
                        }
                    }
                    MultiHit::Intervals { x0, intervals }
                }
                _ => return Err(usage("multihit needs --t0, --times or --intervals")),
            };
            (Command::Multihit { query }, common, true)
        }
        Cmd::Verify {
            common,
            suite,
            no_timing,
        } => {
            let ids: Vec<String> = suite.split(',').map(|s| s.trim().to_string()).collect();
            verify::resolve_suite(&ids).map_err(|e| usage(e.to_string()))?;
            (
                Command::Verify {
                    suite: ids,
                    timing: !no_timing,
                },
                common,
                false,
            )
        }
    };
    if common.grid < 2 {
        return Err(usage(format!("--grid {} must be at least 2", common.grid)));
    }
    if common.n < 2 {
        return Err(usage(format!("--n {} must be at least 2", common.n)));
    }
    if common.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let generator = if needs_generator {
        Some(require_generator(&common)?)
    } else {
        None
    };
    Ok(RunConfig {
        command,
        generator,
        grid_points: common.grid,
        n: common.n,
        seed: common.seed,
        out: common.out,
        threads: common.threads,
    })
}

/// Formats with 17 significant digits in positional notation, which
/// round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-30..=16).contains(&exp) {
        format!("{v:.*}", (16 - exp).max(0) as usize)
    } else {
        format!("{v:.16e}")
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            fs::write(p, body).map_err(|e| run_err(format!("cannot write '{}': {e}", p.display())))
        }
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| run_err(format!("cannot write to stdout: {e}"))),
    }
}

#[derive(Serialize)]
struct DnormOutput<'a> {
    generator: &'a GeneratorSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<&'a LevelShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval: Option<Interval>,
    estimate: DNormEstimate,
}

#[derive(Serialize)]
struct MultihitOutput<'a> {
    generator: &'a GeneratorSpec,
    query: &'a MultiHit,
    estimate: Estimate,
}

/// Runs a validated configuration. Returns whether the run succeeded (a
/// verification report with a failing check is not a success).
pub fn dispatch(config: &RunConfig) -> Result<bool, CliError> {
    if let Some(t) = config.threads {
        // Ignored if a global pool already exists (repeated in-process calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let out = config.out.as_deref();
    let grid = make_grid(config.grid_points).map_err(|e| usage(e.to_string()))?;
    let spec = config.generator.as_ref();
    let need_spec = || spec.ok_or_else(|| usage("missing --generator FILE"));
    match &config.command {
        Command::Simulate { k } => {
            let sampler = MspSampler::new(need_spec()?, &grid).map_err(run_err)?;
            let paths = rng::try_replicate(*k, config.seed, |s| sampler.sample_values(s))
                .map_err(run_err)?;
            let mut csv = String::from("t");
            for i in 0..*k {
                csv.push_str(&format!(",path_{i}"));
            }
            csv.push('\n');
            for (j, t) in grid.points().iter().enumerate() {
                csv.push_str(&fmt17(*t));
                for p in &paths {
                    csv.push(',');
                    csv.push_str(&fmt17(p[j]));
                }
                csv.push('\n');
            }
            write_output(out, &csv)?;
        }
        Command::Dnorm { f, interval } => {
            let spec = need_spec()?;
            let estimate = match (f, interval) {
                (Some(shape), _) => {
                    let f = LevelFunction::new(shape.clone(), &grid)
                        .map_err(|e| usage(e.to_string()))?;
                    dnorm_estimate(spec, &f, config.n, config.seed)
                }
                (None, Some(i)) => dnorm_indicator(spec, *i, &grid, config.n, config.seed),
                (None, None) => return Err(usage("dnorm needs --f or --interval")),
            }
            .map_err(run_err)?;
            let body = DnormOutput {
                generator: spec,
                f: f.as_ref(),
                interval: *interval,
                estimate,
            };
            write_output(
                out,
                &(serde_json::to_string_pretty(&body).map_err(run_err)? + "\n"),
            )?;
        }
        Command::Hitting { levels, interval } => {
            let spec = need_spec()?;
            let moments = closed_form_m(spec).zip(closed_form_m_tilde(spec));
            let curve = hitting_curve(
                spec,
                levels,
                *interval,
                &grid,
                config.n,
                config.seed,
                moments,
            )
            .map_err(run_err)?;
            let mut csv = String::from("x,estimate,ci_lo,ci_hi,bound\n");
            for ((x, e), b) in curve
                .levels
                .iter()
                .zip(&curve.estimates)
                .zip(&curve.upper_bounds)
            {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt17(*x),
                    fmt17(e.value),
                    fmt17(e.ci_lo),
                    fmt17(e.ci_hi),
                    fmt17(*b)
                ));
            }
            write_output(out, &csv)?;
        }
        Command::Multihit { query } => {
            let spec = need_spec()?;
            let (n, seed) = (config.n, config.seed);
            let estimate = match query {
                MultiHit::Split { x0, t0 } => two_hit_prob(
                    spec,
                    &MultiHitQuery::Split { x0: *x0, t0: *t0 },
                    &grid,
                    n,
                    seed,
                ),
                MultiHit::Triple {
                    x0,
                    t_lo,
                    t_mid,
                    t_hi,
                } => down_up_down_prob(
                    spec,
                    &MultiHitQuery::Triple {
                        x0: *x0,
                        t_lo: *t_lo,
                        t_mid: *t_mid,
                        t_hi: *t_hi,
                    },
                    &grid,
                    n,
                    seed,
                ),
                MultiHit::Intervals { x0, intervals } => {
                    multi_hit_prob(spec, *x0, intervals, &grid, n, seed)
                }
            }
            .map_err(|e| match e {
                mshit_core::Error::InvalidArgument(msg) => usage(msg),
                other => run_err(other),
            })?;
            let body = MultihitOutput {
                generator: spec,
                query,
                estimate,
            };
            write_output(
                out,
                &(serde_json::to_string_pretty(&body).map_err(run_err)? + "\n"),
            )?;
        }
        Command::Verify { suite, timing } => {
            let opts = RunOptions {
                n_default: config.n,
                grid_points: config.grid_points,
                timing: *timing,
            };
            let report = verify::run_checks(suite, config.seed, &opts).map_err(run_err)?;
            write_output(out, &(report.to_json() + "\n"))?;
            return Ok(report.pass);
        }
    }
    Ok(true)
}
