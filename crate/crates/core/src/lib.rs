//! Simulation of standard max-stable processes from generator processes,
//! Monte Carlo estimation of D-norms and level-hitting probabilities, and a
//! suite of numerical checks of the associated closed forms and bounds.
//!
//! The process `η` has margins `P(η_t <= x) = e^x` for `x <= 0` and
//! finite-dimensional laws `P(η_t <= f(t) for all t) = exp(-‖f‖_D)` with
//! `‖f‖_D = E sup_t |f(t)| Z_t`, where `Z` is a generator from
//! [`generators`].

// Argument checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dnorm;
pub mod error;
pub mod generators;
pub mod hitting;
pub mod msp;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod verify;

pub use dnorm::{DNormEstimate, LevelFunction, LevelShape};
pub use error::{Error, Result};
pub use generators::{GeneratorMoments, GeneratorSpec};
pub use paths::{HitSummary, Interval, SamplePath, TimeGrid};
pub use stats::Estimate;
pub use verify::{CheckReport, CheckResult, RunOptions};
