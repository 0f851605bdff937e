//! Time grids on [0, 1], sample paths and level-crossing analysis.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Number of grid points used when the caller does not choose one.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Tolerance for matching a requested time against a grid point.
const ON_GRID_TOL: f64 = 1e-12;

/// A strictly increasing set of times starting at 0 and ending at 1.
///
/// Cloning is cheap; the points are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Arc<[f64]>,
}

impl TimeGrid {
    /// `n` equally spaced points including both endpoints.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n}")));
        }
        let last = (n - 1) as f64;
        let points: Vec<f64> = (0..n).map(|i| i as f64 / last).collect();
        Ok(TimeGrid {
            points: points.into(),
        })
    }

    /// Grid from explicit points; checks the invariants.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("grid needs at least 2 points"));
        }
        if points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(invalid("grid must start at 0 and end at 1"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid points must be strictly increasing"));
        }
        Ok(TimeGrid {
            points: points.into(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the grid point equal to `t` (within 1e-12), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.nearest_index(t);
        ((self.points[i] - t).abs() <= ON_GRID_TOL).then_some(i)
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let p = &self.points;
        let i = p.partition_point(|&x| x < t);
        if i == 0 {
            0
        } else if i == p.len() {
            p.len() - 1
        } else if (t - p[i - 1]) <= (p[i] - t) {
            i - 1
        } else {
            i
        }
    }

    /// Index of `t`, or an invalid-argument error naming it.
    pub fn require_index(&self, t: f64, what: &str) -> Result<usize> {
        self.index_of(t)
            .ok_or_else(|| invalid(format!("{what} {t} is not a grid point")))
    }

    /// Inclusive index range covering `interval`; both endpoints must be grid
    /// points.
    pub fn interval_range(&self, interval: Interval) -> Result<Range<usize>> {
        let lo = self.require_index(interval.lo, "interval endpoint lo =")?;
        let hi = self.require_index(interval.hi, "interval endpoint hi =")?;
        Ok(lo..hi + 1)
    }

    /// Moves both endpoints to their nearest grid points. Returns the snapped
    /// interval; it may collapse if the grid is coarser than the interval.
    pub fn snap(&self, interval: Interval) -> Result<Interval> {
        let lo = self.points[self.nearest_index(interval.lo)];
        let hi = self.points[self.nearest_index(interval.hi)];
        Interval::new(lo, hi)
    }
}

/// `make_grid`: `n` equally spaced points on [0, 1].
pub fn make_grid(n: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(n)
}

/// A closed subinterval `[lo, hi]` of [0, 1] with positive length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid(format!(
                "interval [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Values of a continuous process on (a contiguous part of) a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    offset: usize,
    values: Vec<f64>,
}

impl SamplePath {
    /// Path over the whole grid.
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "path has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("path value at index {i} is not finite")));
        }
        Ok(SamplePath {
            grid,
            offset: 0,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The times at which the values are recorded.
    pub fn times(&self) -> &[f64] {
        &self.grid.points()[self.offset..self.offset + self.values.len()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sub-path on the grid points inside `interval`, endpoints included.
pub fn restrict(path: &SamplePath, interval: Interval) -> Result<SamplePath> {
    let range = path.grid.interval_range(interval)?;
    let own = path.offset..path.offset + path.values.len();
    if range.start < own.start || range.end > own.end {
        return Err(invalid(format!(
            "interval [{}, {}] is outside the path's time range",
            interval.lo, interval.hi
        )));
    }
    Ok(SamplePath {
        grid: path.grid.clone(),
        offset: range.start,
        values: path.values[range.start - own.start..range.end - own.start].to_vec(),
    })
}

/// Grid minimum and maximum.
pub fn path_extrema(path: &SamplePath) -> (f64, f64) {
    extrema(path.values())
}

/// Minimum and maximum of a nonempty slice.
pub fn extrema(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "extrema of an empty path");
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Whether a continuous path through these grid values attains `x`, and a
/// lower bound on how many separate times it does so.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitSummary {
    pub hit: bool,
    pub cluster_count: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Touch,
    Above,
}

/// Level-crossing summary of a path at level `x`.
///
/// `hit` follows the intermediate value theorem: `min <= x <= max`.
/// Clusters: every maximal run of grid values equal to `x` is one cluster,
/// and every direct step between a value below `x` and a value above `x`
/// is one cluster. Oscillations between grid points are invisible, so the
/// count is a lower bound on the number of solution times.
pub fn level_hits(path: &SamplePath, x: f64) -> HitSummary {
    level_hits_values(path.values(), x)
}

/// [`level_hits`] on raw values.
pub fn level_hits_values(values: &[f64], x: f64) -> HitSummary {
    let side = |v: f64| {
        if v < x {
            Side::Below
        } else if v > x {
            Side::Above
        } else {
            Side::Touch
        }
    };
    let mut clusters = 0;
    let mut prev: Option<Side> = None;
    for &v in values {
        let s = side(v);
        match (prev, s) {
            (Some(p), s) if p == s => {}
            (_, Side::Touch) => clusters += 1,
            (Some(Side::Below), Side::Above) | (Some(Side::Above), Side::Below) => clusters += 1,
            _ => {}
        }
        prev = Some(s);
    }
    HitSummary {
        hit: clusters > 0,
        cluster_count: clusters,
    }
}

/// Whether the path meets the function `f` (given on the same points)
/// somewhere, by the same rule applied to `path - f` at level 0.
pub fn function_hits(values: &[f64], f: &[f64]) -> HitSummary {
    assert_eq!(values.len(), f.len());
    let diff: Vec<f64> = values.iter().zip(f).map(|(v, g)| v - g).collect();
    level_hits_values(&diff, 0.0)
}

/// `min <= x <= max` on a slice; the `hit` part of [`level_hits_values`]
/// without the cluster scan.
#[inline]
pub fn hits_level(values: &[f64], x: f64) -> bool {
    let (lo, hi) = extrema(values);
    lo <= x && x <= hi
}
