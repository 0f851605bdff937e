//! Benchmark fixtures. The benchmarks themselves live in `benches/`.

use mshit_core::paths::{make_grid, DEFAULT_GRID_POINTS};
use mshit_core::{GeneratorSpec, TimeGrid};

/// The default 1001-point grid.
pub fn default_grid() -> TimeGrid {
    make_grid(DEFAULT_GRID_POINTS).expect("default grid is valid")
}

/// Every catalogue generator with its name.
pub fn generators() -> Vec<(&'static str, GeneratorSpec)> {
    GeneratorSpec::catalogue()
        .into_iter()
        .map(|s| (s.name(), s))
        .collect()
}
