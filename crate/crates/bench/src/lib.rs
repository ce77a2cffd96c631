//! Shared fixtures for the solver benchmarks.

use svie_core::{example_coefficients, CoefficientSet, NoisePath, SeedLineage, TimeGrid};

/// Example set with `c = 0.1` and jump rate 2 on `[0, 0.5]`.
pub fn example_set() -> CoefficientSet {
    example_coefficients(0.1, 2.0).expect("valid example constants")
}

pub fn grid(steps: usize) -> TimeGrid {
    TimeGrid::new(0.5, steps).expect("valid grid")
}

/// One noise path of the example measure on `grid(steps)`.
pub fn fixed_noise(set: &CoefficientSet, steps: usize) -> NoisePath {
    NoisePath::sample(&grid(steps), set.measure(), SeedLineage::new(42, 0))
}
