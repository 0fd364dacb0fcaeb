//! Fixtures shared by the benchmarks.

use lres_core::{c64, CanonicalSystem, C64};

/// A fresh random system, so monodromy memoization does not leak between iterations.
pub fn fresh_system(segments: usize) -> CanonicalSystem {
    CanonicalSystem::random(7, 2, segments).expect("random system")
}

pub fn sample_point() -> C64 {
    c64(0.7, 1.3)
}
