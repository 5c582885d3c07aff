//! Execution backend: data-parallel map with a sequential fallback.
//!
//! Row scoring and trial execution are embarrassingly parallel; everything
//! order-sensitive (reductions, RNG draws, aggregation) stays sequential so
//! results do not depend on the backend. `map_indexed` preserves input order
//! in its output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Send + Sync>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Send + Sync>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Name of the active backend, for run logs.
pub fn backend() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}
