//! Data-parallel helpers.
//!
//! With the `parallel` feature (the default) the helpers fan work out over the
//! rayon pool; [`set_parallel`] switches back to the sequential path at run
//! time, which the benches use to compare both. Without the feature every
//! helper runs sequentially. Both paths produce results in index order, so the
//! output never depends on scheduling.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::Result;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable the parallel path at run time.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

/// Whether the helpers currently fan out over worker threads.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Evaluate `f(0..n)` and collect the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel_enabled() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; returns the first error by index.
pub fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

/// Size the global worker pool. Has no effect without the `parallel` feature
/// or after the pool has started.
pub fn init_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| crate::error::Error::InvalidParameter(e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
