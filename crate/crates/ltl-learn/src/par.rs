//! Data-parallel helpers with a sequential fallback.
//!
//! Built with the `parallel` feature (default) these fan out over rayon;
//! without it they run sequentially with identical results. Callers always
//! receive outputs in input order, so reductions stay deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, collecting in order.
pub fn map_slice<T: Sync, U: Send, F>(xs: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        xs.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().map(f).collect()
    }
}

/// Map over `0..n`, collecting in order.
pub fn map_range<U: Send, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Cap the global worker pool; 0 leaves the default. No-op sequentially.
pub fn limit_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        if jobs > 0 {
            // Ignore the error if a pool was already installed.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
    }
}
