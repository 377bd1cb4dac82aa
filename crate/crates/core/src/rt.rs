//! Execution shim: data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (the default) work is spread over a rayon
//! pool; without it the same entry points run sequentially, which is useful
//! for minimal builds and for timing comparisons. Both paths return results
//! in input order, and every randomized workload in the crate keys its
//! generators by item index rather than by worker, so results are identical
//! whichever path runs and however many threads the pool has.

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    items.into_iter().map(f).collect()
}

/// Run `f` inside a pool of `threads` workers (`None` uses the global
/// default). Without the `parallel` feature the thread count is ignored.
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool construction")
            .install(f),
    }
}

/// Run `f` inside a pool of `threads` workers (`None` uses the global
/// default). Without the `parallel` feature the thread count is ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let _ = threads;
    f()
}
