//! Batch execution over an index range, with a rayon backend when the
//! `parallel` feature is enabled.
//!
//! Results always come back in index order, so anything folded from them
//! afterwards is independent of scheduling and thread count.

/// How to run independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Falls back to sequential execution when built without `parallel`.
    #[default]
    Parallel,
}

impl ExecPolicy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Evaluates `f(0), f(1), ..., f(n - 1)` and returns the results in order.
pub fn map_range<T, F>(policy: ExecPolicy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..n).map(f).collect()
}
