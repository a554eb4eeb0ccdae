//! Trial-level parallelism.
//!
//! Results always come back in trial order, so reductions are identical
//! whether trials run on the pool or on the calling thread.

use serde::{Deserialize, Serialize};

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "HOLO_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    /// Rayon pool when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `0..n` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`] but stops at the error with the smallest index.
pub fn try_map_indexed<T, E, F>(n: usize, mode: ExecMode, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, mode, f).into_iter().collect()
}

/// Reads the worker cap from `HOLO_THREADS`. Unset, empty or zero means no cap.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(format!("{THREADS_ENV} must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(None),
    }
}

/// Sizes the global pool. Only the first call has an effect; later calls
/// and builds without the `parallel` feature are no-ops.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let par = map_indexed(100, ExecMode::Parallel, |i| i * i);
        let seq = map_indexed(100, ExecMode::Sequential, |i| i * i);
        assert_eq!(par, seq);
        assert_eq!(par[7], 49);
    }

    #[test]
    fn first_error_wins() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(50, ExecMode::Parallel, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
