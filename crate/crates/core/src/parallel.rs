//! Data-parallel mapping over trial indices, with a sequential fallback
//! when the `parallel` feature is disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, preserving index order in the output. `workers`
/// bounds the thread count; `None` uses all available cores and `Some(1)`
/// runs sequentially. Without the `parallel` feature everything runs
/// sequentially and `workers` is ignored.
pub fn par_map<T, F>(n: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(1) => (0..n).map(f).collect(),
            Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
            None => (0..n).into_par_iter().map(&f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_deterministic() {
        let a = par_map(100, None, |i| i * i);
        let b = par_map(100, Some(1), |i| i * i);
        assert_eq!(a, b);
    }
}
