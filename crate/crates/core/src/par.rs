//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the node loops and sample suites run on the
//! rayon pool; without it the same closures run on plain iterators. Small
//! node counts stay sequential either way since the per-node work is a few
//! hundred flops. Reductions never use the parallel pool: values are
//! collected in index order and summed pairwise so results do not depend
//! on the thread count.

/// Node counts below this run sequentially even when `parallel` is enabled.
pub const PAR_THRESHOLD: usize = 2048;

#[cfg(feature = "parallel")]
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if len < PAR_THRESHOLD {
        (0..len).map(f).collect()
    } else {
        (0..len).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Fan out over independent tasks (runs, samples), keeping input order.
#[cfg(feature = "parallel")]
pub fn map_tasks<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_tasks<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync + Send,
{
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// Pairwise (cascade) summation in fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Caps the global worker pool. Returns false if the pool was already built.
#[cfg(feature = "parallel")]
pub fn init_threads(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn init_threads(_threads: usize) -> bool {
    false
}

/// Reads `CAPFLOW_THREADS` and caps the pool accordingly.
pub fn init_from_env() {
    if let Some(n) = std::env::var("CAPFLOW_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        init_threads(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_sum_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn map_indices_keeps_order_above_threshold() {
        let v = map_indices(PAR_THRESHOLD * 2, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
