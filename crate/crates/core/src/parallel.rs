use rayon::prelude::*;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "OFFGRID_WORKERS";

/// Worker count from [`WORKERS_ENV`]; 1 when unset or unparsable.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// `(0..n).map(f)` evaluated on the configured number of workers. Output
/// order is the index order regardless of scheduling.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let workers = worker_count();
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}
