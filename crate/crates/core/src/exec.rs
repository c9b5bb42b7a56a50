//! Data-parallel helpers. With the `parallel` feature the maps run on the
//! rayon pool; without it they are plain sequential loops. Results are
//! always returned in index order, so reductions downstream are
//! deterministic regardless of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Fallible [`map_indexed`]; returns the first error encountered.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
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

/// Caps the global worker pool. Must be called before any parallel work;
/// a no-op without the `parallel` feature.
pub fn init_threads(threads: usize) -> Result<(), String> {
    if threads == 0 {
        return Err("thread count must be positive".into());
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(())
    }
}

/// Number of worker threads parallel maps will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let v = map_indexed(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }

    #[test]
    fn try_map_reports_error() {
        let r: Result<Vec<usize>, usize> = try_map_indexed(100, |i| if i == 57 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(57));
        assert!(init_threads(0).is_err());
    }
}
