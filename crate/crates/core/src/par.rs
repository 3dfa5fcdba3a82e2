//! Data-parallel helpers. With the `parallel` feature the closures run on the
//! current rayon pool; a pool of one thread (or the feature disabled) takes the
//! plain sequential path. Both paths evaluate every index independently, so
//! results are identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rayon::current_num_threads() > 1 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rayon::current_num_threads() > 1 {
            items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
    }
    items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Runs `f` with at most `threads` workers. `threads == 0` uses the global
/// pool unchanged.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => return pool.install(f),
                Err(e) => log::warn!("could not build a {threads}-thread pool: {e}"),
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}
