//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! run the same closures in a plain loop. Reductions always split the index
//! range into fixed-size chunks and combine the per-chunk partials in chunk
//! order, so floating-point results are bit-identical for every thread count
//! and for both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elements per reduction chunk. Part of the numeric contract: changing it
/// changes the summation tree and therefore low-order bits of every loss.
pub const CHUNK: usize = 4096;

/// Sum `f(i)` over `0..len` with a fixed reduction tree.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    sum_chunks(len, |range| range.map(&f).sum())
}

/// Sum of per-chunk partials; `f` receives each chunk's index range.
pub fn sum_chunks<F>(len: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync + Send,
{
    partials(len, f).into_iter().sum()
}

/// Per-chunk partial results in chunk order.
pub fn partials<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let n_chunks = len.div_ceil(CHUNK);
    let chunk = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(len);
    #[cfg(feature = "parallel")]
    {
        (0..n_chunks).into_par_iter().map(|c| f(chunk(c))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(|c| f(chunk(c))).collect()
    }
}

/// Build a vector of `len` elements from `f(i)`.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Apply `f(line_index, line)` to consecutive `line_len`-sized slices of `data`.
pub fn for_each_line_mut<T, F>(data: &mut [T], line_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(line_len)
            .enumerate()
            .for_each(|(i, line)| f(i, line));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(line_len)
            .enumerate()
            .for_each(|(i, line)| f(i, line));
    }
}

/// Run `f` with at most `workers` threads (0 = library default).
///
/// Outputs never depend on `workers`; only wall time does.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
