//! Work distribution: rayon when the `parallel` feature is enabled,
//! otherwise plain sequential loops.  Callers that want to benchmark the
//! sequential path directly can force it per call.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of range chunks worth producing for a balanced parallel sweep.
pub(crate) fn default_chunks() -> u64 {
    #[cfg(feature = "parallel")]
    {
        (rayon::current_num_threads() as u64) * 4
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Splits `0..total` into at most `chunks` half-open ranges covering it.
pub(crate) fn split_ranges(total: u64, chunks: u64) -> Vec<(u64, u64)> {
    if total == 0 {
        return Vec::new();
    }
    let chunks = chunks.clamp(1, total);
    let base = total / chunks;
    let extra = total % chunks;
    let mut out = Vec::with_capacity(chunks as usize);
    let mut start = 0;
    for i in 0..chunks {
        let len = base + u64::from(i < extra);
        out.push((start, start + len));
        start += len;
    }
    out
}

/// Applies `f` to each range, preserving order of results.
pub(crate) fn map_ranges<R, F>(ranges: &[(u64, u64)], force_sequential: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, u64) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !force_sequential {
            return ranges.par_iter().map(|&(a, b)| f(a, b)).collect();
        }
    }
    let _ = force_sequential;
    ranges.iter().map(|&(a, b)| f(a, b)).collect()
}

/// Applies `f` to each item, preserving order of results.
pub(crate) fn map_items<T, R, F>(items: &[T], force_sequential: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !force_sequential {
            return items.par_iter().map(&f).collect();
        }
    }
    let _ = force_sequential;
    items.iter().map(f).collect()
}
