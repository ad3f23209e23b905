//! Deterministic fan-out over index ranges.
//!
//! Work is split into chunks whose boundaries depend only on the input, and
//! partial results are folded in chunk order. Output is therefore identical
//! for any rayon worker count, and identical to the sequential build
//! (`--no-default-features`).

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps fixed-size index chunks and folds the partial results in order.
pub(crate) fn map_reduce_chunks<T, M, F>(len: u64, chunk_size: u64, map: M, fold: F, init: T) -> T
where
    T: Send,
    M: Fn(Range<u64>) -> T + Send + Sync,
    F: FnMut(T, T) -> T,
{
    assert!(chunk_size > 0);
    let mut ranges = Vec::new();
    let mut lo = 0u64;
    while lo < len {
        let hi = (lo + chunk_size).min(len);
        ranges.push(lo..hi);
        lo = hi;
    }
    #[cfg(feature = "parallel")]
    let parts: Vec<T> = ranges.into_par_iter().map(&map).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<T> = ranges.into_iter().map(&map).collect();
    parts.into_iter().fold(init, fold)
}

/// Order-preserving map over `0..len` (one item per index).
pub(crate) fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
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
