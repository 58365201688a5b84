//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over rayon's pool; without
//! it the same chunks run in order on the calling thread. Reductions sum each
//! fixed-size chunk independently and then fold the chunk sums left to right,
//! so both builds (and every thread count) produce bit-identical results.

use std::ops::{Add, Range};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by every reduction in the crate.
pub const CHUNK: usize = 1 << 12;

fn chunk_ranges(len: usize) -> impl Fn(usize) -> Range<usize> {
    move |c| {
        let start = c * CHUNK;
        start..(start + CHUNK).min(len)
    }
}

/// Sums `f(range)` over consecutive chunks of `0..len`.
pub fn chunked_sum<T, F>(len: usize, zero: T, f: F) -> T
where
    T: Copy + Send + Add<Output = T>,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let nchunks = len.div_ceil(CHUNK);
    let range = chunk_ranges(len);
    #[cfg(feature = "parallel")]
    let partials: Vec<T> = (0..nchunks).into_par_iter().map(|c| f(range(c))).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<T> = (0..nchunks).map(|c| f(range(c))).collect();
    partials.into_iter().fold(zero, |acc, x| acc + x)
}

/// `out[i] = f(i)`.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(base + k);
            }
        });
    #[cfg(not(feature = "parallel"))]
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Fills `out` chunk by chunk; `f` receives the chunk's starting index and
/// the chunk itself, so it can keep per-chunk scratch state.
pub fn fill_chunks<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    #[cfg(not(feature = "parallel"))]
    for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
        f(c * CHUNK, chunk);
    }
}

/// `(0..len).map(f).collect()`, order preserved. Intended for coarse work
/// items such as one codeword or one sample each.
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
