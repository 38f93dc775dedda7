#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How pixel loops are scheduled.
///
/// `Parallel` uses the rayon thread pool when the crate is built with the
/// `parallel` feature and silently degrades to `Sequential` otherwise.
/// Outputs never depend on the choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work on more than one thread.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Runs `f(state, row_index, row)` over every `row_len`-sized row of `data`.
/// `init` creates per-worker scratch state.
pub(crate) fn for_each_row<T, S, I, F>(exec: Execution, data: &mut [T], row_len: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize, &mut [T]) + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => data
            .par_chunks_mut(row_len)
            .enumerate()
            .for_each_init(init, |s, (y, row)| f(s, y, row)),
        _ => {
            let mut s = init();
            for (y, row) in data.chunks_mut(row_len).enumerate() {
                f(&mut s, y, row);
            }
        }
    }
}

/// Maps `f` over `0..n` and returns results in index order.
pub(crate) fn map_ordered<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Splits `0..len` into contiguous ranges whose boundaries depend only on
/// `len`, never on the thread count, so reductions over the ranges are
/// bit-reproducible.
pub(crate) fn fixed_ranges(len: usize, max_chunks: usize) -> Vec<std::ops::Range<usize>> {
    let chunk = len.div_ceil(max_chunks.max(1)).max(1);
    (0..len)
        .step_by(chunk)
        .map(|s| s..(s + chunk).min(len))
        .collect()
}
