//! Adaptive summation over positive Matsubara indices.

use rayon::prelude::*;

use crate::error::{Error, Result};

const BATCH: usize = 16;
const QUIET_TERMS: usize = 5;
const MAX_TERMS: usize = 2_000_000;

/// Outcome of [`sum_positive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEnd {
    /// Last index absorbed.
    pub n_max: usize,
    /// Geometric estimate of `sum_{n > n_max} |term(n)|`.
    pub tail: f64,
}

/// Evaluates `term(n)` for `n = 1, 2, ...` in fixed-size parallel batches and
/// hands them to `absorb` strictly in index order. `absorb` returns the
/// magnitude of the term and the running total it was compared against;
/// summation stops after five consecutive terms below `tolerance` relative.
///
/// The batch size does not depend on the thread count, so the result is
/// bitwise reproducible.
pub fn sum_positive<T, F, A>(term: F, mut absorb: A, tolerance: f64) -> Result<SeriesEnd>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
    A: FnMut(&T) -> (f64, f64),
{
    let mut quiet = 0;
    let mut last = [0.0f64; 2];
    let mut next = 1;
    loop {
        if next > MAX_TERMS {
            return Err(Error::config(format!("Matsubara sum not converged after {MAX_TERMS} terms")));
        }
        let batch: Vec<Result<T>> = (next..next + BATCH).into_par_iter().map(&term).collect();
        for (i, t) in batch.into_iter().enumerate() {
            let (size, total) = absorb(&t?);
            last = [last[1], size.abs()];
            if size.abs() <= tolerance * total.abs() {
                quiet += 1;
                if quiet >= QUIET_TERMS {
                    let ratio = if last[0] > 0.0 { (last[1] / last[0]).min(0.999) } else { 0.0 };
                    return Ok(SeriesEnd { n_max: next + i, tail: last[1] * ratio / (1.0 - ratio) });
                }
            } else {
                quiet = 0;
            }
        }
        next += BATCH;
    }
}
