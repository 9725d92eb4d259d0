//! Deterministic parallel helpers.
//!
//! Every helper here writes each output element exactly once and keeps any
//! reduction in a fixed association order, so results are bit-identical
//! regardless of the rayon thread count.

use rayon::prelude::*;

/// Fill a vector of length `len` with `f(i)`, in parallel.
pub(crate) fn par_fill(len: usize, f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
    let mut out = vec![0.0; len];
    out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    out
}

/// Run `f(slab_index, slab)` over disjoint consecutive slabs of `out`.
///
/// `out.len()` must be a multiple of `slab_len`.
pub(crate) fn par_slabs(out: &mut [f64], slab_len: usize, f: impl Fn(usize, &mut [f64]) + Sync) {
    debug_assert_eq!(out.len() % slab_len, 0);
    out.par_chunks_mut(slab_len)
        .enumerate()
        .for_each(|(k, slab)| f(k, slab));
}
