//! Exact Euclidean distance transform, anisotropic-spacing aware.
//!
//! Distances are measured voxel center to voxel center with no half-voxel
//! offset: this is the classic transform of a sampled binary image, and it
//! carries the quantization that makes its second derivatives unusable for
//! curvature. The per-axis lower-envelope propagation (squared distances,
//! one parabola sweep per axis) is exact; the brute-force pairwise scan
//! lives in the tests as the oracle.

use crate::grid::{Dims3, Spacing3};

/// Squared Euclidean distance from every voxel center to the nearest
/// voxel center where `source` is true.
///
/// Returns `f64::INFINITY` everywhere when `source` never holds.
pub(crate) fn squared_distance_to(source: &[bool], dims: Dims3, spacing: Spacing3) -> Vec<f64> {
    let (nx, ny, nz) = (dims.nx, dims.ny, dims.nz);
    let mut d: Vec<f64> = source
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();

    let max_n = nx.max(ny).max(nz);
    let mut line = vec![0.0; max_n];
    let mut out = vec![0.0; max_n];
    let mut v = vec![0usize; max_n];
    let mut z = vec![0.0; max_n + 1];

    // x lines
    for k in 0..nz {
        for j in 0..ny {
            let base = dims.index(0, j, k);
            line[..nx].copy_from_slice(&d[base..base + nx]);
            lower_envelope(&line[..nx], spacing.hx, &mut out[..nx], &mut v, &mut z);
            d[base..base + nx].copy_from_slice(&out[..nx]);
        }
    }
    // y lines
    for k in 0..nz {
        for i in 0..nx {
            for j in 0..ny {
                line[j] = d[dims.index(i, j, k)];
            }
            lower_envelope(&line[..ny], spacing.hy, &mut out[..ny], &mut v, &mut z);
            for j in 0..ny {
                d[dims.index(i, j, k)] = out[j];
            }
        }
    }
    // z lines
    for j in 0..ny {
        for i in 0..nx {
            for k in 0..nz {
                line[k] = d[dims.index(i, j, k)];
            }
            lower_envelope(&line[..nz], spacing.hz, &mut out[..nz], &mut v, &mut z);
            for k in 0..nz {
                d[dims.index(i, j, k)] = out[k];
            }
        }
    }
    d
}

/// 1D pass: `out[p] = min_q f[q] + ((p-q)*h)^2`.
///
/// Parabolas with infinite height are skipped; if every entry is infinite
/// the output is infinite too.
fn lower_envelope(f: &[f64], h: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    // intersection abscissa of the parabolas rooted at samples q and p;
    // finite whenever q > p and both heights are finite
    let intersect = |q: usize, p: usize| -> f64 {
        let xq = q as f64 * h;
        let xp = p as f64 * h;
        ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp))
    };

    let mut k = 0usize;
    let mut started = false;
    for (q, fq) in f.iter().enumerate() {
        if fq.is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if !started {
        out[..n].fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (p, o) in out.iter_mut().enumerate().take(n) {
        let xp = p as f64 * h;
        while z[k + 1] < xp {
            k += 1;
        }
        let q = v[k];
        let dx = xp - q as f64 * h;
        *o = f[q] + dx * dx;
    }
}
