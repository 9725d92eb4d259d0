//! Fourth-order finite-difference derivative and curvature fields.
//!
//! First, second, and mixed derivatives of an embedding are taken with
//! five-point central stencils (weights `1/12, -2/3, 0, 2/3, -1/12` and
//! `-1/12, 4/3, -5/2, 4/3, -1/12`); the mixed derivative is the tensor
//! product of two first-derivative stencils, a 16-point stencil with the
//! `1/(144 hx hy)` factor. Within two voxels of the domain boundary the
//! stencil is shifted inward using one-sided formulas of the same order
//! rather than inventing ghost values.
//!
//! From the derivative bundle, mean curvature `H = div(grad phi/|grad
//! phi|)/2` and Gaussian curvature `K` (the bordered-Hessian form) are
//! evaluated voxel-wise. The 1/2 on H makes it the differential-geometry
//! mean of the principal curvatures, so a sphere of radius rho has
//! `H = 1/rho`, `K = 1/rho^2`. Both fields are masked (stored as zero,
//! flagged invalid) where the gradient falls below `1e-4` of its grid
//! maximum; curvature is meaningless without a surface direction.

use crate::grid::{Axis, Dims3};
use crate::parallel::par_slabs;
use crate::{Error, Result, ScalarGrid3};

/// Relative gradient floor below which curvature is masked.
pub const GRAD_FLOOR_REL: f64 = 1e-4;

type Tap = (isize, f64);

// first derivative, scale 1/h
const D1_C: [Tap; 4] = [
    (-2, 1.0 / 12.0),
    (-1, -2.0 / 3.0),
    (1, 2.0 / 3.0),
    (2, -1.0 / 12.0),
];
const D1_L0: [Tap; 5] = [
    (0, -25.0 / 12.0),
    (1, 4.0),
    (2, -3.0),
    (3, 4.0 / 3.0),
    (4, -1.0 / 4.0),
];
const D1_L1: [Tap; 5] = [
    (-1, -1.0 / 4.0),
    (0, -5.0 / 6.0),
    (1, 3.0 / 2.0),
    (2, -1.0 / 2.0),
    (3, 1.0 / 12.0),
];
const D1_R1: [Tap; 5] = [
    (-3, -1.0 / 12.0),
    (-2, 1.0 / 2.0),
    (-1, -3.0 / 2.0),
    (0, 5.0 / 6.0),
    (1, 1.0 / 4.0),
];
const D1_R0: [Tap; 5] = [
    (-4, 1.0 / 4.0),
    (-3, -4.0 / 3.0),
    (-2, 3.0),
    (-1, -4.0),
    (0, 25.0 / 12.0),
];

// second derivative, scale 1/h^2
const D2_C: [Tap; 5] = [
    (-2, -1.0 / 12.0),
    (-1, 4.0 / 3.0),
    (0, -5.0 / 2.0),
    (1, 4.0 / 3.0),
    (2, -1.0 / 12.0),
];
const D2_L0: [Tap; 6] = [
    (0, 15.0 / 4.0),
    (1, -77.0 / 6.0),
    (2, 107.0 / 6.0),
    (3, -13.0),
    (4, 61.0 / 12.0),
    (5, -5.0 / 6.0),
];
const D2_L1: [Tap; 6] = [
    (-1, 5.0 / 6.0),
    (0, -5.0 / 4.0),
    (1, -1.0 / 3.0),
    (2, 7.0 / 6.0),
    (3, -1.0 / 2.0),
    (4, 1.0 / 12.0),
];
const D2_R1: [Tap; 6] = [
    (-4, 1.0 / 12.0),
    (-3, -1.0 / 2.0),
    (-2, 7.0 / 6.0),
    (-1, -1.0 / 3.0),
    (0, -5.0 / 4.0),
    (1, 5.0 / 6.0),
];
const D2_R0: [Tap; 6] = [
    (-5, -5.0 / 6.0),
    (-4, 61.0 / 12.0),
    (-3, -13.0),
    (-2, 107.0 / 6.0),
    (-1, -77.0 / 6.0),
    (0, 15.0 / 4.0),
];

// five-sample fallbacks for grids exactly 5 voxels wide; still exact on
// quartics, one order lower in truncation
const D2_L0_N5: [Tap; 5] = [
    (0, 35.0 / 12.0),
    (1, -26.0 / 3.0),
    (2, 19.0 / 2.0),
    (3, -14.0 / 3.0),
    (4, 11.0 / 12.0),
];
const D2_L1_N5: [Tap; 5] = [
    (-1, 11.0 / 12.0),
    (0, -5.0 / 3.0),
    (1, 1.0 / 2.0),
    (2, 1.0 / 3.0),
    (3, -1.0 / 12.0),
];
const D2_R1_N5: [Tap; 5] = [
    (-3, -1.0 / 12.0),
    (-2, 1.0 / 3.0),
    (-1, 1.0 / 2.0),
    (0, -5.0 / 3.0),
    (1, 11.0 / 12.0),
];
const D2_R0_N5: [Tap; 5] = [
    (-4, 11.0 / 12.0),
    (-3, -14.0 / 3.0),
    (-2, 19.0 / 2.0),
    (-1, -26.0 / 3.0),
    (0, 35.0 / 12.0),
];

#[derive(Clone, Copy, PartialEq)]
enum Deriv {
    First,
    Second,
}

fn stencil_for(kind: Deriv, i: usize, n: usize) -> &'static [Tap] {
    match kind {
        Deriv::First => {
            if i == 0 {
                &D1_L0
            } else if i == 1 {
                &D1_L1
            } else if i == n - 1 {
                &D1_R0
            } else if i == n - 2 {
                &D1_R1
            } else {
                &D1_C
            }
        }
        Deriv::Second => {
            if i == 0 {
                if n >= 6 { &D2_L0 } else { &D2_L0_N5 }
            } else if i == 1 {
                if n >= 6 { &D2_L1 } else { &D2_L1_N5 }
            } else if i == n - 1 {
                if n >= 6 { &D2_R0 } else { &D2_R0_N5 }
            } else if i == n - 2 {
                if n >= 6 { &D2_R1 } else { &D2_R1_N5 }
            } else {
                &D2_C
            }
        }
    }
}

/// Apply a derivative stencil along one axis. Each output voxel is
/// written once; parallel over z-slices.
fn apply_axis(values: &[f64], dims: Dims3, axis: Axis, h: f64, kind: Deriv) -> Vec<f64> {
    let (nx, ny, nz) = (dims.nx, dims.ny, dims.nz);
    let slice = nx * ny;
    let scale = match kind {
        Deriv::First => 1.0 / h,
        Deriv::Second => 1.0 / (h * h),
    };
    let mut out = vec![0.0; values.len()];

    match axis {
        Axis::X => {
            par_slabs(&mut out, slice, |z, slab| {
                let base = z * slice;
                for y in 0..ny {
                    let row_in = &values[base + y * nx..base + (y + 1) * nx];
                    let row_out = &mut slab[y * nx..(y + 1) * nx];
                    for (i, o) in row_out.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for &(off, w) in stencil_for(kind, i, nx) {
                            acc += w * row_in[(i as isize + off) as usize];
                        }
                        *o = acc * scale;
                    }
                }
            });
        }
        Axis::Y => {
            par_slabs(&mut out, slice, |z, slab| {
                let base = z * slice;
                for j in 0..ny {
                    let row_out = &mut slab[j * nx..(j + 1) * nx];
                    for &(off, w) in stencil_for(kind, j, ny) {
                        let src = (j as isize + off) as usize;
                        let row_in = &values[base + src * nx..base + (src + 1) * nx];
                        for x in 0..nx {
                            row_out[x] += w * row_in[x];
                        }
                    }
                    for v in row_out.iter_mut() {
                        *v *= scale;
                    }
                }
            });
        }
        Axis::Z => {
            par_slabs(&mut out, slice, |k, slab| {
                for &(off, w) in stencil_for(kind, k, nz) {
                    let src = (k as isize + off) as usize;
                    let src_slice = &values[src * slice..(src + 1) * slice];
                    for (o, s) in slab.iter_mut().zip(src_slice) {
                        *o += w * s;
                    }
                }
                for v in slab.iter_mut() {
                    *v *= scale;
                }
            });
        }
    }
    out
}

/// All first, second, and mixed partial derivatives of a field, per mm
/// and per mm² respectively.
#[derive(Clone, Debug)]
pub struct DerivativeBundle {
    pub dx: ScalarGrid3,
    pub dy: ScalarGrid3,
    pub dz: ScalarGrid3,
    pub dxx: ScalarGrid3,
    pub dyy: ScalarGrid3,
    pub dzz: ScalarGrid3,
    pub dxy: ScalarGrid3,
    pub dyz: ScalarGrid3,
    pub dzx: ScalarGrid3,
    /// Gradient magnitudes at or below this level are indistinguishable
    /// from stencil rounding noise (a constant field does not difference
    /// to exact zeros in floating point). Fields whose largest gradient
    /// sits under the floor are masked entirely.
    pub noise_floor: f64,
}

/// Differentiate `field` everywhere. Needs at least 5 voxels per axis.
///
/// Mixed derivatives are the composition of two first-derivative passes
/// (`dxy = Dy(Dx phi)` and so on), which in the interior is exactly the
/// 16-point tensor-product stencil.
pub fn derivatives(field: &ScalarGrid3) -> Result<DerivativeBundle> {
    let dims = field.dims();
    if dims.nx < 5 || dims.ny < 5 || dims.nz < 5 {
        return Err(Error::GridTooSmall(format!(
            "fourth-order stencils need at least 5 voxels per axis, got {}x{}x{}",
            dims.nx, dims.ny, dims.nz
        )));
    }
    let sp = field.spacing();
    let v = field.values();
    let max_abs = v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let noise_floor =
        16.0 * f64::EPSILON * max_abs / sp.hx.min(sp.hy).min(sp.hz);

    let dx = apply_axis(v, dims, Axis::X, sp.hx, Deriv::First);
    let dy = apply_axis(v, dims, Axis::Y, sp.hy, Deriv::First);
    let dz = apply_axis(v, dims, Axis::Z, sp.hz, Deriv::First);
    let dxy = apply_axis(&dx, dims, Axis::Y, sp.hy, Deriv::First);
    let dyz = apply_axis(&dy, dims, Axis::Z, sp.hz, Deriv::First);
    let dzx = apply_axis(&dz, dims, Axis::X, sp.hx, Deriv::First);
    let dxx = apply_axis(v, dims, Axis::X, sp.hx, Deriv::Second);
    let dyy = apply_axis(v, dims, Axis::Y, sp.hy, Deriv::Second);
    let dzz = apply_axis(v, dims, Axis::Z, sp.hz, Deriv::Second);

    let wrap = |values: Vec<f64>| ScalarGrid3::new(dims, sp, field.origin(), values);
    Ok(DerivativeBundle {
        dx: wrap(dx)?,
        dy: wrap(dy)?,
        dz: wrap(dz)?,
        dxx: wrap(dxx)?,
        dyy: wrap(dyy)?,
        dzz: wrap(dzz)?,
        dxy: wrap(dxy)?,
        dyz: wrap(dyz)?,
        dzx: wrap(dzx)?,
        noise_floor,
    })
}

/// Gradient magnitude and the validity mask shared by curvature and
/// normal fields: a voxel is valid when its gradient clears both the
/// relative floor and the rounding-noise floor.
fn gradient_and_mask(d: &DerivativeBundle) -> (Vec<f64>, Vec<bool>) {
    let n = d.dx.values().len();
    let gradnorm = crate::parallel::par_fill(n, |i| {
        let (gx, gy, gz) = (d.dx.values()[i], d.dy.values()[i], d.dz.values()[i]);
        (gx * gx + gy * gy + gz * gz).sqrt()
    });
    let max_grad = gradnorm.iter().fold(0.0_f64, |a, &b| a.max(b));
    let valid = if max_grad <= d.noise_floor || max_grad == 0.0 {
        vec![false; n]
    } else {
        let floor = (GRAD_FLOOR_REL * max_grad).max(d.noise_floor);
        gradnorm.iter().map(|&g| g >= floor).collect()
    };
    (gradnorm, valid)
}

/// Local mean and Gaussian curvature plus the gradient magnitude.
/// `valid[i]` is false where the gradient floor masked the voxel; masked
/// voxels store 0 in `mean` and `gauss`.
#[derive(Clone, Debug)]
pub struct CurvatureFields {
    pub mean: ScalarGrid3,
    pub gauss: ScalarGrid3,
    pub gradnorm: ScalarGrid3,
    pub valid: Vec<bool>,
}

impl CurvatureFields {
    pub fn masked_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }
}

fn mean_numerator(g1: [f64; 3], g2: [f64; 6]) -> f64 {
    let [dx, dy, dz] = g1;
    let [dxx, dyy, dzz, dxy, dyz, dzx] = g2;
    (dyy + dzz) * dx * dx + (dzz + dxx) * dy * dy + (dxx + dyy) * dz * dz
        - 2.0 * dx * dy * dxy
        - 2.0 * dz * dx * dzx
        - 2.0 * dy * dz * dyz
}

fn gauss_numerator(g1: [f64; 3], g2: [f64; 6]) -> f64 {
    let [dx, dy, dz] = g1;
    let [dxx, dyy, dzz, dxy, dyz, dzx] = g2;
    dx * dx * (dyy * dzz - dyz * dyz)
        + dy * dy * (dxx * dzz - dzx * dzx)
        + dz * dz * (dxx * dyy - dxy * dxy)
        + 2.0 * dx * dy * (dzx * dyz - dxy * dzz)
        + 2.0 * dy * dz * (dxy * dzx - dyz * dxx)
        + 2.0 * dz * dx * (dxy * dyz - dzx * dyy)
}

/// Evaluate curvature fields from a derivative bundle.
pub fn curvature_fields(d: &DerivativeBundle) -> CurvatureFields {
    let dims = d.dx.dims();
    let n = dims.len();
    let (gradnorm, valid) = gradient_and_mask(d);

    let mut mean = vec![0.0; n];
    let mut gauss = vec![0.0; n];
    {
        // zip the per-voxel outputs through one parallel pass
        use rayon::prelude::*;
        mean.par_iter_mut()
            .zip(gauss.par_iter_mut())
            .enumerate()
            .for_each(|(i, (m, k))| {
                if !valid[i] {
                    return;
                }
                let g = gradnorm[i];
                let g1 = [d.dx.values()[i], d.dy.values()[i], d.dz.values()[i]];
                let g2 = [
                    d.dxx.values()[i],
                    d.dyy.values()[i],
                    d.dzz.values()[i],
                    d.dxy.values()[i],
                    d.dyz.values()[i],
                    d.dzx.values()[i],
                ];
                *m = 0.5 * mean_numerator(g1, g2) / (g * g * g);
                *k = gauss_numerator(g1, g2) / (g * g * g * g);
            });
    }

    let wrap = |values: Vec<f64>| {
        ScalarGrid3::new(dims, d.dx.spacing(), d.dx.origin(), values)
            .expect("curvature values are finite")
    };
    CurvatureFields {
        mean: wrap(mean),
        gauss: wrap(gauss),
        gradnorm: wrap(gradnorm),
        valid,
    }
}

/// Mean curvature field only; see [`curvature_fields`].
pub fn mean_curvature(d: &DerivativeBundle) -> ScalarGrid3 {
    curvature_fields(d).mean
}

/// Gaussian curvature field only; see [`curvature_fields`].
pub fn gaussian_curvature(d: &DerivativeBundle) -> ScalarGrid3 {
    curvature_fields(d).gauss
}

/// Unit normal field `grad phi / |grad phi|`, masked like curvature.
#[derive(Clone, Debug)]
pub struct NormalField {
    pub x: ScalarGrid3,
    pub y: ScalarGrid3,
    pub z: ScalarGrid3,
    pub valid: Vec<bool>,
}

pub fn normals(d: &DerivativeBundle) -> NormalField {
    let dims = d.dx.dims();
    let n = dims.len();
    let (gradnorm, valid) = gradient_and_mask(d);

    let mut nxv = vec![0.0; n];
    let mut nyv = vec![0.0; n];
    let mut nzv = vec![0.0; n];
    for i in 0..n {
        if !valid[i] {
            continue;
        }
        let g = gradnorm[i];
        nxv[i] = d.dx.values()[i] / g;
        nyv[i] = d.dy.values()[i] / g;
        nzv[i] = d.dz.values()[i] / g;
    }
    let wrap = |values: Vec<f64>| {
        ScalarGrid3::new(dims, d.dx.spacing(), d.dx.origin(), values)
            .expect("normal components are finite")
    };
    NormalField {
        x: wrap(nxv),
        y: wrap(nyv),
        z: wrap(nzv),
        valid,
    }
}

/// Principal curvatures from mean and Gaussian curvature,
/// `kappa = H +/- sqrt(H^2 - K)`, returned with `kappa1 >= kappa2`.
///
/// Near umbilic points `H^2 - K` rounds to either side of zero; a
/// discriminant within `1e-14 * max(H^2, |K|)` of zero, or negative, is
/// clamped so the result stays real and umbilic points come out exactly
/// equal.
pub fn principal_curvatures(h: f64, k: f64) -> (f64, f64) {
    let mut disc = h * h - k;
    if disc.abs() < 1e-14 * (h * h).max(k.abs()).max(1e-30) {
        disc = 0.0;
    }
    let s = disc.max(0.0).sqrt();
    (h + s, h - s)
}

/// Principal curvature fields; masked voxels stay zero.
pub fn principal_fields(c: &CurvatureFields) -> (ScalarGrid3, ScalarGrid3) {
    let n = c.mean.values().len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    for i in 0..n {
        if c.valid[i] {
            let (a, b) = principal_curvatures(c.mean.values()[i], c.gauss.values()[i]);
            k1[i] = a;
            k2[i] = b;
        }
    }
    let wrap = |values: Vec<f64>| {
        ScalarGrid3::new(c.mean.dims(), c.mean.spacing(), c.mean.origin(), values)
            .expect("principal curvatures are finite")
    };
    (wrap(k1), wrap(k2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing3;

    fn monomial_grid(
        dims: Dims3,
        spacing: Spacing3,
        origin: [f64; 3],
        p: (u32, u32, u32),
    ) -> ScalarGrid3 {
        ScalarGrid3::from_fn(dims, spacing, origin, |x, y, z| {
            x.powi(p.0 as i32) * y.powi(p.1 as i32) * z.powi(p.2 as i32)
        })
        .unwrap()
    }

    fn dpow(v: f64, p: u32, order: u32) -> f64 {
        // d^order/dv^order of v^p
        let mut c = 1.0;
        let mut q = p;
        for _ in 0..order {
            if q == 0 {
                return 0.0;
            }
            c *= q as f64;
            q -= 1;
        }
        c * v.powi(q as i32)
    }

    #[test]
    fn stencils_are_exact_on_monomials_up_to_degree_four() {
        let dims = Dims3::new(9, 8, 7);
        let spacing = Spacing3::new(0.7, 0.55, 1.25).unwrap();
        let origin = [-2.1, 0.3, -4.0];
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                for c in 0..=(4 - a - b) {
                    let g = monomial_grid(dims, spacing, origin, (a, b, c));
                    let bun = derivatives(&g).unwrap();
                    for i in 0..dims.len() {
                        let (xi, yi, zi) = dims.coords(i);
                        let [x, y, z] = g.position(xi, yi, zi);
                        let checks = [
                            (bun.dx.values()[i], dpow(x, a, 1) * y.powi(b as i32) * z.powi(c as i32)),
                            (bun.dy.values()[i], x.powi(a as i32) * dpow(y, b, 1) * z.powi(c as i32)),
                            (bun.dz.values()[i], x.powi(a as i32) * y.powi(b as i32) * dpow(z, c, 1)),
                            (bun.dxx.values()[i], dpow(x, a, 2) * y.powi(b as i32) * z.powi(c as i32)),
                            (bun.dyy.values()[i], x.powi(a as i32) * dpow(y, b, 2) * z.powi(c as i32)),
                            (bun.dzz.values()[i], x.powi(a as i32) * y.powi(b as i32) * dpow(z, c, 2)),
                            (bun.dxy.values()[i], dpow(x, a, 1) * dpow(y, b, 1) * z.powi(c as i32)),
                            (bun.dyz.values()[i], x.powi(a as i32) * dpow(y, b, 1) * dpow(z, c, 1)),
                            (bun.dzx.values()[i], dpow(x, a, 1) * y.powi(b as i32) * dpow(z, c, 1)),
                        ];
                        for (got, expect) in checks {
                            let scale = expect.abs().max(1.0);
                            assert!(
                                (got - expect).abs() / scale < 1e-10,
                                "monomial x^{a} y^{b} z^{c} at voxel {i}: got {got}, expect {expect}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn five_wide_grids_are_supported_and_exact() {
        let dims = Dims3::new(5, 5, 5);
        let spacing = Spacing3::new(0.9, 0.7, 1.1).unwrap();
        let g = monomial_grid(dims, spacing, [-1.8, -1.4, -2.2], (4, 0, 0));
        let bun = derivatives(&g).unwrap();
        for i in 0..dims.len() {
            let (xi, yi, zi) = dims.coords(i);
            let x = g.position(xi, yi, zi)[0];
            let expect = 12.0 * x * x;
            let scale = expect.abs().max(1.0);
            assert!(
                (bun.dxx.values()[i] - expect).abs() / scale < 1e-10,
                "dxx of x^4 at {x}: {}",
                bun.dxx.values()[i]
            );
        }
    }

    #[test]
    fn too_small_grids_are_rejected() {
        let g = ScalarGrid3::constant(
            Dims3::new(4, 5, 5),
            Spacing3::isotropic(1.0).unwrap(),
            [0.0; 3],
            1.0,
        )
        .unwrap();
        assert!(matches!(derivatives(&g), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn linear_ramp_has_unit_gradient_and_no_curvature_terms() {
        let dims = Dims3::new(8, 8, 8);
        let g = ScalarGrid3::from_fn(
            dims,
            Spacing3::isotropic(0.5).unwrap(),
            [0.0; 3],
            |x, _, _| x,
        )
        .unwrap();
        let bun = derivatives(&g).unwrap();
        for i in 0..dims.len() {
            assert!((bun.dx.values()[i] - 1.0).abs() < 1e-12);
            assert!(bun.dxx.values()[i].abs() < 1e-12);
            assert!(bun.dxy.values()[i].abs() < 1e-12);
        }
        // plane: H and K vanish identically
        let c = curvature_fields(&bun);
        for i in 0..dims.len() {
            assert!(c.valid[i]);
            assert!(c.mean.values()[i].abs() < 1e-12);
            assert!(c.gauss.values()[i].abs() < 1e-12);
        }
        // and the normal field is the x axis everywhere
        let nf = normals(&bun);
        for i in 0..dims.len() {
            assert!(nf.valid[i]);
            assert!((nf.x.values()[i] - 1.0).abs() < 1e-12);
            assert!(nf.y.values()[i].abs() < 1e-12);
            assert!(nf.z.values()[i].abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_second_derivative_vanishes_at_origin() {
        // the central stencil weights annihilate x^4 at x = 0
        let dims = Dims3::new(9, 5, 5);
        let g = ScalarGrid3::from_fn(
            dims,
            Spacing3::isotropic(1.0).unwrap(),
            [-4.0, -2.0, -2.0],
            |x, _, _| x.powi(4),
        )
        .unwrap();
        let bun = derivatives(&g).unwrap();
        assert!(bun.dxx.at(4, 2, 2).abs() < 1e-10);
    }

    #[test]
    fn bilinear_mixed_derivative_is_one() {
        let dims = Dims3::new(8, 8, 5);
        let g = ScalarGrid3::from_fn(
            dims,
            Spacing3::new(0.5, 0.8, 1.0).unwrap(),
            [-1.0, -2.0, 0.0],
            |x, y, _| x * y,
        )
        .unwrap();
        let bun = derivatives(&g).unwrap();
        for i in 0..dims.len() {
            assert!((bun.dxy.values()[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_derivative_converges_at_fourth_order() {
        let analytic = |x: f64, y: f64, z: f64| x.cos() * y.sin() * z.sin();
        let err_at = |n: usize| -> f64 {
            let h = 2.0 / (n - 1) as f64;
            let g = ScalarGrid3::from_fn(
                Dims3::new(n, n, n),
                Spacing3::isotropic(h).unwrap(),
                [0.0; 3],
                |x, y, z| x.sin() * y.sin() * z.sin(),
            )
            .unwrap();
            let bun = derivatives(&g).unwrap();
            let mut max = 0.0_f64;
            for i in 0..g.dims().len() {
                let (xi, yi, zi) = g.dims().coords(i);
                let [x, y, z] = g.position(xi, yi, zi);
                max = max.max((bun.dx.values()[i] - analytic(x, y, z)).abs());
            }
            max
        };
        let coarse = err_at(21);
        let fine = err_at(41);
        let ratio = coarse / fine;
        assert!(
            ratio >= 14.0,
            "halving h should cut the error ~16x (order 4); got ratio {ratio} ({coarse} -> {fine})"
        );
    }

    fn sphere_distance_field(n: usize, h: f64, radius: f64) -> ScalarGrid3 {
        let c = (n - 1) as f64 * h / 2.0;
        ScalarGrid3::from_fn(
            Dims3::new(n, n, n),
            Spacing3::isotropic(h).unwrap(),
            [0.0; 3],
            |x, y, z| {
                ((x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2)).sqrt() - radius
            },
        )
        .unwrap()
    }

    #[test]
    fn sphere_distance_field_curvatures_match_closed_forms() {
        let (n, h, radius) = (93, 0.5, 20.0);
        let g = sphere_distance_field(n, h, radius);
        let c = (n - 1) as f64 * h / 2.0;
        let bun = derivatives(&g).unwrap();
        let curv = curvature_fields(&bun);
        let nf = normals(&bun);
        let dims = g.dims();
        let mut surface_voxels = 0;
        for i in 0..dims.len() {
            let (xi, yi, zi) = dims.coords(i);
            let [x, y, z] = g.position(xi, yi, zi);
            let rho = ((x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2)).sqrt();
            if (rho - radius).abs() > 0.26 {
                continue;
            }
            surface_voxels += 1;
            assert!(curv.valid[i]);
            let h_got = curv.mean.values()[i];
            let k_got = curv.gauss.values()[i];
            assert!(
                (h_got - 1.0 / rho).abs() < 1e-3,
                "H at rho {rho}: {h_got} vs {}",
                1.0 / rho
            );
            assert!(
                (k_got - 1.0 / (rho * rho)).abs() < 5e-5,
                "K at rho {rho}: {k_got} vs {}",
                1.0 / (rho * rho)
            );
            // normals point radially outward
            let r = [(x - c) / rho, (y - c) / rho, (z - c) / rho];
            assert!((nf.x.values()[i] - r[0]).abs() < 1e-6);
            assert!((nf.y.values()[i] - r[1]).abs() < 1e-6);
            assert!((nf.z.values()[i] - r[2]).abs() < 1e-6);
            let len = (nf.x.values()[i].powi(2) + nf.y.values()[i].powi(2)
                + nf.z.values()[i].powi(2))
            .sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }
        assert!(surface_voxels > 1000, "only {surface_voxels} surface voxels checked");
    }

    #[test]
    fn cylinder_distance_field_has_half_curvature_and_zero_gauss() {
        let (n, h, radius) = (73, 0.5, 10.0);
        let c = (n - 1) as f64 * h / 2.0;
        let g = ScalarGrid3::from_fn(
            Dims3::new(n, n, 31),
            Spacing3::isotropic(h).unwrap(),
            [0.0; 3],
            |x, y, _| ((x - c).powi(2) + (y - c).powi(2)).sqrt() - radius,
        )
        .unwrap();
        let curv = curvature_fields(&derivatives(&g).unwrap());
        let dims = g.dims();
        let mut checked = 0;
        for i in 0..dims.len() {
            let (xi, yi, zi) = dims.coords(i);
            if !(5..=25).contains(&zi) {
                continue;
            }
            let [x, y, _] = g.position(xi, yi, zi);
            let rho = ((x - c).powi(2) + (y - c).powi(2)).sqrt();
            if (rho - radius).abs() > 0.26 {
                continue;
            }
            checked += 1;
            assert!(
                (curv.mean.values()[i] - 1.0 / (2.0 * rho)).abs() < 1e-3,
                "cylinder H at rho {rho}: {}",
                curv.mean.values()[i]
            );
            assert!(
                curv.gauss.values()[i].abs() < 1e-5,
                "cylinder K at rho {rho}: {}",
                curv.gauss.values()[i]
            );
        }
        assert!(checked > 500);
    }

    #[test]
    fn constant_field_is_fully_masked() {
        let g = ScalarGrid3::constant(
            Dims3::new(6, 6, 6),
            Spacing3::isotropic(1.0).unwrap(),
            [0.0; 3],
            0.7,
        )
        .unwrap();
        let bun = derivatives(&g).unwrap();
        let c = curvature_fields(&bun);
        assert!(c.valid.iter().all(|v| !v));
        assert!(c.mean.values().iter().all(|&v| v == 0.0));
        let nf = normals(&bun);
        assert!(nf.valid.iter().all(|v| !v));
    }

    #[test]
    fn sphere_curvature_is_axis_permutation_invariant() {
        let g = sphere_distance_field(41, 1.0, 12.0);
        let c = curvature_fields(&derivatives(&g).unwrap());
        let dims = g.dims();
        let center = 20.0;
        for i in 0..dims.len() {
            let (x, y, z) = dims.coords(i);
            let rho = (((x as f64) - center).powi(2)
                + ((y as f64) - center).powi(2)
                + ((z as f64) - center).powi(2))
            .sqrt();
            if (rho - 12.0).abs() > 0.5 || !c.valid[i] {
                continue;
            }
            let j = dims.index(y, z, x);
            assert!(c.valid[j]);
            assert!(
                (c.mean.values()[i] - c.mean.values()[j]).abs() < 2e-3,
                "H not permutation invariant"
            );
            assert!(
                (c.gauss.values()[i] - c.gauss.values()[j]).abs() < 1e-4,
                "K not permutation invariant"
            );
        }
    }

    #[test]
    fn gauss_numerator_matches_bordered_hessian_determinant() {
        // the fully symmetric expansion equals -det of the bordered
        // Hessian; checked on pseudo-random derivative tuples
        fn det4(m: [[f64; 4]; 4]) -> f64 {
            let mut a = m;
            let mut det = 1.0;
            for col in 0..4 {
                let mut pivot = col;
                for r in col + 1..4 {
                    if a[r][col].abs() > a[pivot][col].abs() {
                        pivot = r;
                    }
                }
                if a[pivot][col] == 0.0 {
                    return 0.0;
                }
                if pivot != col {
                    a.swap(pivot, col);
                    det = -det;
                }
                det *= a[col][col];
                let pivot_row = a[col];
                for row in a.iter_mut().skip(col + 1) {
                    let f = row[col] / pivot_row[col];
                    for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                        *x -= f * p;
                    }
                }
            }
            det
        }

        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..200 {
            let g1 = [next(), next(), next()];
            let g2 = [next(), next(), next(), next(), next(), next()];
            let [dx, dy, dz] = g1;
            let [dxx, dyy, dzz, dxy, dyz, dzx] = g2;
            let m = [
                [dxx, dxy, dzx, dx],
                [dxy, dyy, dyz, dy],
                [dzx, dyz, dzz, dz],
                [dx, dy, dz, 0.0],
            ];
            let lhs = gauss_numerator(g1, g2);
            let rhs = -det4(m);
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            assert!(
                ((lhs - rhs) / scale).abs() < 1e-12,
                "symmetric form {lhs} vs bordered determinant {rhs}"
            );
        }
    }

    #[test]
    fn principal_curvature_examples_and_consistency() {
        // umbilic sphere point
        assert_eq!(principal_curvatures(0.05, 0.0025), (0.05, 0.05));
        // cylinder point
        let (k1, k2) = principal_curvatures(0.025, 0.0);
        assert!((k1 - 0.05).abs() < 1e-15 && k2.abs() < 1e-15);
        // discriminant a hair negative: clamped to the umbilic answer
        let (k1, k2) = principal_curvatures(0.05, 0.0025 + 1e-12);
        assert_eq!((k1, k2), (0.05, 0.05));

        // kappa1*kappa2 == K and (kappa1+kappa2)/2 == H when no clamp engages
        let mut state = 0xabcdef_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..500 {
            let h = next();
            let k = h * h - next().abs(); // guarantees H^2 >= K
            let (k1, k2) = principal_curvatures(h, k);
            assert!(k1 >= k2);
            assert!((k1 * k2 - k).abs() < 1e-12);
            assert!((0.5 * (k1 + k2) - h).abs() < 1e-12);
        }
    }
}
