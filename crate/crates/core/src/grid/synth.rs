//! Synthetic binary shapes with known closed-form morphometry.
//!
//! Spheres and tori are the validation oracles of this crate: volume, area,
//! curvature integrals, and the Euler-Poincaré characteristic all have exact
//! expressions. Generators rasterize by voxel-center inclusion and refuse
//! shapes that touch the domain boundary, because clipping silently changes
//! every downstream morphometric.

use super::{Axis, BinaryGrid3, Dims3, Spacing3};
use crate::{Error, Result};

/// Rasterize a solid sphere: voxel = 1 iff its center lies within
/// `radius_mm` of `center_mm`. The grid origin is `(0,0,0)`.
pub fn synth_sphere(
    radius_mm: f64,
    center_mm: [f64; 3],
    dims: Dims3,
    spacing: Spacing3,
) -> Result<BinaryGrid3> {
    if !(radius_mm.is_finite() && radius_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sphere radius must be positive, got {radius_mm}"
        )));
    }
    for axis in Axis::ALL {
        check_extent(axis, axis_range(center_mm, axis, radius_mm), dims, spacing, "sphere")?;
    }

    let r2 = radius_mm * radius_mm;
    let values = rasterize(dims, spacing, |p| {
        let dx = p[0] - center_mm[0];
        let dy = p[1] - center_mm[1];
        let dz = p[2] - center_mm[2];
        dx * dx + dy * dy + dz * dz <= r2
    });
    let grid = BinaryGrid3::new(dims, spacing, [0.0; 3], values)?;
    if grid.count_foreground() == 0 {
        return Err(Error::EmptyShape(format!(
            "sphere of radius {radius_mm} mm contains no voxel centers"
        )));
    }
    Ok(grid)
}

/// Rasterize a solid torus given by its inner and outer radii.
///
/// With ring radius `R = (outer+inner)/2` and tube radius
/// `r = (outer-inner)/2`, a voxel center at torus-local coordinates
/// `(u, v, w)` (w along the symmetry `axis`) is foreground iff
/// `(sqrt(u^2+v^2) - R)^2 + w^2 <= r^2`.
pub fn synth_torus(
    inner_radius_mm: f64,
    outer_radius_mm: f64,
    center_mm: [f64; 3],
    axis: Axis,
    dims: Dims3,
    spacing: Spacing3,
) -> Result<BinaryGrid3> {
    if !(inner_radius_mm.is_finite() && outer_radius_mm.is_finite() && inner_radius_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "torus radii must be positive finite, got inner {inner_radius_mm}, outer {outer_radius_mm}"
        )));
    }
    if inner_radius_mm >= outer_radius_mm {
        return Err(Error::InvalidParameter(format!(
            "torus tube is degenerate: inner radius {inner_radius_mm} >= outer radius {outer_radius_mm}"
        )));
    }
    let ring = 0.5 * (outer_radius_mm + inner_radius_mm);
    let tube = 0.5 * (outer_radius_mm - inner_radius_mm);

    for a in Axis::ALL {
        let half = if a == axis { tube } else { outer_radius_mm };
        check_extent(a, axis_range(center_mm, a, half), dims, spacing, "torus")?;
    }

    let tube2 = tube * tube;
    let values = rasterize(dims, spacing, |p| {
        let d = [
            p[0] - center_mm[0],
            p[1] - center_mm[1],
            p[2] - center_mm[2],
        ];
        let (u, v, w) = match axis {
            Axis::Z => (d[0], d[1], d[2]),
            Axis::X => (d[1], d[2], d[0]),
            Axis::Y => (d[2], d[0], d[1]),
        };
        let ring_dist = (u * u + v * v).sqrt() - ring;
        ring_dist * ring_dist + w * w <= tube2
    });
    let grid = BinaryGrid3::new(dims, spacing, [0.0; 3], values)?;
    if grid.count_foreground() == 0 {
        return Err(Error::EmptyShape(format!(
            "torus inner {inner_radius_mm} / outer {outer_radius_mm} mm contains no voxel centers"
        )));
    }
    Ok(grid)
}

fn rasterize(
    dims: Dims3,
    spacing: Spacing3,
    inside: impl Fn([f64; 3]) -> bool + Sync,
) -> Vec<u8> {
    crate::parallel::par_fill(dims.len(), |i| {
        let (x, y, z) = dims.coords(i);
        let p = [
            x as f64 * spacing.hx,
            y as f64 * spacing.hy,
            z as f64 * spacing.hz,
        ];
        if inside(p) {
            1.0
        } else {
            0.0
        }
    })
    .into_iter()
    .map(|v| v as u8)
    .collect()
}

fn axis_range(center: [f64; 3], axis: Axis, half_extent: f64) -> (f64, f64) {
    let c = match axis {
        Axis::X => center[0],
        Axis::Y => center[1],
        Axis::Z => center[2],
    };
    (c - half_extent, c + half_extent)
}

fn check_extent(
    axis: Axis,
    (lo, hi): (f64, f64),
    dims: Dims3,
    spacing: Spacing3,
    what: &str,
) -> Result<()> {
    let span = (dims.size(axis) - 1) as f64 * spacing.axis(axis);
    if lo <= 0.0 || hi >= span {
        return Err(Error::ShapeClipped(format!(
            "{what} extends over [{lo:.3}, {hi:.3}] mm along {axis:?} but the voxel-center span is [0, {span:.3}] mm"
        )));
    }
    Ok(())
}
