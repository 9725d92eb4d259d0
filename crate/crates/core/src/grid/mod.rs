//! Raster containers with physical-space metadata.
//!
//! A grid is a dense 3D array of voxel-center samples in x-fastest order
//! (`index = x + nx*(y + ny*z)`). The physical position of voxel `(0,0,0)`
//! is `origin` (millimetres) and neighbouring voxel centers are one
//! [`Spacing3`] apart per axis. Spacing may be anisotropic; clinical data
//! usually has slice thickness different from the in-plane resolution.
//!
//! All grid types are immutable value data after construction, so any
//! voxel-wise operation may be freely parallelized.

mod io;
mod synth;

pub use io::{read_volume, write_binary_volume, write_volume, ElementType};
pub(crate) use io::{read_volume_with_meta, write_volume_with_meta};
pub use synth::{synth_sphere, synth_torus};

use crate::{Error, Result};

/// Coordinate axis selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown axis {other:?}, expected x, y or z")),
        }
    }
}

/// Grid extent in voxels along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims3 {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims3 {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims3 { nx, ny, nz }
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of voxel `(x, y, z)`, x-fastest.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz);
        x + self.nx * (y + self.ny * z)
    }

    /// Inverse of [`Dims3::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.nx;
        let y = (index / self.nx) % self.ny;
        let z = index / (self.nx * self.ny);
        (x, y, z)
    }

    pub fn size(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
        }
    }
}

/// Physical voxel spacing in millimetres per axis. Strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spacing3 {
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl Spacing3 {
    pub fn new(hx: f64, hy: f64, hz: f64) -> Result<Self> {
        for (name, h) in [("hx", hx), ("hy", hy), ("hz", hz)] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "spacing {name} must be a positive finite number, got {h}"
                )));
            }
        }
        Ok(Spacing3 { hx, hy, hz })
    }

    pub fn isotropic(h: f64) -> Result<Self> {
        Spacing3::new(h, h, h)
    }

    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.hx,
            Axis::Y => self.hy,
            Axis::Z => self.hz,
        }
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.hx * self.hy * self.hz
    }

    /// Largest voxel edge in mm.
    pub fn max_edge(&self) -> f64 {
        self.hx.max(self.hy).max(self.hz)
    }
}

/// Dense 3D raster of real values with physical metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid3 {
    dims: Dims3,
    spacing: Spacing3,
    origin: [f64; 3],
    values: Vec<f64>,
}

impl ScalarGrid3 {
    /// Build a grid, checking that `values` has exactly `dims.len()`
    /// entries and that every value is finite.
    pub fn new(dims: Dims3, spacing: Spacing3, origin: [f64; 3], values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match dims {}x{}x{}",
                values.len(),
                dims.nx,
                dims.ny,
                dims.nz
            )));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite origin {origin:?}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "value {} at linear index {pos}",
                values[pos]
            )));
        }
        Ok(ScalarGrid3 {
            dims,
            spacing,
            origin,
            values,
        })
    }

    pub fn constant(dims: Dims3, spacing: Spacing3, origin: [f64; 3], value: f64) -> Result<Self> {
        ScalarGrid3::new(dims, spacing, origin, vec![value; dims.len()])
    }

    /// Build a grid by evaluating `f` at every voxel's physical position.
    pub fn from_fn(
        dims: Dims3,
        spacing: Spacing3,
        origin: [f64; 3],
        f: impl Fn(f64, f64, f64) -> f64 + Sync,
    ) -> Result<Self> {
        let values = crate::parallel::par_fill(dims.len(), |i| {
            let (x, y, z) = dims.coords(i);
            f(
                origin[0] + x as f64 * spacing.hx,
                origin[1] + y as f64 * spacing.hy,
                origin[2] + z as f64 * spacing.hz,
            )
        });
        ScalarGrid3::new(dims, spacing, origin, values)
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn spacing(&self) -> Spacing3 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.dims.index(x, y, z)]
    }

    /// Physical position (mm) of the center of voxel `(x, y, z)`.
    pub fn position(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            self.origin[0] + x as f64 * self.spacing.hx,
            self.origin[1] + y as f64 * self.spacing.hy,
            self.origin[2] + z as f64 * self.spacing.hz,
        ]
    }

    /// True when `other` samples the same physical lattice.
    pub fn same_layout(&self, other: &ScalarGrid3) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.origin == other.origin
    }

    /// New grid with `f` applied to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Result<ScalarGrid3> {
        let values = crate::parallel::par_fill(self.values.len(), |i| f(self.values[i]));
        ScalarGrid3::new(self.dims, self.spacing, self.origin, values)
    }

    /// Grow the grid by `margins` voxels on both ends of each axis,
    /// filling new voxels with `fill`. The origin shifts so that existing
    /// voxels keep their physical positions.
    pub fn padded(&self, margins: (usize, usize, usize), fill: f64) -> Result<ScalarGrid3> {
        if !fill.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite fill {fill}")));
        }
        let (values, dims, origin) = pad_values(
            &self.values,
            self.dims,
            self.spacing,
            self.origin,
            margins,
            fill,
        );
        ScalarGrid3::new(dims, self.spacing, origin, values)
    }
}

/// Dense 3D raster over {0, 1}; the segmented object.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryGrid3 {
    dims: Dims3,
    spacing: Spacing3,
    origin: [f64; 3],
    values: Vec<u8>,
}

impl BinaryGrid3 {
    pub fn new(dims: Dims3, spacing: Spacing3, origin: [f64; 3], values: Vec<u8>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match dims {}x{}x{}",
                values.len(),
                dims.nx,
                dims.ny,
                dims.nz
            )));
        }
        if let Some(pos) = values.iter().position(|&v| v > 1) {
            return Err(Error::InvalidGrid(format!(
                "binary grid value {} at linear index {pos} is not in {{0,1}}",
                values[pos]
            )));
        }
        Ok(BinaryGrid3 {
            dims,
            spacing,
            origin,
            values,
        })
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn spacing(&self) -> Spacing3 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> u8 {
        self.values[self.dims.index(x, y, z)]
    }

    pub fn position(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            self.origin[0] + x as f64 * self.spacing.hx,
            self.origin[1] + y as f64 * self.spacing.hy,
            self.origin[2] + z as f64 * self.spacing.hz,
        ]
    }

    /// Number of foreground voxels.
    pub fn count_foreground(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// Foreground voxel count times voxel volume, in mm³.
    pub fn foreground_volume(&self) -> f64 {
        self.count_foreground() as f64 * self.spacing.voxel_volume()
    }

    /// Values as 0.0/1.0 reals on the same lattice.
    pub fn to_scalar(&self) -> ScalarGrid3 {
        let values = self.values.iter().map(|&v| v as f64).collect();
        ScalarGrid3::new(self.dims, self.spacing, self.origin, values)
            .expect("binary values are finite")
    }

    /// See [`ScalarGrid3::padded`]. `fill` must be 0 or 1.
    pub fn padded(&self, margins: (usize, usize, usize), fill: u8) -> Result<BinaryGrid3> {
        if fill > 1 {
            return Err(Error::InvalidParameter(format!(
                "binary fill must be 0 or 1, got {fill}"
            )));
        }
        let reals: Vec<f64> = self.values.iter().map(|&v| v as f64).collect();
        let (values, dims, origin) = pad_values(
            &reals,
            self.dims,
            self.spacing,
            self.origin,
            margins,
            fill as f64,
        );
        BinaryGrid3::new(
            dims,
            self.spacing,
            origin,
            values.into_iter().map(|v| v as u8).collect(),
        )
    }
}

/// Threshold a raw raster to {0, 1}: 1 where `raw > fg_threshold`, else 0.
///
/// Binary segmentations are often stored at the top of their dynamic range
/// (255 for unsigned bytes); they must be flattened before embedding.
pub fn flatten_binary(raw: &ScalarGrid3, fg_threshold: f64) -> Result<BinaryGrid3> {
    if !fg_threshold.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite threshold {fg_threshold}"
        )));
    }
    let values = raw
        .values()
        .iter()
        .map(|&v| u8::from(v > fg_threshold))
        .collect();
    BinaryGrid3::new(raw.dims(), raw.spacing(), raw.origin(), values)
}

fn pad_values(
    values: &[f64],
    dims: Dims3,
    spacing: Spacing3,
    origin: [f64; 3],
    margins: (usize, usize, usize),
    fill: f64,
) -> (Vec<f64>, Dims3, [f64; 3]) {
    let (mx, my, mz) = margins;
    let out_dims = Dims3::new(dims.nx + 2 * mx, dims.ny + 2 * my, dims.nz + 2 * mz);
    let out_origin = [
        origin[0] - mx as f64 * spacing.hx,
        origin[1] - my as f64 * spacing.hy,
        origin[2] - mz as f64 * spacing.hz,
    ];
    let mut out = vec![fill; out_dims.len()];
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            let src = dims.index(0, y, z);
            let dst = out_dims.index(mx, y + my, z + mz);
            out[dst..dst + dims.nx].copy_from_slice(&values[src..src + dims.nx]);
        }
    }
    (out, out_dims, out_origin)
}
