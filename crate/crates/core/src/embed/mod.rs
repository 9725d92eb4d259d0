//! Implicit embeddings of binary volumes.
//!
//! An embedding is a scalar field `phi` whose zero level set approximates
//! the object surface, negative inside. Two constructions are provided:
//!
//! * [`gaussian_embed`]: `phi = T - G_sigma * I`, the threshold-shifted
//!   Gaussian blur. Smooth gradients, values in `[T-1, T]`. The zero
//!   crossing of a flat edge sits exactly on the binary boundary when
//!   `T = 0.5`.
//! * [`sdt_embed`]: the signed exact Euclidean distance transform,
//!   positive outside, negative inside, in millimetres. Kept as the
//!   conventional baseline; its gradients are quantized.
//!
//! [`rebinarize`] recovers a binary image as `phi < 0`.

mod convolve;
mod sdt;

pub use convolve::GaussianKernel1D;

use crate::grid::{read_volume_with_meta, write_volume_with_meta, Axis, ElementType};
use crate::{BinaryGrid3, Error, Result, ScalarGrid3};
use std::path::Path;

/// How an embedding was constructed. Carried as provenance so downstream
/// regularization can resolve epsilon in the right units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EmbedMethod {
    /// `phi = threshold - blur(I)`; unitless values in `[T-1, T]`.
    GaussianBlur { sigma_mm: f64, threshold: f64 },
    /// `phi = +/- distance` in mm.
    SignedDistance,
}

impl EmbedMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EmbedMethod::GaussianBlur { .. } => "gaussian_blur",
            EmbedMethod::SignedDistance => "signed_distance",
        }
    }
}

/// A scalar field whose zero level set is the surface, with provenance.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub field: ScalarGrid3,
    pub method: EmbedMethod,
}

impl Embedding {
    /// Sign convention of this crate: the inside of the surface is the
    /// negative side of every embedding.
    pub fn inside_negative(&self) -> bool {
        true
    }
}

/// Embed a binary image as the threshold-shifted Gaussian blur,
/// `phi = threshold - G_sigma * I`.
///
/// `sigma_mm` is physical; it is converted per axis so anisotropic grids
/// blur isotropically in space. The caller should keep at least a kernel
/// radius (`ceil(4*sigma/h)` voxels) of background between the object and
/// the domain boundary; out-of-domain samples are treated as background.
pub fn gaussian_embed(image: &BinaryGrid3, sigma_mm: f64, threshold: f64) -> Result<Embedding> {
    if !(threshold.is_finite() && threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0,1), got {threshold}"
        )));
    }
    let dims = image.dims();
    let spacing = image.spacing();
    let mut values: Vec<f64> = image.values().iter().map(|&v| v as f64).collect();
    for axis in Axis::ALL {
        let kernel = GaussianKernel1D::new(sigma_mm, spacing.axis(axis))?;
        values = convolve::blur_axis(&values, dims, axis, &kernel);
    }
    // the blur of a {0,1} image is a convex combination; clamp the last
    // ulp of rounding so phi stays exactly inside [T-1, T]
    let phi: Vec<f64> = values
        .into_iter()
        .map(|b| threshold - b.clamp(0.0, 1.0))
        .collect();
    let field = ScalarGrid3::new(dims, spacing, image.origin(), phi)?;
    Ok(Embedding {
        field,
        method: EmbedMethod::GaussianBlur {
            sigma_mm,
            threshold,
        },
    })
}

/// Embed a binary image with the signed exact Euclidean distance
/// transform: `+d` to the nearest foreground voxel center on the outside,
/// `-d` to the nearest background voxel center on the inside.
pub fn sdt_embed(image: &BinaryGrid3) -> Result<Embedding> {
    let fg = image.count_foreground();
    if fg == 0 {
        return Err(Error::NoSurface("background"));
    }
    if fg == image.dims().len() {
        return Err(Error::NoSurface("foreground"));
    }
    let dims = image.dims();
    let spacing = image.spacing();
    let is_fg: Vec<bool> = image.values().iter().map(|&v| v == 1).collect();
    let is_bg: Vec<bool> = image.values().iter().map(|&v| v == 0).collect();
    let d2_fg = sdt::squared_distance_to(&is_fg, dims, spacing);
    let d2_bg = sdt::squared_distance_to(&is_bg, dims, spacing);
    let phi: Vec<f64> = is_fg
        .iter()
        .zip(d2_fg.iter().zip(&d2_bg))
        .map(|(&fg, (&to_fg, &to_bg))| {
            if fg {
                -to_bg.sqrt()
            } else {
                to_fg.sqrt()
            }
        })
        .collect();
    let field = ScalarGrid3::new(dims, spacing, image.origin(), phi)?;
    Ok(Embedding {
        field,
        method: EmbedMethod::SignedDistance,
    })
}

/// Recover a binary image from an embedding: 1 where `phi < 0`, else 0.
/// `phi = 0` maps to background.
pub fn rebinarize(e: &Embedding) -> BinaryGrid3 {
    let values: Vec<u8> = e.field.values().iter().map(|&v| u8::from(v < 0.0)).collect();
    BinaryGrid3::new(e.field.dims(), e.field.spacing(), e.field.origin(), values)
        .expect("thresholded values are binary")
}

/// Write an embedding as a MET_DOUBLE volume with provenance keys in the
/// header (`EmbedMethod`, and for Gaussian embeddings `EmbedSigma`,
/// `EmbedThreshold`).
pub fn write_embedding(path: impl AsRef<Path>, e: &Embedding) -> Result<()> {
    let mut extra: Vec<(&str, String)> = Vec::new();
    match e.method {
        EmbedMethod::GaussianBlur {
            sigma_mm,
            threshold,
        } => {
            extra.push(("EmbedMethod", "GaussianBlur".to_string()));
            extra.push(("EmbedSigma", format!("{sigma_mm}")));
            extra.push(("EmbedThreshold", format!("{threshold}")));
        }
        EmbedMethod::SignedDistance => {
            extra.push(("EmbedMethod", "SignedDistance".to_string()));
        }
    }
    write_volume_with_meta(path, &e.field, ElementType::Double, &extra)
}

/// Read a volume written by [`write_embedding`], reconstructing the
/// method from the header keys. Fails when the provenance keys are absent
/// (a plain volume is not an embedding).
pub fn read_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    let path = path.as_ref();
    let (field, meta) = read_volume_with_meta(path)?;
    let method = match meta.get("EmbedMethod").map(String::as_str) {
        Some("GaussianBlur") => {
            let sigma_mm = parse_meta(path, &meta, "EmbedSigma")?;
            let threshold = parse_meta(path, &meta, "EmbedThreshold")?;
            EmbedMethod::GaussianBlur {
                sigma_mm,
                threshold,
            }
        }
        Some("SignedDistance") => EmbedMethod::SignedDistance,
        Some(other) => {
            return Err(Error::VolumeFormat {
                path: path.display().to_string(),
                reason: format!("unknown EmbedMethod {other:?}"),
            })
        }
        None => {
            return Err(Error::VolumeFormat {
                path: path.display().to_string(),
                reason: "volume has no EmbedMethod key; it is not an embedding \
                         (embed it first, or supply the method explicitly)"
                    .to_string(),
            })
        }
    };
    Ok(Embedding { field, method })
}

fn parse_meta(
    path: &Path,
    meta: &std::collections::BTreeMap<String, String>,
    key: &str,
) -> Result<f64> {
    meta.get(key)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| Error::VolumeFormat {
            path: path.display().to_string(),
            reason: format!("missing or malformed {key} for a GaussianBlur embedding"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_sphere, Dims3, Spacing3};

    fn all_value_grid(dims: Dims3, v: u8) -> BinaryGrid3 {
        BinaryGrid3::new(
            dims,
            Spacing3::isotropic(0.5).unwrap(),
            [0.0; 3],
            vec![v; dims.len()],
        )
        .unwrap()
    }

    /// slab filling x <= boundary between voxels nx/2-1 and nx/2;
    /// origin chosen so the binary interface sits exactly at x = 0
    fn slab(nx: usize, h: f64, sigma: f64) -> (BinaryGrid3, f64) {
        let dims = Dims3::new(nx, 9, 9);
        let spacing = Spacing3::isotropic(h).unwrap();
        let edge = (nx / 2) as f64 * h - 0.5 * h;
        let origin = [-edge, 0.0, 0.0];
        let values: Vec<u8> = (0..dims.len())
            .map(|i| {
                let (x, _, _) = dims.coords(i);
                u8::from(x < nx / 2)
            })
            .collect();
        let g = BinaryGrid3::new(dims, spacing, origin, values).unwrap();
        (g, sigma)
    }

    #[test]
    fn constant_images_embed_to_constants() {
        let dims = Dims3::new(12, 10, 8);
        let ones = gaussian_embed(&all_value_grid(dims, 1), 1.0, 0.5).unwrap();
        assert!(ones.field.values().iter().all(|&v| v == -0.5));
        let zeros = gaussian_embed(&all_value_grid(dims, 0), 1.0, 0.5).unwrap();
        assert!(zeros.field.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn gaussian_embed_rejects_bad_parameters() {
        let g = all_value_grid(Dims3::new(4, 4, 4), 1);
        assert!(gaussian_embed(&g, 0.0, 0.5).is_err());
        assert!(gaussian_embed(&g, -2.0, 0.5).is_err());
        assert!(gaussian_embed(&g, 1.0, 0.0).is_err());
        assert!(gaussian_embed(&g, 1.0, 1.0).is_err());
    }

    #[test]
    fn blurred_step_matches_erf_profile() {
        // phi(x) = 0.5*erf(x / (sqrt(2) sigma)) for a step with the edge at x=0
        let h = 0.5;
        for sigma in [1.0, 2.0] {
            let (g, sigma) = slab(48, h, sigma);
            let e = gaussian_embed(&g, sigma, 0.5).unwrap();
            let dims = e.field.dims();
            for x in 0..dims.nx {
                let pos = e.field.position(x, 4, 4)[0];
                let expect = 0.5 * libm::erf(pos / (std::f64::consts::SQRT_2 * sigma));
                let got = e.field.at(x, 4, 4);
                assert!(
                    (got - expect).abs() < 1e-3,
                    "sigma {sigma} x {pos}: got {got}, erf profile {expect}"
                );
            }
        }
    }

    #[test]
    fn embedding_range_and_monotone_threshold_shift() {
        let g = synth_sphere(
            4.0,
            [6.0; 3],
            Dims3::new(25, 25, 25),
            Spacing3::isotropic(0.5).unwrap(),
        )
        .unwrap();
        let e1 = gaussian_embed(&g, 1.0, 0.5).unwrap();
        let e2 = gaussian_embed(&g, 1.0, 0.7).unwrap();
        for (&a, &b) in e1.field.values().iter().zip(e2.field.values()) {
            assert!((-0.5 - 1e-15..=0.5 + 1e-15).contains(&a));
            // raising T by 0.2 raises phi pointwise by exactly 0.2
            assert!(((b - a) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn foreground_background_swap_negates_the_field() {
        let g = synth_sphere(
            3.0,
            [5.0; 3],
            Dims3::new(21, 21, 21),
            Spacing3::isotropic(0.5).unwrap(),
        )
        .unwrap();
        let swapped: Vec<u8> = g.values().iter().map(|&v| 1 - v).collect();
        let gs = BinaryGrid3::new(g.dims(), g.spacing(), g.origin(), swapped).unwrap();
        let e = gaussian_embed(&g, 1.0, 0.5).unwrap();
        let es = gaussian_embed(&gs, 1.0, 0.5).unwrap();
        for (&a, &b) in e.field.values().iter().zip(es.field.values()) {
            assert!((a + b).abs() < 1e-12, "swap symmetry: {a} vs {b}");
        }
    }

    #[test]
    fn rebinarized_gaussian_slab_recovers_exactly() {
        let (g, sigma) = slab(40, 0.5, 1.5);
        let e = gaussian_embed(&g, sigma, 0.5).unwrap();
        let back = rebinarize(&e);
        assert_eq!(back.values(), g.values());
    }

    #[test]
    fn rebinarized_gaussian_sphere_shrinks_inward() {
        // convex foreground: blur acts like mean curvature flow, so the
        // recovered binary is contained in the original
        let g = synth_sphere(
            5.0,
            [8.0; 3],
            Dims3::new(33, 33, 33),
            Spacing3::isotropic(0.5).unwrap(),
        )
        .unwrap();
        let back = rebinarize(&gaussian_embed(&g, 1.0, 0.5).unwrap());
        let mut shrunk = 0usize;
        for (o, b) in g.values().iter().zip(back.values()) {
            assert!(!(*o == 0 && *b == 1), "recovered foreground outside original");
            if *o == 1 && *b == 0 {
                shrunk += 1;
            }
        }
        assert!(shrunk > 0, "a blurred sphere should lose at least one voxel");
    }

    #[test]
    fn sdt_single_voxel_neighbors() {
        let dims = Dims3::new(7, 7, 7);
        let mut values = vec![0u8; dims.len()];
        values[dims.index(3, 3, 3)] = 1;
        let g = BinaryGrid3::new(dims, Spacing3::isotropic(1.0).unwrap(), [0.0; 3], values)
            .unwrap();
        let e = sdt_embed(&g).unwrap();
        assert_eq!(e.field.at(3, 3, 3), -1.0);
        for (x, y, z) in [(2, 3, 3), (4, 3, 3), (3, 2, 3), (3, 4, 3), (3, 3, 2), (3, 3, 4)] {
            assert_eq!(e.field.at(x, y, z), 1.0);
        }
        assert_eq!(e.field.at(4, 4, 3), std::f64::consts::SQRT_2);
    }

    #[test]
    fn sdt_slab_steps_in_spacing_multiples() {
        let dims = Dims3::new(16, 5, 5);
        let spacing = Spacing3::isotropic(1.0).unwrap();
        let values: Vec<u8> = (0..dims.len())
            .map(|i| u8::from(dims.coords(i).0 < 8))
            .collect();
        let g = BinaryGrid3::new(dims, spacing, [0.0; 3], values).unwrap();
        let e = sdt_embed(&g).unwrap();
        for x in 0..16 {
            let expect = if x < 8 {
                -((8 - x) as f64)
            } else {
                (x - 7) as f64
            };
            assert_eq!(e.field.at(x, 2, 2), expect, "x = {x}");
        }
    }

    #[test]
    fn sdt_requires_both_phases() {
        let dims = Dims3::new(4, 4, 4);
        assert!(matches!(
            sdt_embed(&all_value_grid(dims, 1)),
            Err(Error::NoSurface("foreground"))
        ));
        assert!(matches!(
            sdt_embed(&all_value_grid(dims, 0)),
            Err(Error::NoSurface("background"))
        ));
    }

    #[test]
    fn sdt_rebinarize_is_exact() {
        let mut state = 0x42u64;
        let dims = Dims3::new(10, 10, 10);
        let spacing = Spacing3::new(0.7, 1.0, 0.625).unwrap();
        for _ in 0..5 {
            let values: Vec<u8> = (0..dims.len())
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    state.is_multiple_of(3) as u8
                })
                .collect();
            if values.iter().all(|&v| v == 0) || values.iter().all(|&v| v == 1) {
                continue;
            }
            let g = BinaryGrid3::new(dims, spacing, [0.0; 3], values).unwrap();
            let back = rebinarize(&sdt_embed(&g).unwrap());
            assert_eq!(back.values(), g.values());
        }
    }

    #[test]
    fn sdt_is_one_lipschitz_within_each_phase() {
        // distance-to-set functions are 1-Lipschitz, so same-sign voxel
        // pairs obey |phi(a)-phi(b)| <= dist(a,b) exactly. Across the
        // interface the center-to-center convention double-counts up to a
        // voxel gap (an isolated voxel reads -h with +h neighbors); that
        // slack is bounded by the largest voxel edge.
        let g = synth_sphere(
            3.0,
            [5.0; 3],
            Dims3::new(17, 17, 17),
            Spacing3::new(0.625, 0.625, 1.0).unwrap(),
        )
        .unwrap();
        let e = sdt_embed(&g).unwrap();
        let f = &e.field;
        let d = f.dims();
        let slack = f.spacing().max_edge();
        let mut state = 0x77u64;
        for _ in 0..4000 {
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state as usize
            };
            let a = (next() % d.nx, next() % d.ny, next() % d.nz);
            let b = (next() % d.nx, next() % d.ny, next() % d.nz);
            let pa = f.position(a.0, a.1, a.2);
            let pb = f.position(b.0, b.1, b.2);
            let dist = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2))
                .sqrt();
            let va = f.at(a.0, a.1, a.2);
            let vb = f.at(b.0, b.1, b.2);
            let dphi = (va - vb).abs();
            if va.signum() == vb.signum() {
                assert!(
                    dphi <= dist + 1e-9,
                    "same phase: |phi(a)-phi(b)| = {dphi} > dist = {dist}"
                );
            } else {
                assert!(
                    dphi <= dist + slack + 1e-9,
                    "cross phase: |phi(a)-phi(b)| = {dphi} > dist + slack = {}",
                    dist + slack
                );
            }
        }
    }

    #[test]
    fn embedding_files_round_trip_with_method() {
        let dir = tempfile::tempdir().unwrap();
        let g = synth_sphere(
            3.0,
            [5.0; 3],
            Dims3::new(17, 17, 17),
            Spacing3::isotropic(0.625).unwrap(),
        )
        .unwrap();

        let e = gaussian_embed(&g, 1.25, 0.5).unwrap();
        let p = dir.path().join("gauss.mhd");
        write_embedding(&p, &e).unwrap();
        let back = read_embedding(&p).unwrap();
        assert_eq!(back.field, e.field);
        assert_eq!(
            back.method,
            EmbedMethod::GaussianBlur {
                sigma_mm: 1.25,
                threshold: 0.5
            }
        );

        let e = sdt_embed(&g).unwrap();
        let p = dir.path().join("sdt.mhd");
        write_embedding(&p, &e).unwrap();
        let back = read_embedding(&p).unwrap();
        assert_eq!(back.method, EmbedMethod::SignedDistance);

        // a plain volume is not an embedding
        let plain = dir.path().join("plain.mhd");
        crate::grid::write_volume(&plain, &e.field, ElementType::Double).unwrap();
        assert!(read_embedding(&plain).is_err());
    }
}
