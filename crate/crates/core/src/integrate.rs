//! Regularized volume/surface integrals and global morphometrics.
//!
//! Volume is the integral of the regularized Heaviside of `-phi`, area the
//! integral of `dirac(phi) |grad phi|`, and any surface quantity `Q`
//! integrates as `Q dirac(phi) |grad phi|` over the image domain. From
//! those come the derived outcomes: average mean curvature `<H> = Hbar/A`
//! and, by Gauss-Bonnet, the Euler-Poincaré characteristic
//! `chi = Kbar / 2 pi`. `chi` is reported both raw and rounded: the raw
//! value is diagnostic, drifting off-integer exactly when the surface is
//! under-resolved.
//!
//! The volume integrand is a smoothed step, and composite Simpson
//! ([`simpson3`], per axis over the voxel-center span, closing an
//! odd-interval axis with one 3/8 triple) removes the one-sided bias a
//! plain Riemann sum leaves there. The Dirac-weighted integrands are
//! narrow ridges along the surface; for those the equal-weight voxel sum
//! is the accurate rule (for a compactly supported C¹ bump it behaves
//! like the trapezoid rule with vanishing boundary terms, while Simpson's
//! 1-4-2-4 weighting aliases against a ridge a few voxels wide), so area
//! and the curvature totals use [`voxel_sum`]. Either way, reductions use
//! compensated summation in a fixed association order (parallel line
//! sums, serial combine), so results are bit-identical at any thread
//! count.

use crate::diffgeo::{curvature_fields, derivatives};
use crate::regularize::{dirac_eps, heaviside_eps, RegParams};
use crate::{Embedding, Error, Result, ScalarGrid3};
use serde::Serialize;

/// Composite Simpson weights along one axis: `integral = sum w[i] f[i]`
/// over the span `(n-1)*h`. Size-1 axes weigh 1 (the axis is bypassed);
/// 2-sample axes cannot carry Simpson's rule.
fn axis_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::GridTooSmall("axis of zero length".into())),
        1 => Ok(vec![1.0]),
        2 => Err(Error::GridTooSmall(
            "Simpson quadrature needs at least 3 samples per axis (or exactly 1 for a degenerate axis)"
                .into(),
        )),
        _ => {
            let intervals = n - 1;
            let mut w = vec![0.0; n];
            let head = if intervals.is_multiple_of(2) {
                intervals
            } else {
                intervals - 3
            };
            if head > 0 {
                let c = h / 3.0;
                w[0] += c;
                w[head] += c;
                for (i, wi) in w.iter_mut().enumerate().take(head).skip(1) {
                    *wi += if i % 2 == 1 { 4.0 * c } else { 2.0 * c };
                }
            }
            if intervals % 2 == 1 {
                // close the axis with one 3/8 triple
                let c = 3.0 * h / 8.0;
                w[head] += c;
                w[head + 1] += 3.0 * c;
                w[head + 2] += 3.0 * c;
                w[head + 3] += c;
            }
            Ok(w)
        }
    }
}

/// Neumaier-compensated sum; deterministic for a fixed iteration order.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Integrate a field over its voxel-center span with composite Simpson
/// applied along x, then y, then z.
pub fn simpson3(f: &ScalarGrid3) -> Result<f64> {
    let dims = f.dims();
    let sp = f.spacing();
    let wx = axis_weights(dims.nx, sp.hx)?;
    let wy = axis_weights(dims.ny, sp.hy)?;
    let wz = axis_weights(dims.nz, sp.hz)?;
    let values = f.values();

    // one compensated line sum per (y, z); filled in parallel, combined
    // serially in a fixed order
    let nx = dims.nx;
    let lines = crate::parallel::par_fill(dims.ny * dims.nz, |line| {
        let base = line * nx;
        compensated_sum((0..nx).map(|i| wx[i] * values[base + i]))
    });
    Ok(compensated_sum((0..dims.ny * dims.nz).map(|line| {
        let y = line % dims.ny;
        let z = line / dims.ny;
        wz[z] * wy[y] * lines[line]
    })))
}

/// Integrate a field as the equal-weight voxel sum times the voxel
/// volume, with the same deterministic two-stage compensated reduction
/// as [`simpson3`].
pub fn voxel_sum(f: &ScalarGrid3) -> f64 {
    let dims = f.dims();
    let values = f.values();
    let nx = dims.nx;
    let lines = crate::parallel::par_fill(dims.ny * dims.nz, |line| {
        compensated_sum(values[line * nx..(line + 1) * nx].iter().copied())
    });
    compensated_sum(lines.iter().copied()) * f.spacing().voxel_volume()
}

fn check_regime(e: &Embedding, p: &RegParams) -> Result<f64> {
    if !p.matches(&e.method) {
        return Err(Error::RegimeMismatch(format!(
            "embedding method {} with epsilon {:?}",
            e.method.name(),
            p.epsilon
        )));
    }
    Ok(p.epsilon.value())
}

/// Enclosed volume in mm³: `integral of theta_eps(-phi)`.
pub fn volume(e: &Embedding, p: &RegParams) -> Result<f64> {
    let eps = check_regime(e, p)?;
    let theta = e.field.map(|v| heaviside_eps(-v, eps))?;
    simpson3(&theta)
}

/// Surface area in mm²: `integral of dirac_eps(phi) |grad phi|`.
pub fn area(e: &Embedding, p: &RegParams) -> Result<f64> {
    let eps = check_regime(e, p)?;
    let bundle = derivatives(&e.field)?;
    let curv = curvature_fields(&bundle);
    drop(bundle);
    let phi = &e.field;
    let g = curv.gradnorm.values();
    let values = crate::parallel::par_fill(g.len(), |i| {
        dirac_eps(phi.values()[i], eps) * g[i]
    });
    Ok(voxel_sum(&ScalarGrid3::new(
        phi.dims(),
        phi.spacing(),
        phi.origin(),
        values,
    )?))
}

/// Integrate a scalar field over the surface:
/// `integral of Q dirac_eps(phi) |grad phi|`.
pub fn surface_integral(q: &ScalarGrid3, e: &Embedding, p: &RegParams) -> Result<f64> {
    if !q.same_layout(&e.field) {
        return Err(Error::InvalidGrid(
            "surface integrand does not share the embedding's lattice".into(),
        ));
    }
    let eps = check_regime(e, p)?;
    let bundle = derivatives(&e.field)?;
    let curv = curvature_fields(&bundle);
    drop(bundle);
    let g = curv.gradnorm.values();
    let values = crate::parallel::par_fill(g.len(), |i| {
        q.values()[i] * dirac_eps(e.field.values()[i], eps) * g[i]
    });
    Ok(voxel_sum(&ScalarGrid3::new(
        q.dims(),
        q.spacing(),
        q.origin(),
        values,
    )?))
}

/// Area floor below which the average mean curvature is undefined.
const AREA_FLOOR_MM2: f64 = 1e-9;

/// Global morphometric outcomes of one embedding.
///
/// Serialized field order is the wire order of the JSON report; the CSV
/// row flattens the same columns.
#[derive(Clone, Debug, Serialize)]
pub struct MorphReport {
    pub volume_mm3: f64,
    pub area_mm2: f64,
    /// Hbar, total mean curvature, mm.
    pub total_mean_curv_mm: f64,
    /// Kbar, total Gaussian curvature, dimensionless.
    pub total_gauss_curv: f64,
    /// `<H> = Hbar / A`, 1/mm; undefined (null) when the area is below
    /// the floor.
    pub avg_mean_curv_per_mm: Option<f64>,
    /// `Kbar / 2 pi`; integer for a cleanly resolved closed surface.
    pub chi_raw: f64,
    /// `chi_raw` rounded to the nearest integer.
    pub chi: i64,
    pub params: ReportParams,
    /// Voxels inside the Dirac support whose curvature was masked by the
    /// gradient floor; they contribute zero to the curvature integrals.
    pub masked_samples: u64,
}

/// Parameter provenance carried in every report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportParams {
    pub method: String,
    pub sigma_mm: Option<f64>,
    #[serde(rename = "T")]
    pub threshold: Option<f64>,
    pub t_mm: f64,
    pub epsilon: f64,
}

impl MorphReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn csv_header() -> &'static str {
        "volume_mm3,area_mm2,total_mean_curv_mm,total_gauss_curv,avg_mean_curv_per_mm,chi_raw,chi,method,sigma_mm,T,t_mm,epsilon,masked_samples"
    }

    /// One CSV row matching [`MorphReport::csv_header`]; undefined or
    /// inapplicable fields stay empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.volume_mm3,
            self.area_mm2,
            self.total_mean_curv_mm,
            self.total_gauss_curv,
            opt(self.avg_mean_curv_per_mm),
            self.chi_raw,
            self.chi,
            self.params.method,
            opt(self.params.sigma_mm),
            opt(self.params.threshold),
            self.params.t_mm,
            self.params.epsilon,
            self.masked_samples
        )
    }
}

/// Compute every global morphometric of an embedding in one pass:
/// volume, area, total and average mean curvature, total Gaussian
/// curvature, and the Euler-Poincaré characteristic.
pub fn morphometry(e: &Embedding, p: &RegParams) -> Result<MorphReport> {
    let eps = check_regime(e, p)?;
    let phi = &e.field;
    let n = phi.values().len();

    let bundle = derivatives(phi)?;
    let curv = curvature_fields(&bundle);
    drop(bundle);

    let theta = phi.map(|v| heaviside_eps(-v, eps))?;
    let volume_mm3 = simpson3(&theta)?;
    drop(theta);

    let g = curv.gradnorm.values();
    let dirac_g = crate::parallel::par_fill(n, |i| dirac_eps(phi.values()[i], eps) * g[i]);
    let masked_samples = dirac_g
        .iter()
        .zip(&curv.valid)
        .filter(|(d, ok)| **d != 0.0 && !**ok)
        .count() as u64;

    let wrap = |values: Vec<f64>| ScalarGrid3::new(phi.dims(), phi.spacing(), phi.origin(), values);
    let area_mm2 = voxel_sum(&wrap(dirac_g.clone())?);
    let h_weighted = crate::parallel::par_fill(n, |i| curv.mean.values()[i] * dirac_g[i]);
    let total_mean_curv_mm = voxel_sum(&wrap(h_weighted)?);
    let k_weighted = crate::parallel::par_fill(n, |i| curv.gauss.values()[i] * dirac_g[i]);
    let total_gauss_curv = voxel_sum(&wrap(k_weighted)?);

    let avg_mean_curv_per_mm = if area_mm2 > AREA_FLOOR_MM2 {
        Some(total_mean_curv_mm / area_mm2)
    } else {
        None
    };
    let chi_raw = total_gauss_curv / (2.0 * std::f64::consts::PI);

    let (sigma_mm, threshold) = match e.method {
        crate::EmbedMethod::GaussianBlur {
            sigma_mm,
            threshold,
        } => (Some(sigma_mm), Some(threshold)),
        crate::EmbedMethod::SignedDistance => (None, None),
    };

    Ok(MorphReport {
        volume_mm3,
        area_mm2,
        total_mean_curv_mm,
        total_gauss_curv,
        avg_mean_curv_per_mm,
        chi_raw,
        chi: chi_raw.round() as i64,
        params: ReportParams {
            method: e.method.name().to_string(),
            sigma_mm,
            threshold,
            t_mm: p.thickness_mm,
            epsilon: eps,
        },
        masked_samples,
    })
}
