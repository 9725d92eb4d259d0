//! Implementations behind the subcommands: argument digestion, pipeline
//! wiring, and fixed-name outputs under `--out`.

use crate::{
    usage_error, CompareArgs, EmbedArgs, HistoArgs, MeshArgs, MethodArg, MorphArgs, ShapeCommand,
    SphereArgs, SweepArgs, SweepVar, SynthArgs, TorusArgs,
};
use anyhow::{anyhow, bail, Context, Result};
use levelmorph::diffgeo::{curvature_fields, derivatives, principal_fields, CurvatureFields};
use levelmorph::embed::{read_embedding, write_embedding};
use levelmorph::grid::{
    flatten_binary, read_volume, synth_sphere, synth_torus, write_binary_volume, Axis,
    BinaryGrid3, Dims3, Spacing3,
};
use levelmorph::mesh::{
    euler_from_mesh, histogram, histogram_csv, marching_cubes, read_ply, sample_at_vertices,
    write_ply, TriMesh,
};
use levelmorph::{gaussian_embed, morphometry, sdt_embed, Embedding, MorphReport, RegParams};
use serde::Serialize;
use std::fs;
use std::path::Path;

fn parse_floats(name: &str, s: &str, n: usize) -> Vec<f64> {
    let parts: Vec<&str> = s.split(',').collect();
    let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match parsed {
        Some(v) if v.len() == n => v,
        Some(v) if v.len() == 1 && n == 3 => vec![v[0]; 3],
        _ => usage_error(&format!("--{name} expects {n} comma-separated numbers (or one value), got {s:?}")),
    }
}

fn parse_spacing(s: &str) -> Spacing3 {
    let v = parse_floats("spacing", s, 3);
    match Spacing3::new(v[0], v[1], v[2]) {
        Ok(sp) => sp,
        Err(e) => usage_error(&format!("{e}")),
    }
}

fn parse_dims(s: &str) -> Dims3 {
    let parts: Vec<&str> = s.split(',').collect();
    let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match parsed {
        Some(v) if v.len() == 3 => Dims3::new(v[0], v[1], v[2]),
        _ => usage_error(&format!("--dims expects NX,NY,NZ, got {s:?}")),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Grid sized so the shape's half-extents plus the margin fit per axis,
/// with the shape centered mid-span.
fn auto_domain(half_extents: [f64; 3], margin: f64, spacing: Spacing3) -> (Dims3, [f64; 3]) {
    let n = |half: f64, h: f64| ((2.0 * (half + margin) / h).ceil() as usize + 1).max(2);
    let dims = Dims3::new(
        n(half_extents[0], spacing.hx),
        n(half_extents[1], spacing.hy),
        n(half_extents[2], spacing.hz),
    );
    let center = [
        (dims.nx - 1) as f64 * spacing.hx / 2.0,
        (dims.ny - 1) as f64 * spacing.hy / 2.0,
        (dims.nz - 1) as f64 * spacing.hz / 2.0,
    ];
    (dims, center)
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let (binary, out) = match args.shape {
        ShapeCommand::Sphere(SphereArgs { radius, common }) => {
            let spacing = parse_spacing(&common.spacing);
            let (dims, auto_center) =
                auto_domain([radius, radius, radius], common.margin, spacing);
            let dims = common.dims.as_deref().map(parse_dims).unwrap_or(dims);
            let center = match &common.center {
                Some(c) => parse_floats("center", c, 3),
                None => vec![
                    (dims.nx - 1) as f64 * spacing.hx / 2.0,
                    (dims.ny - 1) as f64 * spacing.hy / 2.0,
                    (dims.nz - 1) as f64 * spacing.hz / 2.0,
                ],
            };
            let _ = auto_center;
            let g = synth_sphere(radius, [center[0], center[1], center[2]], dims, spacing)?;
            (g, common.out)
        }
        ShapeCommand::Torus(TorusArgs {
            inner,
            outer,
            axis,
            common,
        }) => {
            let spacing = parse_spacing(&common.spacing);
            let axis: Axis = axis.parse().unwrap_or_else(|e: String| usage_error(&e));
            let tube = 0.5 * (outer - inner);
            let mut half = [outer, outer, outer];
            half[axis as usize] = tube.max(0.0);
            let (dims, auto_center) = auto_domain(half, common.margin, spacing);
            let dims = common.dims.as_deref().map(parse_dims).unwrap_or(dims);
            let center = match &common.center {
                Some(c) => parse_floats("center", c, 3),
                None => vec![
                    (dims.nx - 1) as f64 * spacing.hx / 2.0,
                    (dims.ny - 1) as f64 * spacing.hy / 2.0,
                    (dims.nz - 1) as f64 * spacing.hz / 2.0,
                ],
            };
            let _ = auto_center;
            let g = synth_torus(
                inner,
                outer,
                [center[0], center[1], center[2]],
                axis,
                dims,
                spacing,
            )?;
            (g, common.out)
        }
    };
    ensure_out_dir(&out)?;
    let path = out.join("volume.mhd");
    write_binary_volume(&path, &binary)?;
    let d = binary.dims();
    println!(
        "wrote {} ({}x{}x{} voxels, {} foreground, {:.2} mm^3)",
        path.display(),
        d.nx,
        d.ny,
        d.nz,
        binary.count_foreground(),
        binary.foreground_volume()
    );
    Ok(())
}

fn load_binary(input: &Path, flatten_at: f64, pad_voxels: usize) -> Result<BinaryGrid3> {
    let raw = read_volume(input)?;
    let flat = flatten_binary(&raw, flatten_at)?;
    let padded = flat.padded((pad_voxels, pad_voxels, pad_voxels), 0)?;
    Ok(padded)
}

fn build_embedding(
    binary: &BinaryGrid3,
    method: MethodArg,
    sigma: Option<f64>,
    threshold: f64,
) -> Result<Embedding> {
    match method {
        MethodArg::Gauss => {
            let sigma = sigma.ok_or_else(|| anyhow!("--sigma is required for --method gauss"))?;
            Ok(gaussian_embed(binary, sigma, threshold)?)
        }
        MethodArg::Sdt => Ok(sdt_embed(binary)?),
    }
}

pub fn embed(args: EmbedArgs) -> Result<()> {
    let binary = load_binary(&args.input, args.flatten_at, args.pad_voxels)?;
    let embedding = build_embedding(&binary, args.method, args.sigma, args.threshold)?;
    ensure_out_dir(&args.out)?;
    let path = args.out.join("embedding.mhd");
    write_embedding(&path, &embedding)?;
    let lo = embedding.field.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = embedding
        .field
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "wrote {} (method {}, phi in [{:.4}, {:.4}])",
        path.display(),
        embedding.method.name(),
        lo,
        hi
    );
    Ok(())
}

fn load_or_build_embedding(
    input: &Path,
    method: Option<MethodArg>,
    sigma: Option<f64>,
    threshold: f64,
    flatten_at: f64,
    pad_voxels: usize,
) -> Result<Embedding> {
    match method {
        Some(m) => {
            let binary = load_binary(input, flatten_at, pad_voxels)?;
            build_embedding(&binary, m, sigma, threshold)
        }
        None => Ok(read_embedding(input)?),
    }
}

fn print_report(report: &MorphReport) {
    println!("  volume            {:>14.3} mm^3", report.volume_mm3);
    println!("  area              {:>14.3} mm^2", report.area_mm2);
    match report.avg_mean_curv_per_mm {
        Some(h) => println!("  avg mean curv     {:>14.6} /mm", h),
        None => println!("  avg mean curv          undefined (no surface)"),
    }
    println!("  total mean curv   {:>14.3} mm", report.total_mean_curv_mm);
    println!("  total gauss curv  {:>14.6}", report.total_gauss_curv);
    println!("  chi raw           {:>14.4}", report.chi_raw);
    println!("  chi               {:>14}", report.chi);
    println!("  masked samples    {:>14}", report.masked_samples);
}

pub fn morph(args: MorphArgs) -> Result<()> {
    let embedding = load_or_build_embedding(
        &args.input,
        args.method,
        args.sigma,
        args.threshold,
        args.flatten_at,
        args.pad_voxels,
    )?;
    let params = RegParams::for_method(args.thickness, &embedding.method)?;
    let report = morphometry(&embedding, &params)?;
    ensure_out_dir(&args.out)?;
    fs::write(args.out.join("report.json"), report.to_json())?;
    fs::write(
        args.out.join("report.csv"),
        format!("{}\n{}\n", MorphReport::csv_header(), report.csv_row()),
    )?;
    println!(
        "morphometry of {} ({}):",
        args.input.display(),
        embedding.method.name()
    );
    print_report(&report);
    Ok(())
}

/// Curvature channels supported on mesh vertices.
fn attach_channels(
    mesh: &mut TriMesh,
    embedding: &Embedding,
    names: &[&str],
) -> Result<()> {
    if names.is_empty() {
        return Ok(());
    }
    let curv: CurvatureFields = curvature_fields(&derivatives(&embedding.field)?);
    let principal = names.iter().any(|n| *n == "K1" || *n == "K2");
    let (k1, k2) = if principal {
        let (a, b) = principal_fields(&curv);
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    for name in names {
        let field = match *name {
            "H" => &curv.mean,
            "K" => &curv.gauss,
            "K1" => k1.as_ref().unwrap(),
            "K2" => k2.as_ref().unwrap(),
            other => bail!("unknown channel {other:?}; choose from H, K, K1, K2"),
        };
        sample_at_vertices(mesh, field, name)?;
    }
    Ok(())
}

pub fn mesh(args: MeshArgs) -> Result<()> {
    let embedding = read_embedding(&args.input)?;
    let mut mesh = marching_cubes(&embedding);
    if mesh.triangles.is_empty() {
        eprintln!("warning: the zero level set is empty; writing an empty mesh");
    }
    let names: Vec<&str> = args
        .with
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if !mesh.vertices.is_empty() {
        attach_channels(&mut mesh, &embedding, &names)?;
    }
    ensure_out_dir(&args.out)?;
    let path = args.out.join("surface.ply");
    write_ply(&path, &mesh)?;
    let euler = euler_from_mesh(&mesh);
    println!(
        "wrote {} ({} vertices, {} triangles, chi={}, closed={})",
        path.display(),
        euler.vertex_count,
        euler.face_count,
        euler.chi,
        euler.is_closed_manifold()
    );
    Ok(())
}

pub fn histo(args: HistoArgs) -> Result<()> {
    if args.lo >= args.hi {
        usage_error(&format!(
            "--lo must be below --hi, got [{}, {})",
            args.lo, args.hi
        ));
    }
    if args.bins == 0 {
        usage_error("--bins must be at least 1");
    }
    let is_ply = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("ply"))
        .unwrap_or(false);
    let values: Vec<f64> = if is_ply {
        let mesh = read_ply(&args.input)?;
        mesh.channel(&args.channel)
            .ok_or_else(|| {
                anyhow!(
                    "{} has no channel {:?} (available: {})",
                    args.input.display(),
                    args.channel,
                    mesh.channels
                        .iter()
                        .map(|(n, _)| n.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })?
            .to_vec()
    } else {
        let embedding = read_embedding(&args.input)?;
        let mut mesh = marching_cubes(&embedding);
        if mesh.vertices.is_empty() {
            eprintln!("warning: the zero level set is empty; histogram will be empty");
            Vec::new()
        } else {
            attach_channels(&mut mesh, &embedding, &[&args.channel])?;
            mesh.channel(&args.channel).unwrap().to_vec()
        }
    };
    let h = histogram(&values, args.bins, (args.lo, args.hi))?;
    ensure_out_dir(&args.out)?;
    let path = args.out.join("histogram.csv");
    fs::write(&path, histogram_csv(&h))?;
    println!(
        "wrote {} ({} samples, {} underflow, {} overflow, mode bin at {:?})",
        path.display(),
        h.total(),
        h.underflow,
        h.overflow,
        h.mode_bin_left()
    );
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    if !(args.from.is_finite() && args.to.is_finite()) || args.from <= 0.0 || args.to < args.from {
        usage_error(&format!(
            "invalid sweep range: --from {} --to {}",
            args.from, args.to
        ));
    }
    if args.steps == 0 {
        usage_error("--steps must be at least 1");
    }
    let binary = load_binary(&args.input, args.flatten_at, args.pad_voxels)?;
    let values: Vec<f64> = (0..args.steps)
        .map(|i| {
            if args.steps == 1 {
                args.from
            } else {
                args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64
            }
        })
        .collect();

    let mut csv = format!("sweep_param,sweep_value,{}\n", MorphReport::csv_header());
    match args.vary {
        SweepVar::Thickness => {
            // one embedding, many regularization widths
            let embedding =
                build_embedding(&binary, MethodArg::Gauss, Some(args.sigma), args.threshold)?;
            for &t in &values {
                let params = RegParams::for_method(t, &embedding.method)?;
                let report = morphometry(&embedding, &params)?;
                csv.push_str(&format!("thickness,{t},{}\n", report.csv_row()));
            }
        }
        SweepVar::Sigma => {
            for &sigma in &values {
                let embedding =
                    build_embedding(&binary, MethodArg::Gauss, Some(sigma), args.threshold)?;
                let params = RegParams::for_method(args.thickness, &embedding.method)?;
                let report = morphometry(&embedding, &params)?;
                csv.push_str(&format!("sigma,{sigma},{}\n", report.csv_row()));
            }
        }
    }
    ensure_out_dir(&args.out)?;
    let path = args.out.join("sweep.csv");
    fs::write(&path, csv)?;
    println!("wrote {} ({} rows)", path.display(), values.len());
    Ok(())
}

/// Interquartile range with linearly interpolated quartiles.
fn iqr(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| {
        let idx = p * (v.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (idx - lo as f64)
    };
    Some(quantile(0.75) - quantile(0.25))
}

fn vertex_mean_curvature(embedding: &Embedding) -> Result<Vec<f64>> {
    let mut mesh = marching_cubes(embedding);
    if mesh.vertices.is_empty() {
        return Ok(Vec::new());
    }
    let curv = curvature_fields(&derivatives(&embedding.field)?);
    sample_at_vertices(&mut mesh, &curv.mean, "H")?;
    Ok(mesh.channel("H").unwrap().to_vec())
}

#[derive(Serialize)]
struct CompareReport {
    gauss: MorphReport,
    sdt: MorphReport,
    vertex_h_iqr_gauss: Option<f64>,
    vertex_h_iqr_sdt: Option<f64>,
    /// The artifact headline: how much wider the signed-distance
    /// vertex-curvature distribution is.
    h_iqr_ratio_sdt_over_gauss: Option<f64>,
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let binary = load_binary(&args.input, args.flatten_at, args.pad_voxels)?;

    let gauss_embedding =
        build_embedding(&binary, MethodArg::Gauss, Some(args.sigma), args.threshold)?;
    let gauss_params = RegParams::for_method(args.thickness, &gauss_embedding.method)?;
    let gauss_report = morphometry(&gauss_embedding, &gauss_params)?;
    let gauss_h = vertex_mean_curvature(&gauss_embedding)?;

    let sdt_embedding = build_embedding(&binary, MethodArg::Sdt, None, args.threshold)?;
    let sdt_params = RegParams::for_method(args.thickness, &sdt_embedding.method)?;
    let sdt_report = morphometry(&sdt_embedding, &sdt_params)?;
    let sdt_h = vertex_mean_curvature(&sdt_embedding)?;

    let iqr_gauss = iqr(&gauss_h);
    let iqr_sdt = iqr(&sdt_h);
    let ratio = match (iqr_gauss, iqr_sdt) {
        (Some(g), Some(s)) if g > 0.0 => Some(s / g),
        _ => None,
    };

    let mut csv = format!("{}\n", MorphReport::csv_header());
    csv.push_str(&format!("{}\n", gauss_report.csv_row()));
    csv.push_str(&format!("{}\n", sdt_report.csv_row()));

    let out = CompareReport {
        gauss: gauss_report,
        sdt: sdt_report,
        vertex_h_iqr_gauss: iqr_gauss,
        vertex_h_iqr_sdt: iqr_sdt,
        h_iqr_ratio_sdt_over_gauss: ratio,
    };

    ensure_out_dir(&args.out)?;
    let mut json = serde_json::to_string_pretty(&out).expect("report serializes");
    json.push('\n');
    fs::write(args.out.join("compare.json"), json)?;
    fs::write(args.out.join("compare.csv"), csv)?;

    println!("gaussian blur (sigma = {} mm):", args.sigma);
    print_report(&out.gauss);
    println!("signed distance transform:");
    print_report(&out.sdt);
    match (iqr_gauss, iqr_sdt, ratio) {
        (Some(g), Some(s), Some(r)) => {
            println!("vertex-H IQR: gauss {g:.5} /mm, sdt {s:.5} /mm, ratio (sdt/gauss) {r:.2}")
        }
        _ => println!("vertex-H IQR unavailable (empty surface)"),
    }
    Ok(())
}
