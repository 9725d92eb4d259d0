//! Command-line front end for the implicit-surface morphometry pipeline.
//!
//! Subcommands mirror the pipeline stages: `synth` rasterizes a test
//! shape, `embed` turns a binary volume into an embedding, `morph`
//! computes the global morphometrics, `mesh` extracts the zero
//! isosurface, `histo` bins vertex curvature, `sweep` repeats `morph`
//! over a parameter range, and `compare` runs the Gaussian and
//! signed-distance embeddings side by side.
//!
//! Every command writes its outputs under `--out` with fixed filenames
//! so stages can be chained and inspected. Exit codes: 0 on success, 1
//! on a computation/input error, 2 on a usage error. Set
//! `RAYON_NUM_THREADS` to cap the worker thread count; results do not
//! depend on it.

mod commands;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "levelmorph", version, about = "Morphometry of closed surfaces in binary volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a synthetic shape to a binary volume (volume.mhd)
    Synth(SynthArgs),
    /// Embed a binary volume as an implicit surface (embedding.mhd)
    Embed(EmbedArgs),
    /// Compute global morphometrics (report.json, report.csv)
    Morph(MorphArgs),
    /// Extract the zero isosurface as a triangle mesh (surface.ply)
    Mesh(MeshArgs),
    /// Histogram a per-vertex channel (histogram.csv)
    Histo(HistoArgs),
    /// Morphometrics over a parameter range (sweep.csv)
    Sweep(SweepArgs),
    /// Gaussian vs signed-distance embedding on one volume
    /// (compare.json, compare.csv)
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Threshold-shifted Gaussian blur
    Gauss,
    /// Signed Euclidean distance transform
    Sdt,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    shape: ShapeCommand,
}

#[derive(Subcommand)]
enum ShapeCommand {
    /// Solid sphere
    Sphere(SphereArgs),
    /// Solid torus
    Torus(TorusArgs),
}

#[derive(Args)]
struct CommonSynth {
    /// Voxel spacing in mm: one value or hx,hy,hz
    #[arg(long, value_name = "MM")]
    spacing: String,
    /// Background margin around the shape in mm (used when --dims is
    /// not given; leave at least 4*sigma plus the shell thickness)
    #[arg(long, value_name = "MM", default_value_t = 10.0)]
    margin: f64,
    /// Grid size NX,NY,NZ; default is sized from the shape and margin
    #[arg(long, value_name = "NX,NY,NZ")]
    dims: Option<String>,
    /// Shape center in mm X,Y,Z; default is the domain center
    #[arg(long, value_name = "X,Y,Z")]
    center: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SphereArgs {
    /// Sphere radius in mm
    #[arg(long, value_name = "MM")]
    radius: f64,
    #[command(flatten)]
    common: CommonSynth,
}

#[derive(Args)]
struct TorusArgs {
    /// Inner radius in mm (ring minus tube)
    #[arg(long, value_name = "MM")]
    inner: f64,
    /// Outer radius in mm (ring plus tube)
    #[arg(long, value_name = "MM")]
    outer: f64,
    /// Symmetry axis of the hole
    #[arg(long, default_value = "z")]
    axis: String,
    #[command(flatten)]
    common: CommonSynth,
}

#[derive(Args)]
struct EmbedArgs {
    /// Input binary volume (.mhd)
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Embedding method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Gaussian standard deviation in mm (gauss only)
    #[arg(long, value_name = "MM", required_if_eq("method", "gauss"))]
    sigma: Option<f64>,
    /// Embedding threshold T
    #[arg(long, value_name = "T", default_value_t = 0.5)]
    threshold: f64,
    /// Foreground threshold used to flatten the input to {0,1}
    #[arg(long, value_name = "V", default_value_t = 0.5)]
    flatten_at: f64,
    /// Pad this many background voxels per axis before embedding
    #[arg(long, value_name = "N", default_value_t = 0)]
    pad_voxels: usize,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct MorphArgs {
    /// Input embedding (.mhd with embedding provenance), or a binary
    /// volume when --method is given
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Treat the input as a binary volume and embed it first
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_name = "MM", required_if_eq("method", "gauss"))]
    sigma: Option<f64>,
    #[arg(long, value_name = "T", default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_name = "V", default_value_t = 0.5)]
    flatten_at: f64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pad_voxels: usize,
    /// Regularization thickness t in mm
    #[arg(long, value_name = "MM", default_value_t = 2.5)]
    thickness: f64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct MeshArgs {
    /// Input embedding (.mhd with embedding provenance)
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Per-vertex channels to attach: comma list from H,K,K1,K2
    #[arg(long, value_name = "LIST", default_value = "H,K")]
    with: String,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct HistoArgs {
    /// Input surface.ply or embedding .mhd
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Channel to bin (for .mhd inputs one of H,K,K1,K2)
    #[arg(long, value_name = "NAME", default_value = "H")]
    channel: String,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Left edge of the histogram range
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    /// Right edge of the histogram range (exclusive)
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepVar {
    Sigma,
    Thickness,
}

#[derive(Args)]
struct SweepArgs {
    /// Input binary volume (.mhd)
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Parameter to vary
    #[arg(long, value_enum)]
    vary: SweepVar,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    steps: usize,
    /// Fixed sigma in mm (when varying thickness)
    #[arg(long, value_name = "MM", default_value_t = 2.0)]
    sigma: f64,
    /// Fixed thickness in mm (when varying sigma)
    #[arg(long, value_name = "MM", default_value_t = 2.5)]
    thickness: f64,
    #[arg(long, value_name = "T", default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_name = "V", default_value_t = 0.5)]
    flatten_at: f64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pad_voxels: usize,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Input binary volume (.mhd)
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "MM", default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, value_name = "MM", default_value_t = 2.5)]
    thickness: f64,
    #[arg(long, value_name = "T", default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_name = "V", default_value_t = 0.5)]
    flatten_at: f64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pad_voxels: usize,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// Abort with a clap usage error (exit code 2).
fn usage_error(message: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ValueValidation, message)
        .exit()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Embed(args) => commands::embed(args),
        Command::Morph(args) => commands::morph(args),
        Command::Mesh(args) => commands::mesh(args),
        Command::Histo(args) => commands::histo(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Compare(args) => commands::compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
