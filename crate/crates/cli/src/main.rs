mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "hgsp",
    version,
    about = "Edge-preserving point cloud resampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled cloud on the surface of a union of boxes
    Synth(SynthArgs),
    /// Add seeded Gaussian noise to every coordinate
    Noise(NoiseArgs),
    /// Score points and keep the sharpest fraction
    Resample(ResampleArgs),
    /// Edge precision, recall and F1 of resampled clouds against a labelled original
    EvalEdges(EvalEdgesArgs),
    /// Thresholded nearest-neighbour distances between an original and recovered clouds
    EvalDistance(EvalDistanceArgs),
    /// Print size, bounds and resolution of a cloud
    Info(InfoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Xyz,
    Ply,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Hkc,
    Hkf,
    Lhf,
    Pca,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SelectArg {
    Sharp,
    Smooth,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Box as `x,y,z,side` or `x,y,z,sx,sy,sz`; repeatable. Defaults to a unit cube
    /// with a half-size cube attached to its +x face.
    #[arg(long = "cube", value_name = "BOX")]
    pub cubes: Vec<String>,
    #[arg(long, default_value_t = 0.025)]
    pub spacing: f64,
    /// Label radius around exterior edges [default: 1.5 x spacing]
    #[arg(long)]
    pub edge_band: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Move each point up to a quarter spacing within its face
    #[arg(long)]
    pub jitter: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Output format [default: from the file extension]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args)]
pub struct NoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation as a multiple of the intrinsic resolution
    #[arg(long, default_value_t = 0.1, conflicts_with = "sigma")]
    pub level: f64,
    /// Absolute standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args)]
pub struct ResampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Fraction of points to keep
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Kernel width in voxels (odd)
    #[arg(long, default_value_t = 3)]
    pub kernel_k: usize,
    /// Voxel pitch [default: intrinsic resolution of the input]
    #[arg(long)]
    pub kernel_d: Option<f64>,
    /// Small LHF neighbourhood size, including the point
    #[arg(long = "Na", visible_alias = "na", default_value_t = 4)]
    pub n_a: usize,
    /// Large LHF neighbourhood size
    #[arg(long = "Nb", visible_alias = "nb", default_value_t = 8)]
    pub n_b: usize,
    /// PCA neighbourhood size, including the point
    #[arg(long, default_value_t = 16)]
    pub pca_m: usize,
    /// Keep the sharp end of the ranking or the smooth end
    #[arg(long, value_enum, default_value = "sharp")]
    pub select: SelectArg,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write `index,score` CSV
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Write the whole input as CSV with a 0/1 `selected` column
    #[arg(long)]
    pub flags: Option<PathBuf>,
    /// Write the kernel eigenvalues and basis as CSV (hkc and hkf only)
    #[arg(long)]
    pub dump_spectrum: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args)]
pub struct EvalEdgesArgs {
    /// Labelled source cloud
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
    pub resampled: Option<PathBuf>,
    /// Evaluate every cloud file in a directory, one CSV row each
    #[arg(long)]
    pub batch: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalDistanceArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
    pub recovered: Option<PathBuf>,
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// Match threshold [default: 3 x intrinsic resolution of the original]
    #[arg(long)]
    pub d_theta: Option<f64>,
}

#[derive(Args)]
pub struct InfoArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Noise(a) => commands::noise(a),
        Command::Resample(a) => commands::resample(a),
        Command::EvalEdges(a) => commands::eval_edges(a),
        Command::EvalDistance(a) => commands::eval_distance(a),
        Command::Info(a) => commands::info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
