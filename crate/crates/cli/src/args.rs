use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lrlab_core::SolverKind;

use crate::config::AutoOr;

#[derive(Debug, Parser)]
#[command(name = "lrlab", version, about = "Low-rank + sparse decomposition of image stacks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Default, Args)]
pub struct Common {
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// [default: wsnm for decompose and recognize, rpca for sweep]
    #[arg(long, global = true, value_name = "rpca|wnnm|wsnm")]
    pub solver: Option<SolverKind>,

    /// Schatten exponent in (0, 1]; repeat to sweep several.
    #[arg(long = "p", global = true, value_name = "P")]
    pub p: Vec<f64>,

    /// Sparse weight, a positive real or `auto`.
    #[arg(long, global = true, value_name = "REAL|auto")]
    pub lambda: Option<AutoOr>,

    /// Weight scale of WNNM/WSNM, a positive real or `auto`.
    #[arg(long = "c", global = true, value_name = "REAL|auto")]
    pub c: Option<AutoOr>,

    /// Relative residual tolerance [default: 1e-7].
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Iteration cap [default: 500].
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,

    /// Seed of the synthetic generator [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Histogram bins for recognition [default: 32].
    #[arg(long, global = true)]
    pub bins: Option<usize>,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Worker threads; falls back to LRLAB_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic occlusion dataset into --out.
    Synth(SynthArgs),
    /// Decompose a set of images into low-rank and sparse parts.
    Decompose(DecomposeArgs),
    /// Run every case of a dataset over a parameter grid; writes a results CSV.
    Sweep(SweepArgs),
    /// Identify the subject of a test image against per-subject galleries.
    Recognize(RecognizeArgs),
    /// Compare best PSNR across several sweep CSVs.
    Compare(CompareArgs),
    /// PSNR and SSIM of a test image against a reference.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// [default: 6]
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Images per subject [default: 11].
    #[arg(long)]
    pub images: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub width: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub height: Option<usize>,
    /// Comma-separated occlusion kinds [default: all].
    #[arg(long)]
    pub kinds: Option<String>,
    /// Rank of each clean stack, 1 to 3 [default: 3].
    #[arg(long)]
    pub rank: Option<usize>,
    /// Occlusion strength in [0, 1]; 0 gives clean inputs [default: 1].
    #[arg(long)]
    pub severity: Option<f64>,
    /// Dataset name recorded in results [default: output directory name].
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Image files and/or directories of images.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dataset directory written by `synth`, or one subdirectory per case.
    pub dataset: PathBuf,
    /// Points of the relative grid [default: 16].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Lowest multiple of the automatic parameter [default: 0.1].
    #[arg(long)]
    pub grid_low: Option<f64>,
    /// Highest multiple of the automatic parameter [default: 10].
    #[arg(long)]
    pub grid_high: Option<f64>,
    /// Comma-separated absolute parameter values; replaces the relative grid.
    #[arg(long)]
    pub grid_values: Option<String>,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    pub test: PathBuf,
    /// Directory with one subdirectory of images per subject.
    pub gallery: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Two or more results CSVs from `sweep`.
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
}
