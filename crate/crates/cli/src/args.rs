use std::path::PathBuf;

use attwarp_core::SharpnessTransform;
use clap::{Args, Parser, Subcommand};

use crate::config::ResizePolicy;

#[derive(Debug, Parser)]
#[command(name = "attwarp", version, about = "Attention-guided rectilinear image warping")]
pub struct Cli {
    /// JSON job file; its keys mirror the flags, which take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Warp images with their attention maps.
    Warp(WarpArgs),
    /// Iterate warp and attention until the attention settles.
    Chain(ChainArgs),
    /// Pointing game, proportion and box expansion over an annotated corpus.
    Metrics(MetricsArgs),
    /// Write unit-mass column and row marginals of attention maps.
    ExportTargets(TargetArgs),
    /// Average a raw per-head attention stack into a score map.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "ATTWARP_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    /// Parallel jobs; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Sharpness transform: sqrt, identity, square or cube.
    #[arg(long)]
    pub transform: Option<SharpnessTransform>,

    /// Box smoothing window for token-grid maps (odd).
    #[arg(long)]
    pub smooth_k: Option<usize>,

    /// none, stretch:WxH (or WxH, or N for NxN), or pad:N for long side N padded square.
    #[arg(long)]
    pub resize: Option<ResizePolicy>,

    /// Largest side of a map still treated as a token grid.
    #[arg(long)]
    pub max_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Input image; repeat for a batch.
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,

    /// Attention map (ATW1 or grayscale PNG) for the image at the same position.
    #[arg(long = "attention")]
    pub attention: Vec<PathBuf>,

    #[command(flatten)]
    pub map: MapArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Input image; repeat for a batch (extractor mode only).
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,

    /// Precomputed map for depth 0, 1, ... in order.
    #[arg(long = "map")]
    pub maps: Vec<PathBuf>,

    /// Extractor program, called as `<prog> extract --model-preset .. --image .. --query .. --out ..`.
    #[arg(long)]
    pub extractor: Option<PathBuf>,

    /// Extra argument placed before `extract`; repeatable.
    #[arg(long = "extractor-arg", allow_hyphen_values = true)]
    pub extractor_args: Vec<String>,

    #[arg(long)]
    pub model_preset: Option<String>,

    #[arg(long)]
    pub query: Option<String>,

    /// Stop once the divergence between successive attention maps drops below this.
    #[arg(long)]
    pub kl_epsilon: Option<f64>,

    /// Hard cap on warp steps.
    #[arg(long)]
    pub max_iterations: Option<usize>,

    #[command(flatten)]
    pub map: MapArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// JSON lines of {"image_path", "attention_path", "boxes": [[x0, y0, x1, y1], ..]}.
    #[arg(long)]
    pub annotations: Option<PathBuf>,

    #[arg(long)]
    pub transform: Option<SharpnessTransform>,

    #[arg(long)]
    pub smooth_k: Option<usize>,

    #[arg(long)]
    pub max_grid: Option<usize>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Attention map; repeat for several.
    #[arg(long = "attention")]
    pub attention: Vec<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Raw stack in ATW1, with its `<stack>.json` shape sidecar.
    #[arg(long)]
    pub stack: Option<PathBuf>,

    /// Comma-separated layer ids to average; defaults to every recorded layer.
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    pub layers: Option<Vec<usize>>,

    /// Layer preset: llava or qwen.
    #[arg(long)]
    pub preset: Option<String>,

    /// Output ATW1 path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Upsample to WxH with smoothing and the transform.
    #[arg(long)]
    pub postprocess: Option<String>,

    #[arg(long)]
    pub transform: Option<SharpnessTransform>,

    #[arg(long)]
    pub smooth_k: Option<usize>,
}
