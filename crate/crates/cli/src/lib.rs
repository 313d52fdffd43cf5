//! Command-line front end for `neuralpt-core`.
//!
//! Every verb resolves its job from (lowest to highest precedence) a
//! previous run manifest, JSON config files and flags, runs it, and writes
//! a [`RunManifest`] next to its outputs. Feeding that manifest back with
//! `--manifest` repeats the run bit for bit.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod manifest;
pub mod preview;
pub mod sources;

pub use error::{CliError, Result};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "neuralpt", version, about = "Path tracer with a compact BVH and a neural environment light")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a scene and its BVH and write a .sblob file.
    ScenePack(ScenePackArgs),
    /// Fit a neural image field to an HDR environment map.
    Train(TrainArgs),
    /// Path trace a scene under an environment light.
    Render(RenderArgs),
    /// PSNR of a test image against a reference.
    Eval(EvalArgs),
    /// Compare the f32 BVH kernel's normals and hit points with an f64 oracle.
    CompareAov(CompareAovArgs),
    /// Train a grid of NIF shapes and colour spaces and tabulate PSNRs.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ScenePackArgs {
    /// Builtin scene (box, box_spheres, spheres, empty) or an OBJ path.
    #[arg(required_unless_present = "manifest")]
    pub input: Option<String>,
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Re-run the job recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Flags overriding fields of the training config.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    /// Training config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    #[arg(long)]
    pub huber_delta: Option<f32>,
    #[arg(long)]
    pub eval_interval: Option<u32>,
    /// Evaluation grid as WxH.
    #[arg(long, value_parser = parse_resolution)]
    pub eval_size: Option<(u32, u32)>,
    /// f32 or f16_stochastic.
    #[arg(long)]
    pub master_precision: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// HDR image (.hdr or .pfm) or synth:NAME[@WxH].
    #[arg(long, required_unless_present = "manifest")]
    pub hdri: Option<String>,
    /// Output weights (.nifw); trace CSV, eval image and manifest go alongside.
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// NIF config JSON.
    #[arg(long)]
    pub nif: Option<PathBuf>,
    #[arg(long)]
    pub hidden: Option<u32>,
    #[arg(long)]
    pub layers: Option<u32>,
    #[arg(long)]
    pub fourier_dim: Option<u32>,
    /// Network output space: rgb, yuv or ycocg.
    #[arg(long)]
    pub colour_space: Option<String>,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene: .sblob, .obj or a builtin name.
    #[arg(long, required_unless_present = "manifest")]
    pub scene: Option<String>,
    /// constant:V | constant:R,G,B | weights.nifw | image.hdr/.pfm | synth:NAME[@WxH]
    #[arg(long, required_unless_present = "manifest")]
    pub env: Option<String>,
    /// Output image (.pfm or .hdr); a PNG preview is written alongside.
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Render config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub spp: Option<u32>,
    #[arg(long)]
    pub max_depth: Option<u32>,
    #[arg(long)]
    pub roulette_start_depth: Option<u32>,
    #[arg(long)]
    pub env_batch_chunk: Option<u32>,
    #[arg(long)]
    pub workers: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Preview exposure in stops.
    #[arg(long, allow_negative_numbers = true)]
    pub exposure: Option<f32>,
    #[arg(long)]
    pub gamma: Option<f32>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(required_unless_present = "manifest")]
    pub reference: Option<String>,
    #[arg(required_unless_present = "manifest")]
    pub test: Option<String>,
    /// Report CSV.
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareAovArgs {
    #[arg(long, required_unless_present = "manifest")]
    pub scene: Option<String>,
    /// WxH.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<(u32, u32)>,
    /// f32_bvh or f64_brute_force.
    #[arg(long)]
    pub test_kernel: Option<String>,
    #[arg(long)]
    pub reference_kernel: Option<String>,
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// HDR images or synth:NAME[@WxH], comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "manifest")]
    pub hdri: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub colour_space: Vec<String>,
    #[arg(long)]
    pub fourier_dim: Option<u32>,
    #[command(flatten)]
    pub train: TrainOverrides,
    /// Also keep every cell's weights in this directory.
    #[arg(long)]
    pub weights_dir: Option<PathBuf>,
    #[arg(short, long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> std::result::Result<(u32, u32), String> {
    sources::parse_size(s).ok_or_else(|| format!("expected WxH with positive sides, got '{s}'"))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ScenePack(a) => commands::scene_pack(a),
        Command::Train(a) => commands::train(a),
        Command::Render(a) => commands::render(a),
        Command::Eval(a) => commands::eval(a),
        Command::CompareAov(a) => commands::compare_aov(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}
