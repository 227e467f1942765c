//! `scenecomp` command-line front end.

mod commands;
mod error;
mod output;
pub mod select;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;
use select::{CameraSpec, EvalScorerSpec, ModelSpec, ScorerSpec};

#[derive(Debug, Parser)]
#[command(name = "scenecomp", version, about = "Text-guided composition of desk-scale 3D scenes")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search object poses with a particle swarm.
    Compose(ComposeArgs),
    /// Render a scene view to PNG (color) and PFM (disparity).
    Render(RenderArgs),
    /// Run the alternating guidance / layout optimization.
    Optimize(OptimizeArgs),
    /// Score a directory of renders: CLIP-AP, depth alignment, Fréchet study.
    Evaluate(EvaluateArgs),
    /// Write degraded copies of images and a Fréchet monotonicity report.
    Degrade(DegradeArgs),
    /// Write the bundled two-object demo scene.
    DemoScene {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "mock:multi-bump")]
    pub scorer: ScorerSpec,
    /// Defaults to the scene's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 30)]
    pub particles: usize,
    /// Swarm iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Output directory for layout.json and trace.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Layout JSON from `compose`; initial poses are used without it.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long, default_value = "perspective:30,20")]
    pub camera: CameraSpec,
    /// Jitter volume samples with this seed; midpoints otherwise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for render.png and disparity.pfm.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Run configuration JSON (schedule, render, optimizer, pso, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Total iterations; the schedule is rescaled accordingly.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise predictor and disparity oracle.
    #[arg(long, default_value = "mock")]
    pub predictor: ModelSpec,
    /// Layout scorer for the swarm phases.
    #[arg(long, default_value = "mock:multi-bump")]
    pub scorer: ScorerSpec,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One subdirectory per prompt holding `*.png` renders and
    /// same-named `*.pfm` disparities.
    #[arg(long)]
    pub renders: PathBuf,
    /// JSON object mapping subdirectory name to prompt text.
    #[arg(long)]
    pub prompts: PathBuf,
    #[arg(long, default_value = "mock:perfect")]
    pub scorer: EvalScorerSpec,
    /// Disparity estimator; `mock` uses image luminance.
    #[arg(long, default_value = "mock")]
    pub oracle: ModelSpec,
    /// Reference images for the degradation study.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value = "noise")]
    pub degradation: String,
    #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.05,0.1,0.2")]
    pub levels: Vec<f64>,
    /// Feature extractor; `mock` uses patch statistics.
    #[arg(long, default_value = "mock")]
    pub features: ModelSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub images: PathBuf,
    /// noise, blur, swirl or rectangles.
    #[arg(long)]
    pub kind: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compose(a) => commands::compose(&a),
        Command::Render(a) => commands::render(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Degrade(a) => commands::degrade(&a),
        Command::DemoScene { out } => output::write_atomic(&out, scenecomp::SceneDescription::demo().to_json().as_bytes()),
    }
}
