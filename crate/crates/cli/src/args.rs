use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "polardet", version, about = "Polar surround-view detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene.
    Simulate(SimulateArgs),
    /// Render noisy detections for a scene.
    Render(RenderArgs),
    /// Match detections to ground truth frame by frame.
    Assign(AssignArgs),
    /// Track detections across frames.
    Track(TrackArgs),
    /// Score detections against a scene.
    Eval(EvalArgs),
    /// Measure how well a symmetric rig maps rotated points onto the next view.
    SymmetryCheck(SymmetryArgs),
    /// Show which equidistant objects each perception range keeps.
    RangeDemo(RangeDemoArgs),
    /// Compare analytic loss gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Compute NDS from mAP and the five TP metrics.
    Nds(NdsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryKind {
    Static,
    Straight,
    Arc,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON scene config; fields present there override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub objects: usize,
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_speed: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_speed: f64,
    #[arg(long, default_value_t = 6)]
    pub cameras: usize,
    #[arg(long, value_enum, default_value_t = TrajectoryKind::Static)]
    pub trajectory: TrajectoryKind,
    /// Ego speed (m/s) for straight and arc trajectories.
    #[arg(long, default_value_t = 0.0)]
    pub ego_speed: f64,
    /// Ego yaw rate (rad/s) for arc trajectories.
    #[arg(long, default_value_t = 0.0)]
    pub yaw_rate: f64,
    /// Keep objects that leave the range instead of omitting them.
    #[arg(long)]
    pub no_clip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseFrameArg {
    Polar,
    Cartesian,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON noise model; fields present there override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Radial noise std in metres.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_radial: f64,
    /// Azimuth noise std in radians.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_tangential: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_z: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_size: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_yaw: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_velocity: f64,
    #[arg(long, default_value_t = 0.0)]
    pub drop_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    pub fp_rate: f64,
    #[arg(long, default_value_t = 50.0)]
    pub fp_range: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseFrameArg::Polar)]
    pub noise_frame: NoiseFrameArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassCostArg {
    NegProb,
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RangeShape {
    Circular,
    Rectangular,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    pub k_scaling: f64,
    #[arg(long, value_enum, default_value_t = ClassCostArg::NegProb)]
    pub class_cost: ClassCostArg,
    #[arg(long, value_enum, default_value_t = RangeShape::Circular)]
    pub range: RangeShape,
    #[arg(long, default_value_t = 50.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 50.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 50.0)]
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Greedy,
    Hungarian,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth scene; enables the id-switch count in the summary.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// JSON tracker config; fields present there override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub max_misses: u32,
    #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
    pub strategy: StrategyArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the metrics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Attribute error fed into NDS; attributes are not simulated.
    #[arg(long, default_value_t = 1.0)]
    pub aae: f64,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[arg(long, default_value_t = 6)]
    pub cameras: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RangeDemoArgs {
    /// Radial distance shared by both objects.
    #[arg(long, default_value_t = 48.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 50.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 35.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 50.0)]
    pub y_max: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NdsArgs {
    #[arg(long)]
    pub map: f64,
    /// mATE,mASE,mAOE,mAVE,mAAE
    #[arg(long, value_delimiter = ',', required = true)]
    pub tps: Vec<f64>,
}
