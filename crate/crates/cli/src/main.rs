mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use servokit::archcheck::PoolMode;
use servokit::datapipe::AugmentOp;

#[derive(Debug, Parser)]
#[command(name = "servokit", version, about = "Visual-servoing simulation and keypoint dataset tools")]
pub struct Cli {
    /// `key = value` settings file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step (default 42, or `seed` from the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress informational messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the eye-in-hand servo loop and write its trace.
    Servo(ServoArgs),
    /// Label every PGM/PPM image in a directory with its four corners.
    Annotate(AnnotateArgs),
    /// Write rotated/flipped copies of a labeled dataset with updated labels.
    Augment(AugmentArgs),
    /// Seeded train/validation split of a label file.
    Split(SplitArgs),
    /// Seeded k-fold assignment of a label file.
    Kfold(KfoldArgs),
    /// Per-corner mean absolute error of predictions against ground truth.
    Eval(EvalArgs),
    /// Propagate shapes through the corner-regression network and check them.
    Archcheck(ArchcheckArgs),
    /// Learning rate of the step-decay schedule at a training step.
    Lr(LrArgs),
    /// Render a filled quadrilateral with known corners.
    RenderQuad(RenderQuadArgs),
}

#[derive(Debug, Args)]
pub struct ServoArgs {
    /// Trace CSV output (`iter,t,q1..q4,u1,v1,..,e1..,e_total,vx,..,wz`).
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Desired pixels (`u1,v1,...,uN,vN`) instead of the image seen at the goal joints.
    #[arg(long, value_name = "FILE")]
    pub desired: Option<PathBuf>,
    /// Directory for trajectory.svg and error.svg.
    #[arg(long, value_name = "DIR")]
    pub plot_dir: Option<PathBuf>,
    /// Gain λ (servo.lambda).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Integration step in seconds (servo.dt).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of control iterations (servo.iterations).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Stop once the total pixel error drops below servo.stop_tol.
    #[arg(long)]
    pub early_stop: bool,
    /// Start joints `q1,q2,q3,q4` in radians (servo.q_start).
    #[arg(long, value_name = "Q")]
    pub q_start: Option<String>,
    /// Goal joints `q1,q2,q3,q4` in radians (servo.q_goal).
    #[arg(long, value_name = "Q")]
    pub q_goal: Option<String>,
    /// Any other setting, e.g. `--set servo.depth_mode=constant`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Directory of .pgm/.ppm images.
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Label CSV output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Gaussian blur standard deviation (canny.sigma, default 1.4).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Low hysteresis threshold on the 0..255 magnitude (canny.low, default 50).
    #[arg(long)]
    pub low: Option<f64>,
    /// High hysteresis threshold (canny.high, default 100).
    #[arg(long)]
    pub high: Option<f64>,
    /// Slope m of the sweep lines (quad.slope, default 1).
    #[arg(long)]
    pub slope: Option<f64>,
    /// Write labels divided by image width/height instead of pixels.
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Directory holding the images named by the label ids.
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Label CSV of the input images.
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// Comma-separated transforms.
    #[arg(long, value_delimiter = ',', default_value = "rot180,hflip,vflip")]
    pub ops: Vec<AugmentOp>,
    /// Output directory; receives the originals, the copies and labels.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Label CSV to split.
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// Fraction of items held out for validation (rounded up).
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    /// Write train.csv and val.csv label files here instead of printing `id,set`.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KfoldArgs {
    /// Label CSV whose ids are partitioned.
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// Number of folds.
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    /// `id,fold` CSV output (stdout if omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels (same schema as the label CSV).
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Ground-truth labels.
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Image size `WxH` used to normalize label files given in pixels.
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    pub size: Option<(u32, u32)>,
}

#[derive(Debug, Args)]
pub struct ArchcheckArgs {
    /// Pooling used in every block.
    #[arg(long, default_value = "avg")]
    pub pool: PoolMode,
    /// Also write the layer list as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LrArgs {
    /// Training step (0-based).
    #[arg(long)]
    pub step: u64,
    /// Initial learning rate.
    #[arg(long, default_value_t = 1e-5)]
    pub initial: f64,
    /// Multiplicative decay per period.
    #[arg(long, default_value_t = 0.95)]
    pub factor: f64,
    /// Steps per decay period.
    #[arg(long, default_value_t = 2500)]
    pub every: u64,
}

#[derive(Debug, Args)]
pub struct RenderQuadArgs {
    /// Image width in pixels.
    #[arg(long, default_value_t = 320)]
    pub width: usize,
    /// Image height in pixels.
    #[arg(long, default_value_t = 240)]
    pub height: usize,
    /// Corners `u1,v1,u2,v2,u3,v3,u4,v4` in any order.
    #[arg(long, value_parser = parse_corners, allow_hyphen_values = true)]
    pub corners: [f64; 8],
    /// Gray level inside the quadrilateral.
    #[arg(long, default_value_t = 200)]
    pub fg: u8,
    /// Gray level outside.
    #[arg(long, default_value_t = 60)]
    pub bg: u8,
    /// Standard deviation of additive Gaussian noise (uses --seed).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// PGM output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the ground-truth corners as a one-row label CSV.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<u32>().ok().filter(|&n| n > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("expected positive WxH, got {s:?}")),
    }
}

fn parse_corners(s: &str) -> Result<[f64; 8], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 8 numbers, got {}", v.len()))
}

/// Invocation problems that are not caught by argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
