mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use config::{ConfigError, FileConfig};
use srpair_core::error::{Error as CoreError, Stage};

pub const EXIT_OK: u8 = 0;
pub const EXIT_EVAL_INCOMPLETE: u8 = 1;
pub const EXIT_FEATURES: u8 = 2;
pub const EXIT_RANSAC: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_USAGE: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "srpair", version, about = "Build, align and score super-resolution image pairs")]
#[command(after_help = "Exit status: 0 ok, 1 evaluation incomplete, 2 feature/matching failure, \
3 RANSAC or crop failure, 4 I/O error, 5 invalid arguments or configuration.")]
pub struct Cli {
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SRPAIR_JOBS")]
    pub jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Align a raw LR/HR capture pair and write the common crop.
    Register(RegisterArgs),
    /// Synthesize LR images or pair video frames.
    #[command(subcommand)]
    Degrade(DegradeCommand),
    /// Score SR outputs against the HR side of a manifest.
    Evaluate(EvaluateArgs),
    /// Add rotated and flipped copies of every pair in a manifest.
    Augment(AugmentArgs),
}

#[derive(Subcommand, Debug)]
pub enum DegradeCommand {
    /// Blur, bicubic downscale and noise applied to a directory of HR PNGs.
    Classic(ClassicArgs),
    /// Pick still frames from paired HR/LR frame directories and align them.
    Video(VideoArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct AlignArgs {
    /// Location-constraint fraction of the image size.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Descriptor ratio-test threshold.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Motion-statistics grid cells per axis.
    #[arg(long)]
    pub grid_cells: Option<usize>,
    /// Motion-statistics threshold factor.
    #[arg(long)]
    pub tau_factor: Option<f64>,
    /// `gms_then_mlc` or `mlc_then_gms`.
    #[arg(long)]
    pub filter_order: Option<String>,
    /// RANSAC inlier distance in pixels.
    #[arg(long)]
    pub ransac_thresh: Option<f64>,
    #[arg(long)]
    pub ransac_confidence: Option<f64>,
    #[arg(long)]
    pub ransac_max_iterations: Option<usize>,
    #[arg(long)]
    pub min_inliers: Option<usize>,
    /// Coverage at or above which a warped pixel counts as valid.
    #[arg(long)]
    pub binarize_threshold: Option<f64>,
    /// HR-frame rectangle `x,y,w,h` whose keypoints are ignored (repeatable).
    #[arg(long = "exclude", value_name = "X,Y,W,H")]
    pub exclude: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RegisterArgs {
    #[arg(long)]
    pub lr: Option<PathBuf>,
    #[arg(long)]
    pub hr: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub align: AlignArgs,
}

#[derive(Args, Debug)]
pub struct ClassicArgs {
    /// Directory of HR PNG files.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// 2, 3 or 4.
    #[arg(long)]
    pub scale: Option<u32>,
    /// `delta` or `gaussian`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Gaussian blur sigma in HR pixels.
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    /// Noise sigma on the [0, 1] intensity scale.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VideoArgs {
    #[arg(long)]
    pub hr_frames: Option<PathBuf>,
    #[arg(long)]
    pub lr_frames: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Mean absolute luma difference below which consecutive frames are still.
    #[arg(long)]
    pub diff_threshold: Option<f64>,
    /// Minimum still run, in frames.
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub align: AlignArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory of SR outputs named after the HR files.
    #[arg(long)]
    pub sr: Option<PathBuf>,
    /// CSV report path; the aggregate JSON goes next to it.
    #[arg(long)]
    pub report: PathBuf,
    /// Border crop in pixels; defaults to each entry's scale.
    #[arg(long)]
    pub crop_border: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of 90,180,270.
    #[arg(long, value_delimiter = ',')]
    pub rotations: Option<Vec<u32>>,
    #[arg(long)]
    pub hflip: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() || err.downcast_ref::<toml::de::Error>().is_some() {
        return EXIT_USAGE;
    }
    if let Some(e) = err.downcast_ref::<CoreError>() {
        return match e {
            CoreError::AlignmentFailed { stage: Stage::Features | Stage::Matching, .. } | CoreError::ImageTooSmall { .. } => EXIT_FEATURES,
            CoreError::AlignmentFailed { .. } | CoreError::DegenerateGeometry | CoreError::InsufficientData { .. } => EXIT_RANSAC,
            CoreError::Io { .. }
            | CoreError::Image { .. }
            | CoreError::Json(_)
            | CoreError::Manifest(_)
            | CoreError::FrameCountMismatch { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    EXIT_IO
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn init_logging(cli: &Cli, file: &FileConfig) {
    let level = if cli.quiet {
        "error".to_string()
    } else {
        match cli.verbose {
            0 => file.log.clone().unwrap_or_else(|| "warn".to_string()),
            1 => "info".to_string(),
            2 => "debug".to_string(),
            _ => "trace".to_string(),
        }
    };
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let file = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            return ExitCode::from(exit_code(&e));
        }
    };
    init_logging(&cli, &file);
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        if jobs == 0 {
            error!("--jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            error!("thread pool: {e}");
        }
    }
    match commands::run(&cli, &file) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
