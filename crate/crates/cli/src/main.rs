use clap::{Parser, Subcommand};
use semfuse_cli::commands::diag::{self, DiagArgs};
use semfuse_cli::commands::encode::EncoderKind;
use semfuse_cli::commands::eval::{self, EvalArgs, InterpMode};
use semfuse_cli::commands::{augment, encode, fuse, report_failures};
use semfuse_cli::config::{FusionMode, PipelineConfig};
use semfuse_cli::selftest;
use semfuse_cli::ExitCode;
use std::path::PathBuf;

/// Deterministic data pipeline for semantic-fusion 3D detection: fuse
/// segmentation output onto LiDAR scans, encode detector inputs, augment
/// training frames, and score detections with the KITTI AP protocol.
#[derive(Parser)]
#[command(name = "semfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's worker count (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self, mode: Option<FusionMode>) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if let Some(mode) = mode {
            cfg.mode = mode;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fuse semantic labels or scores onto every scan in the dataset.
    Fuse {
        #[command(flatten)]
        config: ConfigArgs,
        /// Fusion variant: one-hot labels or softmax scores.
        #[arg(long, value_enum)]
        mode: Option<FusionMode>,
    },
    /// Encode fused frames into a detector input representation.
    Encode {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        encoder: EncoderKind,
    },
    /// Sample the ground-truth database into frames and apply global and
    /// per-box augmentations.
    Augment {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a detection directory against ground truth (3D and BEV AP).
    Eval {
        det_dir: PathBuf,
        gt_dir: PathBuf,
        /// Where report.txt / report.csv / delta.txt land.
        #[arg(long, default_value = "eval_out")]
        out: PathBuf,
        /// Baseline report.csv for a delta table.
        #[arg(long)]
        baseline_report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "r40")]
        interp: InterpMode,
    },
    /// Measure projection coverage and label flip rates under calibration
    /// jitter.
    DiagProjection {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated jitter magnitudes (radians / meters).
        #[arg(long, default_value = "0.0,0.005,0.02")]
        jitter: String,
        #[arg(long, default_value_t = 1242)]
        image_width: u32,
        #[arg(long, default_value_t = 375)]
        image_height: u32,
        /// Optional report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in property suite and print a pass/fail table.
    Selftest,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(dispatch(cli).code());
}

fn dispatch(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Fuse { config, mode } => {
            let cfg = match config.load(mode) {
                Ok(cfg) => cfg,
                Err(err) => return config_error(err),
            };
            match fuse::run(&cfg) {
                Ok(summary) => {
                    println!(
                        "fuse: {} fused, {} skipped (already in manifest)",
                        summary.fused, summary.skipped
                    );
                    report_failures("fuse", &summary.failures);
                    frames_exit(summary.failures.is_empty())
                }
                Err(err) => run_error("fuse", err),
            }
        }
        Command::Encode { config, encoder } => {
            let cfg = match config.load(None) {
                Ok(cfg) => cfg,
                Err(err) => return config_error(err),
            };
            match encode::run(&cfg, encoder) {
                Ok(summary) => {
                    println!(
                        "encode[{}]: {} encoded, {} skipped; {} points retained, {} dropped",
                        encoder.name(),
                        summary.encoded,
                        summary.skipped,
                        summary.retained_points,
                        summary.dropped_points
                    );
                    report_failures("encode", &summary.failures);
                    frames_exit(summary.failures.is_empty())
                }
                Err(err) => run_error("encode", err),
            }
        }
        Command::Augment { config } => {
            let cfg = match config.load(None) {
                Ok(cfg) => cfg,
                Err(err) => return config_error(err),
            };
            match augment::run(&cfg) {
                Ok(summary) => {
                    println!(
                        "augment: {} augmented, {} skipped; {} samples placed, {} rejected, {} per-box reverts",
                        summary.augmented,
                        summary.skipped,
                        summary.placed,
                        summary.rejected,
                        summary.reverted
                    );
                    report_failures("augment", &summary.failures);
                    frames_exit(summary.failures.is_empty())
                }
                Err(err) => run_error("augment", err),
            }
        }
        Command::Eval {
            det_dir,
            gt_dir,
            out,
            baseline_report,
            interp,
        } => {
            let args = EvalArgs {
                det_dir,
                gt_dir,
                out_dir: out,
                baseline_report,
                interpolation: interp,
            };
            match eval::run(&args) {
                Ok(_) => ExitCode::Success,
                Err(err) => run_error("eval", err),
            }
        }
        Command::DiagProjection {
            config,
            jitter,
            image_width,
            image_height,
            out,
        } => {
            let cfg = match config.load(None) {
                Ok(cfg) => cfg,
                Err(err) => return config_error(err),
            };
            let jitters: Result<Vec<f64>, _> =
                jitter.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let jitters = match jitters {
                Ok(j) => j,
                Err(err) => return config_error(anyhow::anyhow!("bad --jitter list: {err}")),
            };
            let args = DiagArgs {
                jitters,
                image_width,
                image_height,
                out,
            };
            match diag::run(&cfg, &args) {
                Ok(summary) => {
                    report_failures("diag-projection", &summary.failures);
                    frames_exit(summary.failures.is_empty())
                }
                Err(err) => run_error("diag-projection", err),
            }
        }
        Command::Selftest => {
            let results = selftest::run(&selftest::Overrides::default());
            print!("{}", selftest::render_table(&results));
            if results.iter().all(|r| r.passed) {
                ExitCode::Success
            } else {
                ExitCode::FrameFailures
            }
        }
    }
}

fn config_error(err: anyhow::Error) -> ExitCode {
    eprintln!("config error: {err:#}");
    ExitCode::ConfigError
}

fn run_error(command: &str, err: anyhow::Error) -> ExitCode {
    eprintln!("{command}: {err:#}");
    ExitCode::FrameFailures
}

fn frames_exit(clean: bool) -> ExitCode {
    if clean {
        ExitCode::Success
    } else {
        ExitCode::FrameFailures
    }
}
