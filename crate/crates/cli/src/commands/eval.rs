//! Benchmark evaluation over detection and ground-truth label directories.

use crate::dataset::{frame_stems, write_output};
use anyhow::{bail, Context, Result};
use semfuse::eval::{evaluate_benchmark, EvalConfig, EvalReport, Interpolation};
use semfuse::kitti_io::parse_object_labels;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InterpMode {
    R40,
    R11,
}

impl From<InterpMode> for Interpolation {
    fn from(mode: InterpMode) -> Self {
        match mode {
            InterpMode::R40 => Interpolation::R40,
            InterpMode::R11 => Interpolation::R11,
        }
    }
}

pub struct EvalArgs {
    pub det_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub out_dir: PathBuf,
    pub baseline_report: Option<PathBuf>,
    pub interpolation: InterpMode,
}

fn read_label_frames(dir: &Path) -> Result<Vec<(String, Vec<semfuse::kitti_io::GroundTruthObject>)>> {
    let stems = frame_stems(dir, ".txt")?;
    if stems.is_empty() {
        bail!("no .txt label files in {}", dir.display());
    }
    let mut frames = Vec::with_capacity(stems.len());
    for stem in stems {
        let path = dir.join(format!("{stem}.txt"));
        let text =
            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let objects =
            parse_object_labels(&text).with_context(|| format!("parsing {}", path.display()))?;
        frames.push((stem, objects));
    }
    Ok(frames)
}

pub fn run(args: &EvalArgs) -> Result<EvalReport> {
    let det_frames = read_label_frames(&args.det_dir)?;
    let gt_frames = read_label_frames(&args.gt_dir)?;
    let cfg = EvalConfig {
        interpolation: args.interpolation.into(),
        ..EvalConfig::default()
    };
    let report = evaluate_benchmark(&det_frames, &gt_frames, &cfg)?;

    let text = report.render_text();
    print!("{text}");
    write_output(&args.out_dir.join("report.txt"), text.as_bytes())?;
    write_output(
        &args.out_dir.join("report.csv"),
        report.render_csv().as_bytes(),
    )?;

    if let Some(baseline_path) = &args.baseline_report {
        let baseline_text = std::fs::read_to_string(baseline_path)
            .with_context(|| format!("reading baseline report {}", baseline_path.display()))?;
        let baseline = EvalReport::parse_csv(&baseline_text)
            .with_context(|| format!("parsing baseline report {}", baseline_path.display()))?;
        let delta = report.render_delta(&baseline);
        print!("{delta}");
        write_output(&args.out_dir.join("delta.txt"), delta.as_bytes())?;
    }
    Ok(report)
}
