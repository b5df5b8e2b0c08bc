//! The `diag-projection` command: per-frame in-image fractions and label
//! flip rates under calibration jitter.

use super::FrameFailures;
use crate::config::PipelineConfig;
use crate::dataset::{frame_stems, write_output, FramePaths};
use crate::diag::{jitter_calibration, label_flip_rate, rasterize};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use semfuse::kitti_io::{parse_calibration, parse_semantic_labels, parse_velodyne};
use semfuse::seed::frame_rng;
use std::path::PathBuf;

pub struct DiagArgs {
    /// Jitter magnitudes (radians for rotation, meters for translation).
    pub jitters: Vec<f64>,
    pub image_width: u32,
    pub image_height: u32,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct DiagSummary {
    pub frames: usize,
    pub failures: FrameFailures,
    /// Mean flip rate per jitter magnitude, over all frames.
    pub mean_flip_rates: Vec<(f64, f64)>,
}

struct FrameDiag {
    lines: Vec<String>,
    flip_rates: Vec<f64>,
}

fn diag_frame(cfg: &PipelineConfig, args: &DiagArgs, stem: &str) -> Result<FrameDiag> {
    let scan = std::fs::read(FramePaths::velodyne(&cfg.dataset_root, stem))
        .with_context(|| format!("reading scan for {stem}"))?;
    let cloud = parse_velodyne(&scan)?.cloud;
    let label_bytes = std::fs::read(FramePaths::semantic(&cfg.dataset_root, stem))
        .with_context(|| format!("reading labels for {stem}"))?;
    let labels = parse_semantic_labels(&label_bytes)?;
    if labels.len() != cloud.len() {
        bail!("{} labels for {} points", labels.len(), cloud.len());
    }
    let calib_path = FramePaths::calib(&cfg.dataset_root, stem);
    let calib_text = std::fs::read_to_string(&calib_path)
        .with_context(|| format!("missing calibration {}", calib_path.display()))?;
    let calib = parse_calibration(&calib_text)?;

    let (raster, stats) = rasterize(&cloud, &labels, &calib, args.image_width, args.image_height);
    let total = cloud.len().max(1);
    let mut lines = Vec::new();
    let mut flip_rates = Vec::new();
    for &magnitude in &args.jitters {
        // The stream restarts per magnitude, so one frame sees a fixed
        // perturbation direction whose size scales with the magnitude.
        let mut rng = frame_rng(cfg.seed, &format!("{stem}/jitter"));
        let jittered = jitter_calibration(&calib, magnitude, &mut rng);
        let flips = label_flip_rate(
            &cloud,
            &labels,
            &raster,
            &jittered,
            args.image_width,
            args.image_height,
        );
        flip_rates.push(flips.rate());
        lines.push(format!(
            "{stem} jitter={magnitude} in_image={:.4} behind={} outside={} flip_rate={:.6} lookups={}",
            stats.in_image as f64 / total as f64,
            stats.behind,
            stats.outside,
            flips.rate(),
            flips.lookups,
        ));
    }
    Ok(FrameDiag { lines, flip_rates })
}

pub fn run(cfg: &PipelineConfig, args: &DiagArgs) -> Result<DiagSummary> {
    if args.jitters.is_empty() {
        bail!("at least one jitter magnitude required");
    }
    let stems = frame_stems(&cfg.dataset_root.join("velodyne"), ".bin")?;
    let pool = cfg.thread_pool(None)?;
    let results: Vec<(String, Result<FrameDiag>)> = pool.install(|| {
        stems
            .par_iter()
            .map(|stem| (stem.clone(), diag_frame(cfg, args, stem)))
            .collect()
    });

    let mut summary = DiagSummary::default();
    let mut report = String::new();
    let mut sums = vec![0.0f64; args.jitters.len()];
    for (stem, result) in results {
        match result {
            Ok(frame) => {
                summary.frames += 1;
                for line in &frame.lines {
                    report.push_str(line);
                    report.push('\n');
                }
                for (s, r) in sums.iter_mut().zip(&frame.flip_rates) {
                    *s += r;
                }
            }
            Err(err) => summary.failures.push((stem, format!("{err:#}"))),
        }
    }
    if summary.frames > 0 {
        for (&magnitude, &sum) in args.jitters.iter().zip(&sums) {
            let mean = sum / summary.frames as f64;
            summary.mean_flip_rates.push((magnitude, mean));
            report.push_str(&format!("mean jitter={magnitude} flip_rate={mean:.6}\n"));
        }
    }
    print!("{report}");
    if let Some(out) = &args.out {
        write_output(out, report.as_bytes())?;
    }
    Ok(summary)
}
