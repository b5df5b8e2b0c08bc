//! Corpus-wide semantic fusion: one `.fused.bin` per frame plus a manifest
//! of per-class point counts and content checksums.

use super::FrameFailures;
use crate::config::{FusionMode, PipelineConfig};
use crate::dataset::{frame_stems, sha256_hex, write_output, FramePaths, Manifest};
use anyhow::{Context, Result};
use rayon::prelude::*;
use semfuse::fusion::{concat_score_feature, concat_sem_feature, ClassMap, FusedPointCloud};
use semfuse::kitti_io::{parse_scores, parse_semantic_labels, parse_velodyne, write_fused};
use semfuse::KittiClass;

#[derive(Debug, Default)]
pub struct FuseSummary {
    pub fused: usize,
    pub skipped: usize,
    pub failures: FrameFailures,
}

fn fuse_frame(
    cfg: &PipelineConfig,
    map: &ClassMap,
    stem: &str,
) -> Result<Vec<(String, String)>> {
    let scan_path = FramePaths::velodyne(&cfg.dataset_root, stem);
    let bytes =
        std::fs::read(&scan_path).with_context(|| format!("reading {}", scan_path.display()))?;
    let parsed = parse_velodyne(&bytes)?;
    if parsed.clamped_reflectance > 0 {
        eprintln!(
            "fuse: frame {stem}: clamped {} reflectance value(s) into [0, 1]",
            parsed.clamped_reflectance
        );
    }

    let fused: FusedPointCloud = match cfg.mode {
        FusionMode::Label => {
            let label_path = FramePaths::semantic(&cfg.dataset_root, stem);
            let label_bytes = std::fs::read(&label_path)
                .with_context(|| format!("reading {}", label_path.display()))?;
            let labels = parse_semantic_labels(&label_bytes)?;
            concat_sem_feature(&labels, &parsed.cloud, map)?
        }
        FusionMode::Score => {
            let score_path = FramePaths::scores(&cfg.dataset_root, stem);
            let score_bytes = std::fs::read(&score_path)
                .with_context(|| format!("reading {}", score_path.display()))?;
            let scores = parse_scores(&score_bytes)?;
            concat_score_feature(&scores, &parsed.cloud)?
        }
    };

    let out_bytes = write_fused(&fused)?;
    write_output(&FramePaths::fused(&cfg.output_root, stem), &out_bytes)?;

    let mut class_counts = [0usize; 4];
    for p in &fused.points {
        class_counts[p.argmax_class().index()] += 1;
    }
    let mut record = vec![("points".to_string(), fused.len().to_string())];
    for class in KittiClass::ALL {
        record.push((
            class.name().to_string(),
            class_counts[class.index()].to_string(),
        ));
    }
    record.push((
        "clamped".to_string(),
        parsed.clamped_reflectance.to_string(),
    ));
    record.push(("sha256".to_string(), sha256_hex(&out_bytes)));
    Ok(record)
}

pub fn run(cfg: &PipelineConfig) -> Result<FuseSummary> {
    let map = cfg.load_class_map()?;
    let scan_dir = cfg.dataset_root.join("velodyne");
    let stems = frame_stems(&scan_dir, ".bin")?;

    let manifest_path = cfg.output_root.join("fused").join("manifest.txt");
    let manifest = Manifest::load(&manifest_path)?;
    let (done, pending): (Vec<_>, Vec<_>) =
        stems.into_iter().partition(|s| manifest.contains(s));

    let pool = cfg.thread_pool(None)?;
    let results: Vec<(String, Result<Vec<(String, String)>>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|stem| (stem.clone(), fuse_frame(cfg, &map, stem)))
            .collect()
    });

    let mut summary = FuseSummary {
        skipped: done.len(),
        ..FuseSummary::default()
    };
    let mut records = Vec::new();
    for (stem, result) in results {
        match result {
            Ok(record) => {
                records.push((stem, record));
                summary.fused += 1;
            }
            Err(err) => summary.failures.push((stem, format!("{err:#}"))),
        }
    }
    Manifest::append_records(&manifest_path, records)?;
    Ok(summary)
}
