//! Detector input encoding over a fused corpus: per-frame tensor dumps with
//! shape headers, plus a manifest carrying drop counters and checksums.

use super::FrameFailures;
use crate::config::PipelineConfig;
use crate::dataset::{frame_stems, sha256_hex, write_output, Manifest};
use anyhow::{Context, Result};
use rayon::prelude::*;
use semfuse::encoders::{
    cyl_partition, pillarize, voxelize, write_tensor_dump, GridConfig,
};
use semfuse::kitti_io::parse_fused;
use semfuse::seed::derive_frame_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EncoderKind {
    Pillar,
    Voxel,
    Cylinder,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Pillar => "pillar",
            EncoderKind::Voxel => "voxel",
            EncoderKind::Cylinder => "cylinder",
        }
    }
}

#[derive(Debug, Default)]
pub struct EncodeSummary {
    pub encoded: usize,
    pub skipped: usize,
    pub failures: FrameFailures,
    pub retained_points: usize,
    pub dropped_points: usize,
}

struct FrameOutput {
    record: Vec<(String, String)>,
    retained: usize,
    dropped: usize,
}

fn encode_frame(
    cfg: &PipelineConfig,
    grid: &GridConfig,
    kind: EncoderKind,
    stem: &str,
) -> Result<FrameOutput> {
    let fused_path = cfg
        .output_root
        .join("fused")
        .join(format!("{stem}.fused.bin"));
    let bytes =
        std::fs::read(&fused_path).with_context(|| format!("reading {}", fused_path.display()))?;
    let fused = parse_fused(&bytes)?;

    // Per-frame subsampling stream, independent of processing order.
    let seed_bytes = derive_frame_seed(cfg.seed, stem);
    let frame_grid = GridConfig {
        seed: u64::from_le_bytes(seed_bytes[..8].try_into().unwrap()),
        ..grid.clone()
    };

    let out_dir = cfg.output_root.join("encoded").join(kind.name());
    let mut record: Vec<(String, String)> = Vec::new();
    let (retained, dropped) = match kind {
        EncoderKind::Pillar => {
            let pt = pillarize(&fused, &frame_grid)?;
            let tensor = write_tensor_dump(
                "pillar",
                &[pt.feature_dim, pt.num_pillars(), pt.max_points],
                &pt.data,
            );
            let meta: Vec<f32> = pt
                .coords
                .iter()
                .zip(&pt.counts)
                .flat_map(|(&(ix, iy), &c)| [ix as f32, iy as f32, c as f32])
                .collect();
            let meta_dump = write_tensor_dump("pillar_meta", &[pt.num_pillars(), 3], &meta);
            write_output(&out_dir.join(format!("{stem}.pillar.bin")), &tensor)?;
            write_output(&out_dir.join(format!("{stem}.pillar.meta.bin")), &meta_dump)?;
            record.push(("pillars".into(), pt.num_pillars().to_string()));
            record.push(("dropped_range".into(), pt.dropped_out_of_range.to_string()));
            record.push((
                "dropped_overflow".into(),
                pt.dropped_pillar_overflow.to_string(),
            ));
            record.push(("dropped_cap".into(), pt.dropped_pillar_cap.to_string()));
            record.push(("sha256".into(), sha256_hex(&tensor)));
            (pt.retained_points(), pt.dropped_points())
        }
        EncoderKind::Voxel => {
            let vg = voxelize(&fused, &frame_grid)?;
            let cap = frame_grid
                .max_points_per_voxel_by_class
                .map(|t| t.into_iter().max().unwrap())
                .unwrap_or(frame_grid.max_points_per_voxel);
            // Dense (11, V, T): 8 feature rows plus 3 local offsets.
            let v = vg.voxels.len();
            let mut data = vec![0.0f32; 11 * v * cap];
            for (vi, voxel) in vg.voxels.iter().enumerate() {
                for (ni, (p, local)) in voxel.points.iter().zip(&voxel.local).enumerate() {
                    let features = p.features();
                    for (d, &value) in features.iter().enumerate() {
                        data[(d * v + vi) * cap + ni] = value;
                    }
                    for (d, &value) in local.iter().enumerate() {
                        data[((8 + d) * v + vi) * cap + ni] = value;
                    }
                }
            }
            let tensor = write_tensor_dump("voxel", &[11, v, cap], &data);
            let meta: Vec<f32> = vg
                .voxels
                .iter()
                .flat_map(|vx| {
                    [
                        vx.coord[0] as f32,
                        vx.coord[1] as f32,
                        vx.coord[2] as f32,
                        vx.count() as f32,
                    ]
                })
                .collect();
            let meta_dump = write_tensor_dump("voxel_meta", &[v, 4], &meta);
            write_output(&out_dir.join(format!("{stem}.voxel.bin")), &tensor)?;
            write_output(&out_dir.join(format!("{stem}.voxel.meta.bin")), &meta_dump)?;
            record.push(("voxels".into(), v.to_string()));
            record.push(("dropped_range".into(), vg.dropped_out_of_range.to_string()));
            record.push(("dropped_full".into(), vg.dropped_voxel_full.to_string()));
            record.push(("dropped_buffer".into(), vg.dropped_buffer_full.to_string()));
            record.push(("sha256".into(), sha256_hex(&tensor)));
            (vg.retained_points(), vg.dropped_points())
        }
        EncoderKind::Cylinder => {
            let grid_out = cyl_partition(&fused, &frame_grid)?;
            let (n_rho, n_phi, n_z) = grid_out.bins;
            let mut occupancy = vec![0.0f32; n_rho * n_phi * n_z];
            for cell in &grid_out.cells {
                let [r, p, z] = cell.coord;
                occupancy[(r as usize * n_phi + p as usize) * n_z + z as usize] =
                    cell.point_indices.len() as f32;
            }
            let tensor = write_tensor_dump("cylinder_occupancy", &[n_rho, n_phi, n_z], &occupancy);
            write_output(&out_dir.join(format!("{stem}.cylinder.bin")), &tensor)?;
            record.push(("cells".into(), grid_out.cells.len().to_string()));
            record.push((
                "dropped_range".into(),
                grid_out.dropped_out_of_range.to_string(),
            ));
            record.push(("sha256".into(), sha256_hex(&tensor)));
            (
                grid_out.retained_points(),
                grid_out.dropped_out_of_range,
            )
        }
    };
    Ok(FrameOutput {
        record,
        retained,
        dropped,
    })
}

pub fn run(cfg: &PipelineConfig, kind: EncoderKind) -> Result<EncodeSummary> {
    let grid = cfg.load_grid_config()?;
    let fused_dir = cfg.output_root.join("fused");
    let stems = frame_stems(&fused_dir, ".fused.bin")
        .context("fused dataset not found; run `fuse` first")?;

    let manifest_path = cfg
        .output_root
        .join("encoded")
        .join(kind.name())
        .join("manifest.txt");
    let manifest = Manifest::load(&manifest_path)?;
    let (done, pending): (Vec<_>, Vec<_>) =
        stems.into_iter().partition(|s| manifest.contains(s));

    let pool = cfg.thread_pool(None)?;
    let results: Vec<(String, Result<FrameOutput>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|stem| (stem.clone(), encode_frame(cfg, &grid, kind, stem)))
            .collect()
    });

    let mut summary = EncodeSummary {
        skipped: done.len(),
        ..EncodeSummary::default()
    };
    let mut records = Vec::new();
    for (stem, result) in results {
        match result {
            Ok(output) => {
                summary.encoded += 1;
                summary.retained_points += output.retained;
                summary.dropped_points += output.dropped;
                records.push((stem, output.record));
            }
            Err(err) => summary.failures.push((stem, format!("{err:#}"))),
        }
    }
    Manifest::append_records(&manifest_path, records)?;
    Ok(summary)
}
