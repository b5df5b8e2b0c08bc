//! Corpus augmentation: build (or load) the ground-truth database, then
//! sample and perturb each frame under its derived seed, writing augmented
//! clouds and updated labels.

use super::FrameFailures;
use crate::config::PipelineConfig;
use crate::dataset::{frame_stems, read_split, sha256_hex, write_output, FramePaths, Manifest};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use semfuse::augment::{
    build_gt_database, global_flip_x, global_rotate, global_scale, per_box_augment, sample_gt,
    AugmentConfig, GtDatabase, GtEntry, Scene,
};
use semfuse::geometry::Box3D;
use semfuse::kitti_io::{
    box_to_object, object_to_box, parse_calibration, parse_fused, parse_object_labels,
    write_fused, Calibration, GroundTruthObject,
};
use semfuse::seed::{derive_frame_seed, frame_rng};
use semfuse::KittiClass;
use std::path::Path;

#[derive(Debug, Default)]
pub struct AugmentSummary {
    pub augmented: usize,
    pub skipped: usize,
    pub failures: FrameFailures,
    pub placed: usize,
    pub rejected: usize,
    pub reverted: usize,
}

fn load_frame_boxes(
    cfg: &PipelineConfig,
    stem: &str,
) -> Result<(Vec<GroundTruthObject>, Vec<String>, Calibration)> {
    let label_path = FramePaths::object_labels(&cfg.dataset_root, stem);
    let label_text = std::fs::read_to_string(&label_path)
        .with_context(|| format!("reading {}", label_path.display()))?;
    let objects = parse_object_labels(&label_text)?;
    let raw_lines: Vec<String> = label_text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    let calib_path = FramePaths::calib(&cfg.dataset_root, stem);
    let calib_text = std::fs::read_to_string(&calib_path)
        .with_context(|| format!("reading {}", calib_path.display()))?;
    let calib = parse_calibration(&calib_text)?;
    Ok((objects, raw_lines, calib))
}

fn database_manifest_record(entry: &GtEntry, relpath: &str) -> (String, Vec<(String, String)>) {
    let b = &entry.box3d;
    (
        relpath.to_string(),
        vec![
            ("frame".into(), entry.frame_id.clone()),
            ("class".into(), b.class.name().into()),
            ("cx".into(), format!("{}", b.center[0])),
            ("cy".into(), format!("{}", b.center[1])),
            ("cz".into(), format!("{}", b.center[2])),
            ("w".into(), format!("{}", b.size[0])),
            ("h".into(), format!("{}", b.size[1])),
            ("l".into(), format!("{}", b.size[2])),
            ("yaw".into(), format!("{}", b.yaw)),
            ("points".into(), entry.points.len().to_string()),
        ],
    )
}

fn persist_database(db_dir: &Path, db: &GtDatabase) -> Result<()> {
    let mut records = Vec::new();
    for class in KittiClass::ALL {
        for (i, entry) in db.class_entries(class).iter().enumerate() {
            let relpath = format!("{}/{}_{i}.fused.bin", class.name(), entry.frame_id);
            let bytes = write_fused(&entry.points)?;
            write_output(&db_dir.join(&relpath), &bytes)?;
            records.push(database_manifest_record(entry, &relpath));
        }
    }
    Manifest::append_records(&db_dir.join("manifest.txt"), records)?;
    Ok(())
}

fn load_database(db_dir: &Path) -> Result<GtDatabase> {
    let manifest = Manifest::load(&db_dir.join("manifest.txt"))?;
    let mut db = GtDatabase::new();
    for (relpath, fields) in &manifest.records {
        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .with_context(|| format!("database record {relpath} missing {key}"))
        };
        let class_name = get("class")?;
        let class = KittiClass::ALL
            .into_iter()
            .find(|c| c.name() == class_name)
            .context("unknown class in database manifest")?;
        let num: [f64; 7] = [
            get("cx")?.parse()?,
            get("cy")?.parse()?,
            get("cz")?.parse()?,
            get("w")?.parse()?,
            get("h")?.parse()?,
            get("l")?.parse()?,
            get("yaw")?.parse()?,
        ];
        let bytes = std::fs::read(db_dir.join(relpath))
            .with_context(|| format!("reading database entry {relpath}"))?;
        db.push(GtEntry {
            frame_id: get("frame")?.to_string(),
            box3d: Box3D::new([num[0], num[1], num[2]], [num[3], num[4], num[5]], num[6], class),
            points: parse_fused(&bytes)?,
        });
    }
    Ok(db)
}

fn ensure_database(
    cfg: &PipelineConfig,
    stems: &[String],
    pool: &rayon::ThreadPool,
) -> Result<GtDatabase> {
    let db_dir = cfg.output_root.join("gt_database");
    if db_dir.join("manifest.txt").exists() {
        return load_database(&db_dir);
    }
    let frames: Vec<(String, semfuse::FusedPointCloud, Vec<Box3D>)> = pool.install(|| {
        stems
            .par_iter()
            .map(|stem| -> Result<_> {
                let fused_path = FramePaths::fused(&cfg.output_root, stem);
                let bytes = std::fs::read(&fused_path)
                    .with_context(|| format!("reading {}", fused_path.display()))?;
                let fused = parse_fused(&bytes)?;
                let (objects, _, calib) = load_frame_boxes(cfg, stem)?;
                let boxes: Vec<Box3D> = objects
                    .iter()
                    .filter_map(|o| object_to_box(o, &calib))
                    .collect();
                Ok((stem.clone(), fused, boxes))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let db = build_gt_database(
        frames
            .iter()
            .map(|(id, fpc, boxes)| (id.as_str(), fpc, boxes.as_slice())),
    );
    persist_database(&db_dir, &db)?;
    Ok(db)
}

struct FrameOutcome {
    record: Vec<(String, String)>,
    placed: usize,
    rejected: usize,
    reverted: usize,
}

fn augment_frame(
    cfg: &PipelineConfig,
    aug: &AugmentConfig,
    db: &GtDatabase,
    stem: &str,
) -> Result<FrameOutcome> {
    let fused_path = FramePaths::fused(&cfg.output_root, stem);
    let bytes =
        std::fs::read(&fused_path).with_context(|| format!("reading {}", fused_path.display()))?;
    let fused = parse_fused(&bytes)?;
    let (objects, raw_lines, calib) = load_frame_boxes(cfg, stem)?;

    // Original boxes occupy the front of the box list, aligned with their
    // label rows; sampled boxes append after.
    let mut box_rows: Vec<usize> = Vec::new();
    let mut boxes: Vec<Box3D> = Vec::new();
    for (row, obj) in objects.iter().enumerate() {
        if let Some(b) = object_to_box(obj, &calib) {
            box_rows.push(row);
            boxes.push(b);
        }
    }
    let original_count = boxes.len();
    let original_boxes = boxes.clone();

    let mut scene = Scene::from_fused(&fused, boxes);
    let mut rng = frame_rng(cfg.seed, stem);
    let sample_stats = sample_gt(db, &mut scene, aug, &mut rng);
    global_flip_x(&mut scene, aug, &mut rng);
    global_rotate(&mut scene, aug, &mut rng);
    global_scale(&mut scene, aug, &mut rng);
    let perbox_stats = per_box_augment(&mut scene, aug, &mut rng);

    let out_cloud = write_fused(&scene.to_fused())?;
    write_output(
        &cfg.output_root
            .join("augmented")
            .join(format!("{stem}.fused.bin")),
        &out_cloud,
    )?;

    // Updated labels: untouched rows verbatim, moved boxes re-derived with
    // their original class/occlusion/truncation, sampled boxes appended.
    let mut label_out = String::new();
    let mut next_original = 0usize;
    for (row, raw) in raw_lines.iter().enumerate() {
        if next_original < original_count && box_rows[next_original] == row {
            let bi = next_original;
            next_original += 1;
            let final_box = scene.boxes[bi];
            if final_box == original_boxes[bi] {
                label_out.push_str(raw);
                label_out.push('\n');
            } else {
                let src = &objects[row];
                let mut obj = box_to_object(&final_box, &calib);
                obj.class_name = src.class_name.clone();
                obj.truncation = src.truncation;
                obj.occlusion = src.occlusion;
                label_out.push_str(semfuse::kitti_io::write_object_labels(&[obj]).as_str());
            }
        } else {
            label_out.push_str(raw);
            label_out.push('\n');
        }
    }
    for b in &scene.boxes[original_count..] {
        let obj = box_to_object(b, &calib);
        label_out.push_str(semfuse::kitti_io::write_object_labels(&[obj]).as_str());
    }
    write_output(
        &cfg.output_root
            .join("augmented")
            .join("labels")
            .join(format!("{stem}.txt")),
        label_out.as_bytes(),
    )?;

    let seed_hex: String = derive_frame_seed(cfg.seed, stem)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(FrameOutcome {
        record: vec![
            ("seed".into(), seed_hex),
            ("points".into(), scene.points.len().to_string()),
            ("placed".into(), sample_stats.placed.to_string()),
            ("rejected".into(), sample_stats.rejected.to_string()),
            ("perturbed".into(), perbox_stats.perturbed.to_string()),
            ("reverted".into(), perbox_stats.reverted.to_string()),
            ("sha256".into(), sha256_hex(&out_cloud)),
        ],
        placed: sample_stats.placed,
        rejected: sample_stats.rejected,
        reverted: perbox_stats.reverted,
    })
}

pub fn run(cfg: &PipelineConfig) -> Result<AugmentSummary> {
    let aug = cfg.load_augment_config()?;
    let fused_dir = cfg.output_root.join("fused");
    let all_stems = frame_stems(&fused_dir, ".fused.bin")
        .context("fused dataset not found; run `fuse` first")?;
    let stems = match &cfg.train_split {
        Some(split) => {
            let wanted = read_split(split)?;
            let missing: Vec<&String> =
                wanted.iter().filter(|s| !all_stems.contains(s)).collect();
            if !missing.is_empty() {
                bail!("split frames missing from fused dataset: {missing:?}");
            }
            wanted
        }
        None => all_stems,
    };

    let pool = cfg.thread_pool(None)?;
    let db = ensure_database(cfg, &stems, &pool)?;

    let manifest_path = cfg.output_root.join("augmented").join("manifest.txt");
    let manifest = Manifest::load(&manifest_path)?;
    let (done, pending): (Vec<_>, Vec<_>) =
        stems.into_iter().partition(|s| manifest.contains(s));

    let results: Vec<(String, Result<FrameOutcome>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|stem| (stem.clone(), augment_frame(cfg, &aug, &db, stem)))
            .collect()
    });

    let mut summary = AugmentSummary {
        skipped: done.len(),
        ..AugmentSummary::default()
    };
    let mut records = Vec::new();
    for (stem, result) in results {
        match result {
            Ok(outcome) => {
                summary.augmented += 1;
                summary.placed += outcome.placed;
                summary.rejected += outcome.rejected;
                summary.reverted += outcome.reverted;
                records.push((stem, outcome.record));
            }
            Err(err) => summary.failures.push((stem, format!("{err:#}"))),
        }
    }
    Manifest::append_records(&manifest_path, records)?;
    Ok(summary)
}
