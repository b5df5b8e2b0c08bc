//! Toy on-disk datasets for end-to-end command tests.

use rand::Rng;
use semfuse::fusion::KittiClass;
use semfuse::geometry::Box3D;
use semfuse::kitti_io::{
    box_to_object, write_calibration, write_object_labels, write_scores, write_velodyne,
    Calibration, Point, PointCloud,
};
use semfuse::seed::frame_rng;
use std::path::{Path, PathBuf};
use std::process::Command;

pub fn semfuse_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semfuse"))
}

pub struct ToyDataset {
    pub dataset_root: PathBuf,
    pub output_root: PathBuf,
    pub config: PathBuf,
    pub stems: Vec<String>,
}

/// Per-point class choices paired with a semantic id and logits whose argmax
/// agrees with the mapped label, so label and score fusion are comparable.
fn labeled_point(rng: &mut impl Rng) -> (u16, [f32; 4]) {
    let class = rng.random_range(0..4usize);
    let semantic_id: u16 = match class {
        1 => [10u16, 252][rng.random_range(0..2)],
        2 => [30u16, 254][rng.random_range(0..2)],
        3 => [31u16, 253][rng.random_range(0..2)],
        _ => [0u16, 40, 48, 70][rng.random_range(0..4)],
    };
    let mut logits: [f32; 4] = std::array::from_fn(|_| rng.random_range(-4.0f32..2.0));
    logits[class] = rng.random_range(3.0f32..8.0);
    (semantic_id, logits)
}

fn frame_boxes(rng: &mut impl Rng) -> Vec<Box3D> {
    let mut boxes = Vec::new();
    let count = rng.random_range(1..4);
    for i in 0..count {
        boxes.push(Box3D::new(
            [12.0 + 14.0 * i as f64, rng.random_range(-8.0..8.0), -0.6],
            [1.7, 1.5, 4.0],
            rng.random_range(-1.0..1.0),
            KittiClass::Car,
        ));
    }
    boxes
}

/// Write a complete toy frame set plus a pipeline config. Scores and labels
/// agree on every point's class.
pub fn build_toy_dataset(dir: &Path, n_frames: usize, points_per_frame: usize, seed: u64) -> ToyDataset {
    let dataset_root = dir.join("data");
    let output_root = dir.join("out");
    let calib = Calibration::nominal();
    let mut stems = Vec::new();
    for f in 0..n_frames {
        let stem = format!("{f:06}");
        let mut rng = frame_rng(seed, &format!("toy/{stem}"));
        let boxes = frame_boxes(&mut rng);

        let mut points = Vec::new();
        let mut words = Vec::new();
        let mut scores = Vec::new();
        for _ in 0..points_per_frame {
            let (semantic_id, logits) = labeled_point(&mut rng);
            // Mix free points with points inside the boxes so augmentation
            // has something to move.
            let pos: [f64; 3] = if rng.random_bool(0.3) && !boxes.is_empty() {
                let b = boxes[rng.random_range(0..boxes.len())];
                [
                    b.center[0] + rng.random_range(-1.5..1.5),
                    b.center[1] + rng.random_range(-0.6..0.6),
                    b.center[2] + rng.random_range(-0.5..0.5),
                ]
            } else {
                [
                    rng.random_range(1.0..65.0),
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-2.0..1.0),
                ]
            };
            points.push(Point {
                x: pos[0] as f32,
                y: pos[1] as f32,
                z: pos[2] as f32,
                r: rng.random_range(0.0..1.0),
            });
            words.push((semantic_id as u32) | ((rng.random_range(0..9u32)) << 16));
            scores.push(logits);
        }

        let label_bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        write(
            &dataset_root.join("velodyne").join(format!("{stem}.bin")),
            &write_velodyne(&PointCloud { points }),
        );
        write(
            &dataset_root.join("semantic").join(format!("{stem}.label")),
            &label_bytes,
        );
        write(
            &dataset_root.join("scores").join(format!("{stem}.score")),
            &write_scores(&semfuse::fusion::ClassScoreMap { scores }),
        );
        let objects: Vec<_> = boxes
            .iter()
            .map(|b| {
                let mut obj = box_to_object(b, &calib);
                obj.bbox2d = [200.0, 150.0, 320.0, 280.0];
                obj
            })
            .collect();
        write(
            &dataset_root.join("label_2").join(format!("{stem}.txt")),
            write_object_labels(&objects).as_bytes(),
        );
        write(
            &dataset_root.join("calib").join(format!("{stem}.txt")),
            write_calibration(&calib).as_bytes(),
        );
        stems.push(stem);
    }

    let config = dir.join("pipeline.toml");
    std::fs::write(
        &config,
        format!(
            "dataset_root = \"data\"\noutput_root = \"out\"\nmode = \"label\"\nseed = {seed}\nworkers = 2\n"
        ),
    )
    .unwrap();
    ToyDataset {
        dataset_root,
        output_root,
        config,
        stems,
    }
}

pub fn write(path: &Path, bytes: &[u8]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

pub fn read_dir_files(dir: &Path, suffix: &str) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().to_string();
        if name.ends_with(suffix) {
            out.push((name, std::fs::read(entry.path()).unwrap()));
        }
    }
    out.sort();
    out
}
