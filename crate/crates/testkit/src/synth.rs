//! Synthetic frames, clouds, and evaluation scenarios.

use rand::Rng;
use semfuse::fusion::{ClassScoreMap, FusedPoint, FusedPointCloud};
use semfuse::geometry::Box3D;
use semfuse::kitti_io::{
    box_to_object, Calibration, GroundTruthObject, Point, PointCloud, SemanticLabel,
    SemanticLabelMap,
};
use semfuse::KittiClass;

/// SemanticKITTI-style raw ids: the mapped detection classes plus a spread of
/// background ids.
pub const RAW_IDS: [u16; 12] = [0, 1, 10, 11, 30, 31, 40, 48, 70, 252, 253, 254];

pub fn random_cloud(n: usize, rng: &mut impl Rng) -> PointCloud {
    let points = (0..n)
        .map(|_| Point {
            x: rng.random_range(-80.0..80.0),
            y: rng.random_range(-80.0..80.0),
            z: rng.random_range(-3.0..5.0),
            r: rng.random_range(0.0..1.0),
        })
        .collect();
    PointCloud { points }
}

pub fn random_labels(n: usize, rng: &mut impl Rng) -> SemanticLabelMap {
    let entries = (0..n)
        .map(|_| SemanticLabel {
            semantic_id: RAW_IDS[rng.random_range(0..RAW_IDS.len())],
            instance_id: rng.random_range(0..40),
        })
        .collect();
    SemanticLabelMap { entries }
}

pub fn random_scores(n: usize, rng: &mut impl Rng) -> ClassScoreMap {
    let scores = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-8.0f32..8.0)))
        .collect();
    ClassScoreMap { scores }
}

pub fn random_fused_frame(n: usize, rng: &mut impl Rng) -> FusedPointCloud {
    let points = (0..n)
        .map(|_| {
            let mut sem = [0.0f32; 4];
            sem[rng.random_range(0..4)] = 1.0;
            FusedPoint {
                x: rng.random_range(-80.0..80.0),
                y: rng.random_range(-80.0..80.0),
                z: rng.random_range(-3.0..5.0),
                r: rng.random_range(0.0..1.0),
                sem,
            }
        })
        .collect();
    FusedPointCloud { points }
}

/// A generic box with realistic extents, anywhere in the forward field.
pub fn random_box(rng: &mut impl Rng) -> Box3D {
    let class = [KittiClass::Car, KittiClass::Pedestrian, KittiClass::Cyclist]
        [rng.random_range(0..3)];
    let size = match class {
        KittiClass::Car => [
            rng.random_range(1.4..2.0),
            rng.random_range(1.3..1.8),
            rng.random_range(3.2..4.6),
        ],
        KittiClass::Pedestrian => [
            rng.random_range(0.4..0.8),
            rng.random_range(1.5..1.9),
            rng.random_range(0.4..1.0),
        ],
        _ => [
            rng.random_range(0.4..0.8),
            rng.random_range(1.4..1.9),
            rng.random_range(1.4..2.0),
        ],
    };
    Box3D::new(
        [
            rng.random_range(4.0..60.0),
            rng.random_range(-25.0..25.0),
            rng.random_range(-1.5..0.5),
        ],
        size,
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        class,
    )
}

/// A pair of boxes that overlaps roughly half the time: the second box is a
/// jittered copy or an unrelated draw.
pub fn random_box_pair(rng: &mut impl Rng) -> (Box3D, Box3D) {
    let a = random_box(rng);
    let b = if rng.random_bool(0.6) {
        Box3D::new(
            [
                a.center[0] + rng.random_range(-2.0..2.0),
                a.center[1] + rng.random_range(-2.0..2.0),
                a.center[2] + rng.random_range(-1.0..1.0),
            ],
            [
                a.size[0] * rng.random_range(0.7..1.4),
                a.size[1] * rng.random_range(0.7..1.4),
                a.size[2] * rng.random_range(0.7..1.4),
            ],
            a.yaw + rng.random_range(-1.0..1.0),
            a.class,
        )
    } else {
        random_box(rng)
    };
    (a, b)
}

/// Render a box as a ground-truth row with controlled difficulty fields.
pub fn gt_row(
    b: &Box3D,
    bucket: usize,
    rng: &mut impl Rng,
) -> GroundTruthObject {
    let calib = Calibration::nominal();
    let mut obj = box_to_object(b, &calib);
    obj.score = None;
    // (height, occlusion, truncation) placing the object inside the bucket.
    let (height, occlusion, truncation) = match bucket {
        0 => (rng.random_range(40.0..120.0), 0, rng.random_range(0.0..0.15)),
        1 => (rng.random_range(25.0..120.0), 1, rng.random_range(0.16..0.30)),
        2 => (rng.random_range(25.0..120.0), 2, rng.random_range(0.31..0.50)),
        _ => (rng.random_range(5.0..24.0), 3, rng.random_range(0.51..0.95)),
    };
    let left = rng.random_range(0.0..1100.0);
    let top = rng.random_range(0.0..250.0);
    obj.bbox2d = [left, top, left + height * 0.7, top + height];
    obj.occlusion = occlusion;
    obj.truncation = truncation;
    obj
}

/// Render a box as a scored detection row.
pub fn det_row(b: &Box3D, score: f64) -> GroundTruthObject {
    let calib = Calibration::nominal();
    let mut obj = box_to_object(&b.with_score(score), &calib);
    obj.score = Some(score);
    obj
}

/// A DontCare region row.
pub fn dont_care_row(bbox2d: [f64; 4]) -> GroundTruthObject {
    GroundTruthObject {
        class_name: "DontCare".to_string(),
        truncation: -1.0,
        occlusion: -1,
        alpha: -10.0,
        bbox2d,
        dimensions: [-1.0, -1.0, -1.0],
        location: [-1000.0, -1000.0, -1000.0],
        rotation_y: -10.0,
        score: None,
        dont_care: true,
    }
}

/// A random small evaluation scenario: a handful of frames with at most
/// `max_gts_per_class` ground truths per class and `max_dets` detections per
/// frame. Detections mix jittered copies of ground truths (likely matches)
/// with unrelated boxes.
pub fn random_eval_scenario(
    max_dets: usize,
    max_gts_per_class: usize,
    rng: &mut impl Rng,
) -> (
    Vec<(String, Vec<GroundTruthObject>)>,
    Vec<(String, Vec<GroundTruthObject>)>,
) {
    let num_frames = rng.random_range(1..=3);
    let mut det_frames = Vec::new();
    let mut gt_frames = Vec::new();
    for f in 0..num_frames {
        let id = format!("{f:06}");
        let mut gts: Vec<GroundTruthObject> = Vec::new();
        let mut gt_boxes: Vec<Box3D> = Vec::new();
        for class in [KittiClass::Car, KittiClass::Pedestrian, KittiClass::Cyclist] {
            let count = rng.random_range(0..=max_gts_per_class);
            for _ in 0..count {
                let mut b = random_box(rng);
                b.class = class;
                let bucket = rng.random_range(0..4);
                gts.push(gt_row(&b, bucket, rng));
                gt_boxes.push(b);
            }
        }
        if rng.random_bool(0.4) {
            let left = rng.random_range(0.0..1000.0);
            let top = rng.random_range(0.0..300.0);
            gts.push(dont_care_row([
                left,
                top,
                left + rng.random_range(20.0..200.0),
                top + rng.random_range(10.0..70.0),
            ]));
        }

        let mut dets = Vec::new();
        let num_dets = rng.random_range(0..=max_dets);
        for _ in 0..num_dets {
            let score = rng.random_range(0.0..1.0);
            if !gt_boxes.is_empty() && rng.random_bool(0.7) {
                let base = gt_boxes[rng.random_range(0..gt_boxes.len())];
                let jitter: f64 = rng.random_range(0.001..1.2);
                let b = Box3D::new(
                    [
                        base.center[0] + rng.random_range(-jitter..=jitter),
                        base.center[1] + rng.random_range(-jitter..=jitter),
                        base.center[2] + rng.random_range(-0.3..0.3),
                    ],
                    base.size,
                    base.yaw + rng.random_range(-0.3..0.3),
                    base.class,
                );
                dets.push(det_row(&b, score));
            } else {
                dets.push(det_row(&random_box(rng), score));
            }
        }
        gt_frames.push((id.clone(), gts));
        det_frames.push((id, dets));
    }
    (det_frames, gt_frames)
}
