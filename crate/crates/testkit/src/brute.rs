//! Brute-force detection evaluator: the benchmark protocol written out
//! directly, with no shared machinery with the main evaluator. Matching is
//! re-derived per cell with linear scans and AP comes straight from the
//! interpolation formula.

use semfuse::eval::Interpolation;
use semfuse::geometry::{bev_iou, iou_3d, Box3D};
use semfuse::kitti_io::{object_to_box, Calibration, GroundTruthObject};
use semfuse::KittiClass;
use std::collections::BTreeMap;

/// (class index, bucket index 0..3, metric index: 0 = 3D, 1 = BEV) -> AP in
/// percent.
pub type BruteReport = BTreeMap<(usize, usize, usize), f64>;

fn bucket_of(obj: &GroundTruthObject) -> usize {
    let h = obj.bbox2d[3] - obj.bbox2d[1];
    if h >= 40.0 && obj.occlusion <= 0 && obj.truncation <= 0.15 {
        0
    } else if h >= 25.0 && obj.occlusion <= 1 && obj.truncation <= 0.30 {
        1
    } else if h >= 25.0 && obj.occlusion <= 2 && obj.truncation <= 0.50 {
        2
    } else {
        3
    }
}

/// Evaluate every (class, difficulty, metric) cell by brute force. Frames
/// must already be id-aligned; they are processed in sorted-id order.
pub fn brute_evaluate(
    det_frames: &[(String, Vec<GroundTruthObject>)],
    gt_frames: &[(String, Vec<GroundTruthObject>)],
    thresholds: [f64; 4],
    interpolation: Interpolation,
) -> BruteReport {
    let calib = Calibration::nominal();
    let mut ids: Vec<&String> = gt_frames.iter().map(|(id, _)| id).collect();
    ids.sort();
    let det_by_id: BTreeMap<&String, &Vec<GroundTruthObject>> =
        det_frames.iter().map(|(id, o)| (id, o)).collect();
    let gt_by_id: BTreeMap<&String, &Vec<GroundTruthObject>> =
        gt_frames.iter().map(|(id, o)| (id, o)).collect();

    let mut report = BruteReport::new();
    for (ci, class) in [KittiClass::Car, KittiClass::Pedestrian, KittiClass::Cyclist]
        .into_iter()
        .enumerate()
    {
        let threshold = thresholds[class.index()];
        for bucket in 0..3usize {
            for (mi, use_3d) in [true, false].into_iter().enumerate() {
                let mut pooled: Vec<(f64, bool)> = Vec::new();
                let mut num_gt = 0usize;

                for id in &ids {
                    let gt_objs = gt_by_id[*id];
                    let det_objs = det_by_id[*id];

                    let mut counted: Vec<Box3D> = Vec::new();
                    let mut ignored: Vec<Box3D> = Vec::new();
                    let mut dont_care: Vec<[f64; 4]> = Vec::new();
                    for obj in gt_objs.iter() {
                        if obj.dont_care {
                            dont_care.push(obj.bbox2d);
                            continue;
                        }
                        if obj.kitti_class() != Some(class) {
                            continue;
                        }
                        let Some(b) = object_to_box(obj, &calib) else {
                            continue;
                        };
                        if bucket_of(obj) <= bucket {
                            counted.push(b);
                        } else {
                            ignored.push(b);
                        }
                    }
                    num_gt += counted.len();

                    let mut dets: Vec<(Box3D, [f64; 4], f64)> = Vec::new();
                    for obj in det_objs.iter() {
                        if obj.kitti_class() != Some(class) {
                            continue;
                        }
                        let Some(b) = object_to_box(obj, &calib) else {
                            continue;
                        };
                        dets.push((b, obj.bbox2d, obj.score.expect("scored detection")));
                    }
                    let mut order: Vec<usize> = (0..dets.len()).collect();
                    order.sort_by(|&a, &b| {
                        dets[b].2.partial_cmp(&dets[a].2).unwrap().then(a.cmp(&b))
                    });

                    let mut counted_taken = vec![false; counted.len()];
                    let mut ignored_taken = vec![false; ignored.len()];
                    for &di in &order {
                        let (dbox, dbbox, score) = &dets[di];
                        let overlap = |g: &Box3D| if use_3d { iou_3d(dbox, g) } else { bev_iou(dbox, g) };

                        let mut best_gt = usize::MAX;
                        let mut best_iou = -1.0f64;
                        for (gi, g) in counted.iter().enumerate() {
                            if counted_taken[gi] {
                                continue;
                            }
                            let v = overlap(g);
                            if v >= threshold && v > best_iou {
                                best_iou = v;
                                best_gt = gi;
                            }
                        }
                        if best_gt != usize::MAX {
                            counted_taken[best_gt] = true;
                            pooled.push((*score, true));
                            continue;
                        }

                        let mut best_ig = usize::MAX;
                        let mut best_iou = -1.0f64;
                        for (gi, g) in ignored.iter().enumerate() {
                            if ignored_taken[gi] {
                                continue;
                            }
                            let v = overlap(g);
                            if v >= threshold && v > best_iou {
                                best_iou = v;
                                best_ig = gi;
                            }
                        }
                        if best_ig != usize::MAX {
                            ignored_taken[best_ig] = true;
                            continue;
                        }

                        let absorbed = dont_care.iter().any(|dc| {
                            let w = (dbbox[2].min(dc[2]) - dbbox[0].max(dc[0])).max(0.0);
                            let h = (dbbox[3].min(dc[3]) - dbbox[1].max(dc[1])).max(0.0);
                            let area = (dbbox[2] - dbbox[0]) * (dbbox[3] - dbbox[1]);
                            area > 0.0 && w * h / area >= threshold
                        });
                        if !absorbed {
                            pooled.push((*score, false));
                        }
                    }
                }

                let ap = if num_gt == 0 {
                    0.0
                } else {
                    pooled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                    let mut curve: Vec<(f64, f64)> = Vec::new();
                    let (mut tp, mut fp) = (0usize, 0usize);
                    for &(_, is_tp) in &pooled {
                        if is_tp {
                            tp += 1;
                        } else {
                            fp += 1;
                        }
                        curve.push((tp as f64 / num_gt as f64, tp as f64 / (tp + fp) as f64));
                    }
                    let (n, start, denom) = match interpolation {
                        Interpolation::R40 => (40usize, 1usize, 40.0),
                        Interpolation::R11 => (11, 0, 10.0),
                    };
                    let mut total = 0.0;
                    for i in start..start + n {
                        let r = i as f64 / denom;
                        let mut best = 0.0f64;
                        for &(recall, precision) in &curve {
                            if recall >= r && precision > best {
                                best = precision;
                            }
                        }
                        total += best;
                    }
                    total / n as f64 * 100.0
                };
                report.insert((ci, bucket, mi), ap);
            }
        }
    }
    report
}
