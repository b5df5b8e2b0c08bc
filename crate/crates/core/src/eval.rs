//! KITTI-style detection evaluation: difficulty assignment, score-ranked
//! greedy matching at class-specific IoU thresholds, precision-recall
//! curves, and interpolated Average Precision for 3D and BEV metrics.
//!
//! Camera-frame label rows are converted to internal boxes through the exact
//! nominal axis permutation; IoU is invariant under that rigid map, so the
//! result equals an evaluation done directly in camera coordinates.

use crate::fusion::KittiClass;
use crate::geometry::{bev_iou, iou_3d, Box3D};
use crate::kitti_io::{object_to_box, Calibration, GroundTruthObject};
use std::collections::BTreeMap;
use thiserror::Error;

/// Ground-truth strata. Buckets are inclusive: evaluating `Moderate` counts
/// `Easy` and `Moderate` objects and ignores stricter ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    /// Below even the Hard thresholds; absorbs detections without penalty.
    Ignored,
}

impl Difficulty {
    pub const BUCKETS: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
            Difficulty::Ignored => "ignored",
        }
    }
}

/// Benchmark difficulty thresholds: minimum 2D box height in pixels, maximum
/// occlusion level, maximum truncation fraction.
const DIFFICULTY_TABLE: [(f64, i32, f64); 3] = [(40.0, 0, 0.15), (25.0, 1, 0.30), (25.0, 2, 0.50)];

/// Assign the most lenient bucket whose height/occlusion/truncation
/// thresholds the object satisfies.
pub fn assign_difficulty(gt: &GroundTruthObject) -> Difficulty {
    let height = gt.bbox_height();
    for (bucket, (min_height, max_occlusion, max_truncation)) in
        Difficulty::BUCKETS.into_iter().zip(DIFFICULTY_TABLE)
    {
        if height >= min_height && gt.occlusion <= max_occlusion && gt.truncation <= max_truncation
        {
            return bucket;
        }
    }
    Difficulty::Ignored
}

/// Which overlap the matcher scores on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    ThreeD,
    Bev,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::ThreeD, Metric::Bev];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ThreeD => "3d",
            Metric::Bev => "bev",
        }
    }

    pub fn iou(self, a: &Box3D, b: &Box3D) -> f64 {
        match self {
            Metric::ThreeD => iou_3d(a, b),
            Metric::Bev => bev_iou(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// 40 recall samples at i/40, i = 1..=40 (the modern benchmark).
    R40,
    /// 11 recall samples at i/10, i = 0..=10 (older literature).
    R11,
}

/// Evaluation settings: per-class IoU thresholds (shared by both metrics)
/// and the AP interpolation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Indexed by `KittiClass`; the unlabeled slot is unused.
    pub iou_thresholds: [f64; 4],
    pub interpolation: Interpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: [0.5, 0.7, 0.5, 0.5],
            interpolation: Interpolation::R40,
        }
    }
}

impl EvalConfig {
    pub fn threshold(&self, class: KittiClass) -> f64 {
        self.iou_thresholds[class.index()]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no ground truth in the evaluated bucket")]
    NoGroundTruth,
    #[error("frame sets differ: {missing_in_dets:?} missing from detections, {missing_in_gts:?} missing from ground truth")]
    FrameMismatch {
        missing_in_dets: Vec<String>,
        missing_in_gts: Vec<String>,
    },
    #[error("detection {index} in frame {frame} has no score")]
    MissingScore { frame: String, index: usize },
    #[error("malformed report line {line}: {reason}")]
    MalformedReport { line: usize, reason: String },
}

/// A detection prepared for matching.
#[derive(Debug, Clone, Copy)]
pub struct ScoredDet {
    pub box3d: Box3D,
    pub bbox2d: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetOutcome {
    TruePositive,
    FalsePositive,
    /// Matched an ignored ground truth or a DontCare region; neither rewarded
    /// nor penalized.
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Parallel to the detection input order.
    pub outcomes: Vec<DetOutcome>,
    /// Parallel to the counted ground-truth input order.
    pub gt_matched: Vec<bool>,
}

/// Fraction of the detection's 2D box covered by a region.
fn overlap_over_det_area(det: [f64; 4], region: [f64; 4]) -> f64 {
    let w = (det[2].min(region[2]) - det[0].max(region[0])).max(0.0);
    let h = (det[3].min(region[3]) - det[1].max(region[1])).max(0.0);
    let det_area = (det[2] - det[0]) * (det[3] - det[1]);
    if det_area <= 0.0 {
        0.0
    } else {
        w * h / det_area
    }
}

/// Greedy one-to-one matching in descending score order (ties broken by
/// input order). Each detection takes the highest-IoU unmatched counted
/// ground truth at or above the threshold; failing that it may be absorbed
/// by an ignored ground truth or a DontCare region, otherwise it is a false
/// positive.
pub fn match_detections(
    dets: &[ScoredDet],
    counted_gts: &[Box3D],
    ignored_gts: &[Box3D],
    dont_care: &[[f64; 4]],
    iou_fn: &dyn Fn(&Box3D, &Box3D) -> f64,
    threshold: f64,
) -> MatchOutcome {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut outcomes = vec![DetOutcome::FalsePositive; dets.len()];
    let mut gt_matched = vec![false; counted_gts.len()];
    let mut ignored_matched = vec![false; ignored_gts.len()];

    for &di in &order {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in counted_gts.iter().enumerate() {
            if gt_matched[gi] {
                continue;
            }
            let iou = iou_fn(&det.box3d, gt);
            if iou >= threshold && best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            gt_matched[gi] = true;
            outcomes[di] = DetOutcome::TruePositive;
            continue;
        }

        let mut best_ignored: Option<(usize, f64)> = None;
        for (gi, gt) in ignored_gts.iter().enumerate() {
            if ignored_matched[gi] {
                continue;
            }
            let iou = iou_fn(&det.box3d, gt);
            if iou >= threshold && best_ignored.map_or(true, |(_, b)| iou > b) {
                best_ignored = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best_ignored {
            ignored_matched[gi] = true;
            outcomes[di] = DetOutcome::Ignored;
            continue;
        }

        if dont_care
            .iter()
            .any(|&dc| overlap_over_det_area(det.bbox2d, dc) >= threshold)
        {
            outcomes[di] = DetOutcome::Ignored;
        }
    }

    MatchOutcome {
        outcomes,
        gt_matched,
    }
}

/// Pool per-frame outcomes into a precision-recall curve: sort by descending
/// score (stable) and take precision/recall at every prefix.
pub fn pr_curve(
    pooled: &[(f64, bool)],
    num_gt: usize,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if num_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| {
        pooled[b]
            .0
            .partial_cmp(&pooled[a].0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve = Vec::with_capacity(pooled.len());
    for &i in &order {
        if pooled[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        curve.push((tp as f64 / num_gt as f64, tp as f64 / (tp + fp) as f64));
    }
    Ok(curve)
}

/// Interpolated AP in percent: the mean over recall samples of the best
/// precision at or beyond each sample.
pub fn average_precision(curve: &[(f64, f64)], interpolation: Interpolation) -> f64 {
    let (samples, start) = match interpolation {
        Interpolation::R40 => (40usize, 1usize),
        Interpolation::R11 => (11, 0),
    };
    let denom = match interpolation {
        Interpolation::R40 => 40.0,
        Interpolation::R11 => 10.0,
    };
    let mut total = 0.0;
    for i in start..start + samples {
        let r = i as f64 / denom;
        let best = curve
            .iter()
            .filter(|&&(recall, _)| recall >= r)
            .map(|&(_, precision)| precision)
            .fold(0.0f64, f64::max);
        total += best;
    }
    total / samples as f64 * 100.0
}

/// One (class, difficulty, metric) cell of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub class: KittiClass,
    pub difficulty: Difficulty,
    pub metric: Metric,
    pub ap: f64,
    pub num_gt: usize,
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub interpolation: Interpolation,
    pub cells: Vec<EvalCell>,
}

pub const EVAL_CLASSES: [KittiClass; 3] =
    [KittiClass::Car, KittiClass::Pedestrian, KittiClass::Cyclist];

impl EvalReport {
    pub fn ap(&self, class: KittiClass, difficulty: Difficulty, metric: Metric) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.class == class && c.difficulty == difficulty && c.metric == metric)
            .map(|c| c.ap)
    }

    /// Plain-text table: one block per metric, classes as rows,
    /// easy/moderate/hard as columns.
    pub fn render_text(&self) -> String {
        let mode = match self.interpolation {
            Interpolation::R40 => "R40",
            Interpolation::R11 => "R11",
        };
        let mut out = String::new();
        for metric in Metric::ALL {
            let title = match metric {
                Metric::ThreeD => "3D",
                Metric::Bev => "BEV",
            };
            out.push_str(&format!("AP_{title} ({mode}, %)\n"));
            out.push_str(&format!(
                "{:<12} {:>8} {:>8} {:>8}\n",
                "class", "easy", "mod", "hard"
            ));
            for class in EVAL_CLASSES {
                let aps: Vec<String> = Difficulty::BUCKETS
                    .iter()
                    .map(|&d| match self.ap(class, d, metric) {
                        Some(ap) => format!("{ap:8.2}"),
                        None => format!("{:>8}", "-"),
                    })
                    .collect();
                out.push_str(&format!(
                    "{:<12} {} {} {}\n",
                    class_title(class),
                    aps[0],
                    aps[1],
                    aps[2]
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Machine-readable rows: `class,difficulty,metric,ap,num_gt`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("class,difficulty,metric,ap,num_gt\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{:.6},{}\n",
                c.class.name(),
                c.difficulty.name(),
                c.metric.name(),
                c.ap,
                c.num_gt
            ));
        }
        out
    }

    /// Parse a report back from its CSV rows (curves are not persisted).
    pub fn parse_csv(text: &str) -> Result<Self, EvalError> {
        let mut cells = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if idx == 0 || raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 5 {
                return Err(EvalError::MalformedReport {
                    line,
                    reason: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let class = KittiClass::ALL
                .into_iter()
                .find(|c| c.name() == fields[0])
                .ok_or_else(|| EvalError::MalformedReport {
                    line,
                    reason: format!("unknown class {:?}", fields[0]),
                })?;
            let difficulty = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard]
                .into_iter()
                .find(|d| d.name() == fields[1])
                .ok_or_else(|| EvalError::MalformedReport {
                    line,
                    reason: format!("unknown difficulty {:?}", fields[1]),
                })?;
            let metric = Metric::ALL
                .into_iter()
                .find(|m| m.name() == fields[2])
                .ok_or_else(|| EvalError::MalformedReport {
                    line,
                    reason: format!("unknown metric {:?}", fields[2]),
                })?;
            let ap = fields[3].parse().map_err(|e| EvalError::MalformedReport {
                line,
                reason: format!("bad ap: {e}"),
            })?;
            let num_gt = fields[4].parse().map_err(|e| EvalError::MalformedReport {
                line,
                reason: format!("bad num_gt: {e}"),
            })?;
            cells.push(EvalCell {
                class,
                difficulty,
                metric,
                ap,
                num_gt,
                curve: Vec::new(),
            });
        }
        Ok(Self {
            interpolation: Interpolation::R40,
            cells,
        })
    }

    /// Delta table against a baseline report (this minus baseline), rendered
    /// like the text table.
    pub fn render_delta(&self, baseline: &EvalReport) -> String {
        let mut out = String::new();
        for metric in Metric::ALL {
            let title = match metric {
                Metric::ThreeD => "3D",
                Metric::Bev => "BEV",
            };
            out.push_str(&format!("delta AP_{title} (this - baseline, %)\n"));
            out.push_str(&format!(
                "{:<12} {:>8} {:>8} {:>8}\n",
                "class", "easy", "mod", "hard"
            ));
            for class in EVAL_CLASSES {
                let deltas: Vec<String> = Difficulty::BUCKETS
                    .iter()
                    .map(|&d| {
                        match (self.ap(class, d, metric), baseline.ap(class, d, metric)) {
                            (Some(a), Some(b)) => format!("{:+8.2}", a - b),
                            _ => format!("{:>8}", "-"),
                        }
                    })
                    .collect();
                out.push_str(&format!(
                    "{:<12} {} {} {}\n",
                    class_title(class),
                    deltas[0],
                    deltas[1],
                    deltas[2]
                ));
            }
            out.push('\n');
        }
        out
    }
}

fn class_title(class: KittiClass) -> &'static str {
    match class {
        KittiClass::Unlabeled => "Unlabeled",
        KittiClass::Car => "Car",
        KittiClass::Pedestrian => "Pedestrian",
        KittiClass::Cyclist => "Cyclist",
    }
}

struct PreparedFrame {
    dets: Vec<(KittiClass, ScoredDet)>,
    gts: Vec<(Option<KittiClass>, Difficulty, Option<Box3D>)>,
    dont_care: Vec<[f64; 4]>,
}

fn prepare_frames(
    det_frames: &[(String, Vec<GroundTruthObject>)],
    gt_frames: &[(String, Vec<GroundTruthObject>)],
) -> Result<Vec<PreparedFrame>, EvalError> {
    let det_map: BTreeMap<&str, &Vec<GroundTruthObject>> = det_frames
        .iter()
        .map(|(id, objs)| (id.as_str(), objs))
        .collect();
    let gt_map: BTreeMap<&str, &Vec<GroundTruthObject>> = gt_frames
        .iter()
        .map(|(id, objs)| (id.as_str(), objs))
        .collect();
    let missing_in_dets: Vec<String> = gt_map
        .keys()
        .filter(|k| !det_map.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    let missing_in_gts: Vec<String> = det_map
        .keys()
        .filter(|k| !gt_map.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    if !missing_in_dets.is_empty() || !missing_in_gts.is_empty() {
        return Err(EvalError::FrameMismatch {
            missing_in_dets,
            missing_in_gts,
        });
    }

    let calib = Calibration::nominal();
    let mut frames = Vec::with_capacity(gt_map.len());
    for (id, gt_objs) in &gt_map {
        let det_objs = det_map[*id];
        let mut dets = Vec::new();
        for (index, obj) in det_objs.iter().enumerate() {
            let Some(class) = obj.kitti_class() else {
                continue;
            };
            let Some(box3d) = object_to_box(obj, &calib) else {
                continue;
            };
            let score = obj.score.ok_or_else(|| EvalError::MissingScore {
                frame: id.to_string(),
                index,
            })?;
            dets.push((
                class,
                ScoredDet {
                    box3d,
                    bbox2d: obj.bbox2d,
                    score,
                },
            ));
        }
        let mut gts = Vec::new();
        let mut dont_care = Vec::new();
        for obj in *gt_objs {
            if obj.dont_care {
                dont_care.push(obj.bbox2d);
                continue;
            }
            gts.push((
                obj.kitti_class(),
                assign_difficulty(obj),
                object_to_box(obj, &calib),
            ));
        }
        frames.push(PreparedFrame {
            dets,
            gts,
            dont_care,
        });
    }
    Ok(frames)
}

/// Evaluate detections against ground truth over the full 3 classes x 3
/// difficulties x 2 metrics grid. Cells without ground truth report AP 0.
pub fn evaluate_benchmark(
    det_frames: &[(String, Vec<GroundTruthObject>)],
    gt_frames: &[(String, Vec<GroundTruthObject>)],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let frames = prepare_frames(det_frames, gt_frames)?;

    let mut cells = Vec::with_capacity(18);
    for metric in Metric::ALL {
        for class in EVAL_CLASSES {
            let threshold = cfg.threshold(class);
            for bucket in Difficulty::BUCKETS {
                let mut pooled: Vec<(f64, bool)> = Vec::new();
                let mut num_gt = 0usize;
                for frame in &frames {
                    let counted: Vec<Box3D> = frame
                        .gts
                        .iter()
                        .filter(|(c, d, b)| *c == Some(class) && *d <= bucket && b.is_some())
                        .map(|(_, _, b)| b.unwrap())
                        .collect();
                    let ignored: Vec<Box3D> = frame
                        .gts
                        .iter()
                        .filter(|(c, d, b)| *c == Some(class) && *d > bucket && b.is_some())
                        .map(|(_, _, b)| b.unwrap())
                        .collect();
                    let dets: Vec<ScoredDet> = frame
                        .dets
                        .iter()
                        .filter(|(c, _)| *c == class)
                        .map(|(_, d)| *d)
                        .collect();
                    num_gt += counted.len();
                    let outcome = match_detections(
                        &dets,
                        &counted,
                        &ignored,
                        &frame.dont_care,
                        &|a, b| metric.iou(a, b),
                        threshold,
                    );
                    for (det, &res) in dets.iter().zip(&outcome.outcomes) {
                        match res {
                            DetOutcome::TruePositive => pooled.push((det.score, true)),
                            DetOutcome::FalsePositive => pooled.push((det.score, false)),
                            DetOutcome::Ignored => {}
                        }
                    }
                }
                let (curve, ap) = match pr_curve(&pooled, num_gt) {
                    Ok(curve) => {
                        let ap = average_precision(&curve, cfg.interpolation);
                        (curve, ap)
                    }
                    Err(EvalError::NoGroundTruth) => (Vec::new(), 0.0),
                    Err(e) => return Err(e),
                };
                cells.push(EvalCell {
                    class,
                    difficulty: bucket,
                    metric,
                    ap,
                    num_gt,
                    curve,
                });
            }
        }
    }
    Ok(EvalReport {
        interpolation: cfg.interpolation,
        cells,
    })
}
