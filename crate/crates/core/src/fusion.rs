//! Per-point semantic feature fusion.
//!
//! Segmentation output (per-point semantic ids, or per-point class scores)
//! is mapped to the four detection classes and concatenated onto the raw
//! points, turning each (x, y, z, r) into (x, y, z, r, s0, s1, s2, s3).
//! Geometry bytes are never touched: the semantic block is appended, point
//! order is preserved.
//!
//! Two modes exist:
//! - label mode: one-hot over the mapped class (s is exactly one 1);
//! - score mode: softmax over per-point logits (s sums to 1).
//!
//! Both agree on the per-point argmax when the labels are the argmax of the
//! same logits.

use crate::kitti_io::{PointCloud, SemanticLabelMap};
use thiserror::Error;

/// The four detection classes, in semantic-block order: s0 unlabeled, s1 car,
/// s2 pedestrian, s3 cyclist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum KittiClass {
    #[default]
    Unlabeled = 0,
    Car = 1,
    Pedestrian = 2,
    Cyclist = 3,
}

impl KittiClass {
    pub const ALL: [KittiClass; 4] = [
        KittiClass::Unlabeled,
        KittiClass::Car,
        KittiClass::Pedestrian,
        KittiClass::Cyclist,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            KittiClass::Unlabeled => "unlabeled",
            KittiClass::Car => "car",
            KittiClass::Pedestrian => "pedestrian",
            KittiClass::Cyclist => "cyclist",
        }
    }
}

/// Total mapping from 16-bit source semantic ids to detection classes.
/// Every id maps; anything not listed is `Unlabeled`.
#[derive(Clone)]
pub struct ClassMap {
    table: Box<[KittiClass; 65536]>,
}

impl std::fmt::Debug for ClassMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mapped: Vec<(u16, KittiClass)> = (0..=u16::MAX)
            .filter(|&id| self.table[id as usize] != KittiClass::Unlabeled)
            .map(|id| (id, self.table[id as usize]))
            .collect();
        f.debug_struct("ClassMap").field("mapped", &mapped).finish()
    }
}

impl ClassMap {
    /// Map with every id set to `Unlabeled`.
    pub fn empty() -> Self {
        Self {
            table: vec![KittiClass::Unlabeled; 65536]
                .into_boxed_slice()
                .try_into()
                .unwrap(),
        }
    }

    /// The default table over SemanticKITTI raw ids: car (10) and moving-car
    /// (252) map to car; person (30) and moving-person (254) to pedestrian;
    /// bicyclist (31) and moving-bicyclist (253) to cyclist. Moving and
    /// static variants of a class are merged.
    pub fn semantic_kitti_default() -> Self {
        Self::from_entries([
            (10, KittiClass::Car),
            (252, KittiClass::Car),
            (30, KittiClass::Pedestrian),
            (254, KittiClass::Pedestrian),
            (31, KittiClass::Cyclist),
            (253, KittiClass::Cyclist),
        ])
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u16, KittiClass)>) -> Self {
        let mut map = Self::empty();
        for (id, class) in entries {
            map.table[id as usize] = class;
        }
        map
    }

    /// Parse a class-map config: one `source_id -> class` line per mapping,
    /// where class is one of `unlabeled|car|pedestrian|cyclist`. Blank lines
    /// and `#` comments are ignored; unlisted ids stay `Unlabeled`.
    pub fn parse(text: &str) -> Result<Self, FusionError> {
        let mut map = Self::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (id_part, class_part) =
                content
                    .split_once("->")
                    .ok_or_else(|| FusionError::MalformedClassMap {
                        line,
                        reason: "expected `source_id -> class`".to_string(),
                    })?;
            let id: u16 =
                id_part
                    .trim()
                    .parse()
                    .map_err(|_| FusionError::MalformedClassMap {
                        line,
                        reason: format!("bad source id {:?}", id_part.trim()),
                    })?;
            let class = match class_part.trim() {
                "unlabeled" => KittiClass::Unlabeled,
                "car" => KittiClass::Car,
                "pedestrian" => KittiClass::Pedestrian,
                "cyclist" => KittiClass::Cyclist,
                other => {
                    return Err(FusionError::MalformedClassMap {
                        line,
                        reason: format!("unknown class {other:?}"),
                    })
                }
            };
            map.table[id as usize] = class;
        }
        Ok(map)
    }

    pub fn lookup(&self, semantic_id: u16) -> KittiClass {
        self.table[semantic_id as usize]
    }
}

/// Deterministic class lookup; unmapped ids come back `Unlabeled`.
pub fn map_class(semantic_id: u16, map: &ClassMap) -> KittiClass {
    map.lookup(semantic_id)
}

/// One-hot encode a class into the 4-wide semantic block.
pub fn one_hot(class: KittiClass) -> [f32; 4] {
    let mut s = [0.0; 4];
    s[class.index()] = 1.0;
    s
}

/// A point carrying the 8 fused features (x, y, z, r, s0, s1, s2, s3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub r: f32,
    pub sem: [f32; 4],
}

impl FusedPoint {
    pub fn features(&self) -> [f32; 8] {
        [
            self.x, self.y, self.z, self.r, self.sem[0], self.sem[1], self.sem[2], self.sem[3],
        ]
    }

    pub fn from_features(f: [f32; 8]) -> Self {
        Self {
            x: f[0],
            y: f[1],
            z: f[2],
            r: f[3],
            sem: [f[4], f[5], f[6], f[7]],
        }
    }

    /// Index of the dominant semantic component.
    pub fn argmax_class(&self) -> KittiClass {
        let mut best = 0;
        for k in 1..4 {
            if self.sem[k] > self.sem[best] {
                best = k;
            }
        }
        KittiClass::from_index(best).unwrap()
    }
}

/// A fused frame; in label mode every semantic block is one-hot, in score
/// mode it sums to 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusedPointCloud {
    pub points: Vec<FusedPoint>,
}

impl FusedPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-point class scores (logits or probabilities), index-aligned with the
/// point cloud they will be fused onto.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassScoreMap {
    pub scores: Vec<[f32; 4]>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("length mismatch: {points} points vs {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("non-finite score at point {index}")]
    NonFiniteScore { index: usize },
    #[error("malformed class map at line {line}: {reason}")]
    MalformedClassMap { line: usize, reason: String },
}

/// Label-mode fusion: per point, append the one-hot of its mapped class.
/// Order is preserved and geometry bytes are unchanged.
pub fn concat_sem_feature(
    labels: &SemanticLabelMap,
    pc: &PointCloud,
    map: &ClassMap,
) -> Result<FusedPointCloud, FusionError> {
    if labels.len() != pc.len() {
        return Err(FusionError::LengthMismatch {
            points: pc.len(),
            labels: labels.len(),
        });
    }
    let points = pc
        .points
        .iter()
        .zip(&labels.entries)
        .map(|(p, l)| FusedPoint {
            x: p.x,
            y: p.y,
            z: p.z,
            r: p.r,
            sem: one_hot(map.lookup(l.semantic_id)),
        })
        .collect();
    Ok(FusedPointCloud { points })
}

/// Numerically stable softmax over one score block (max subtraction, f64
/// accumulation).
pub fn softmax4(scores: [f32; 4]) -> [f32; 4] {
    let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps = scores.map(|v| ((v as f64) - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| (e / sum) as f32)
}

/// Score-mode fusion: per point, append the softmax of its class scores.
pub fn concat_score_feature(
    scores: &ClassScoreMap,
    pc: &PointCloud,
) -> Result<FusedPointCloud, FusionError> {
    if scores.scores.len() != pc.len() {
        return Err(FusionError::LengthMismatch {
            points: pc.len(),
            labels: scores.scores.len(),
        });
    }
    let mut points = Vec::with_capacity(pc.len());
    for (i, (p, s)) in pc.points.iter().zip(&scores.scores).enumerate() {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(FusionError::NonFiniteScore { index: i });
        }
        points.push(FusedPoint {
            x: p.x,
            y: p.y,
            z: p.z,
            r: p.r,
            sem: softmax4(*s),
        });
    }
    Ok(FusedPointCloud { points })
}

/// Drop the semantic block, recovering the raw cloud. `strip(concat(l, p))`
/// is the identity on geometry.
pub fn strip_semantics(fpc: &FusedPointCloud) -> PointCloud {
    let points = fpc
        .points
        .iter()
        .map(|p| crate::kitti_io::Point {
            x: p.x,
            y: p.y,
            z: p.z,
            r: p.r,
        })
        .collect();
    PointCloud { points }
}
