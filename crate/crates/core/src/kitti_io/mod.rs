//! Readers and writers for the on-disk formats the pipeline consumes and
//! produces.
//!
//! All parsers are pure functions over byte/text slices and reject truncated
//! or malformed input deterministically; file handling lives with the caller.
//!
//! Formats:
//! - Velodyne scan `.bin`: N x 4 little-endian f32 (x, y, z, reflectance).
//! - Semantic labels `.label`: N x 1 little-endian u32; low 16 bits semantic
//!   id, high 16 bits instance id.
//! - Fused cloud `.fused.bin`: N x 8 little-endian f32.
//! - Class scores `.score`: N x 4 little-endian f32 (per-class logits).
//! - Object labels / detections: KITTI text, 15 fields (16 with a trailing
//!   score).
//! - Calibration: key-prefixed row-major matrices (`P2:`, `R0_rect:`,
//!   `Tr_velo_to_cam:`).

mod binary;
mod convert;
mod text;

pub use binary::{
    parse_fused, parse_scores, parse_semantic_labels, parse_velodyne, write_fused, write_scores,
    write_semantic_labels, write_velodyne, VelodyneParse,
};
pub use convert::{box_to_object, object_to_box};
pub use text::{parse_calibration, parse_object_labels, write_calibration, write_detections,
    write_object_labels};

use thiserror::Error;

/// A raw LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    /// Reflectance in [0, 1].
    pub r: f32,
}

/// A raw LiDAR frame in sensor order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One semantic-label word, index-aligned with its point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticLabel {
    pub semantic_id: u16,
    pub instance_id: u16,
}

impl SemanticLabel {
    pub fn from_word(word: u32) -> Self {
        Self {
            semantic_id: (word & 0xFFFF) as u16,
            instance_id: (word >> 16) as u16,
        }
    }

    pub fn to_word(self) -> u32 {
        (self.instance_id as u32) << 16 | self.semantic_id as u32
    }
}

/// Per-point semantic/instance labels for one frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticLabelMap {
    pub entries: Vec<SemanticLabel>,
}

impl SemanticLabelMap {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sensor calibration: camera projection plus the LiDAR-to-camera rigid
/// transform, exactly as stored in KITTI calib files.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// 3x4 camera projection matrix (left color camera).
    pub p2: [[f64; 4]; 3],
    /// 3x3 rectification rotation.
    pub r0_rect: [[f64; 3]; 3],
    /// 3x4 rigid transform from LiDAR to unrectified camera frame.
    pub tr_velo_to_cam: [[f64; 4]; 3],
}

impl Calibration {
    /// Identity extrinsics with a pinhole P2; the LiDAR frame coincides with
    /// the camera frame. Useful for synthetic scenes.
    pub fn pinhole(f: f64, cu: f64, cv: f64) -> Self {
        Self {
            p2: [
                [f, 0.0, cu, 0.0],
                [0.0, f, cv, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
            r0_rect: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            tr_velo_to_cam: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
        }
    }

    /// The exact axis permutation between a z-up forward-x LiDAR frame and a
    /// z-forward y-down camera frame, with a generic pinhole projection.
    ///
    /// Frame conversions through this calibration are rigid, so IoU-based
    /// comparisons are unaffected by the missing per-frame extrinsics.
    pub fn nominal() -> Self {
        Self {
            p2: [
                [700.0, 0.0, 621.0, 0.0],
                [0.0, 700.0, 187.5, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
            r0_rect: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            tr_velo_to_cam: [
                [0.0, -1.0, 0.0, 0.0],
                [0.0, 0.0, -1.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
            ],
        }
    }

    /// LiDAR frame to rectified camera frame.
    pub fn lidar_to_rect(&self, p: [f64; 3]) -> [f64; 3] {
        let t = &self.tr_velo_to_cam;
        let cam = [
            t[0][0] * p[0] + t[0][1] * p[1] + t[0][2] * p[2] + t[0][3],
            t[1][0] * p[0] + t[1][1] * p[1] + t[1][2] * p[2] + t[1][3],
            t[2][0] * p[0] + t[2][1] * p[1] + t[2][2] * p[2] + t[2][3],
        ];
        let r = &self.r0_rect;
        [
            r[0][0] * cam[0] + r[0][1] * cam[1] + r[0][2] * cam[2],
            r[1][0] * cam[0] + r[1][1] * cam[1] + r[1][2] * cam[2],
            r[2][0] * cam[0] + r[2][1] * cam[1] + r[2][2] * cam[2],
        ]
    }

    /// Rectified camera frame back to LiDAR frame (both rotation blocks are
    /// orthonormal, so transposes invert them).
    pub fn rect_to_lidar(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.r0_rect;
        let cam = [
            r[0][0] * p[0] + r[1][0] * p[1] + r[2][0] * p[2],
            r[0][1] * p[0] + r[1][1] * p[1] + r[2][1] * p[2],
            r[0][2] * p[0] + r[1][2] * p[1] + r[2][2] * p[2],
        ];
        let t = &self.tr_velo_to_cam;
        let d = [cam[0] - t[0][3], cam[1] - t[1][3], cam[2] - t[2][3]];
        [
            t[0][0] * d[0] + t[1][0] * d[1] + t[2][0] * d[2],
            t[0][1] * d[0] + t[1][1] * d[1] + t[2][1] * d[2],
            t[0][2] * d[0] + t[1][2] * d[1] + t[2][2] * d[2],
        ]
    }
}

/// One row of a KITTI object label file. `DontCare` rows are retained with
/// the flag set; they only suppress false positives during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub class_name: String,
    /// Fraction of the object leaving image boundaries, in [0, 1].
    pub truncation: f64,
    /// 0 = fully visible, 1 = partly occluded, 2 = largely occluded, 3 = unknown.
    pub occlusion: i32,
    /// Observation angle, radians.
    pub alpha: f64,
    /// (left, top, right, bottom) pixels.
    pub bbox2d: [f64; 4],
    /// (h, w, l) meters.
    pub dimensions: [f64; 3],
    /// Bottom-face center in the rectified camera frame, meters.
    pub location: [f64; 3],
    /// Rotation about the camera y-axis, radians.
    pub rotation_y: f64,
    /// Present on detection rows (16th field).
    pub score: Option<f64>,
    pub dont_care: bool,
}

impl GroundTruthObject {
    pub fn bbox_height(&self) -> f64 {
        self.bbox2d[3] - self.bbox2d[1]
    }

    /// Detection-benchmark class for this row, if it names one.
    pub fn kitti_class(&self) -> Option<crate::fusion::KittiClass> {
        use crate::fusion::KittiClass::*;
        match self.class_name.as_str() {
            "Car" => Some(Car),
            "Pedestrian" => Some(Pedestrian),
            "Cyclist" => Some(Cyclist),
            _ => None,
        }
    }
}

/// Errors shared by every parser and writer in this module.
#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("truncated file: {len} bytes is not a multiple of the {stride}-byte record")]
    TruncatedFile { len: usize, stride: usize },
    #[error("non-finite value in record {index}")]
    NonFiniteValue { index: usize },
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("missing calibration key {key}")]
    MissingKey { key: &'static str },
    #[error("malformed matrix {key}: {reason}")]
    MalformedMatrix { key: &'static str, reason: String },
    #[error("detection {index} has no score")]
    MissingScore { index: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_word_split() {
        let l = SemanticLabel::from_word(0x0001_000A);
        assert_eq!(l.semantic_id, 10);
        assert_eq!(l.instance_id, 1);

        let l = SemanticLabel::from_word(0);
        assert_eq!((l.semantic_id, l.instance_id), (0, 0));

        let l = SemanticLabel::from_word(0x0002_0000);
        assert_eq!((l.semantic_id, l.instance_id), (0, 2));
    }

    #[test]
    fn label_word_bijection() {
        for word in [0u32, 1, 0xFFFF, 0x1_0000, 0xDEAD_BEEF, u32::MAX] {
            assert_eq!(SemanticLabel::from_word(word).to_word(), word);
        }
    }

    #[test]
    fn rect_lidar_round_trip() {
        let calib = Calibration::nominal();
        for p in [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [-4.0, 10.0, -1.5]] {
            let q = calib.rect_to_lidar(calib.lidar_to_rect(p));
            for k in 0..3 {
                assert!((q[k] - p[k]).abs() < 1e-12);
            }
        }
    }
}
