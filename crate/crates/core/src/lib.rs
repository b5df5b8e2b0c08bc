//! Deterministic data plane for semantic-segmentation-driven LiDAR 3D object
//! detection.
//!
//! The crate covers everything around the neural networks of such a pipeline,
//! which enter and leave as files:
//!
//! - [`kitti_io`]: bit-exact readers/writers for KITTI-style scans, semantic
//!   labels, object labels, calibration, and fused clouds.
//! - [`fusion`]: per-point semantic feature concatenation (one-hot label mode
//!   and softmax score mode) with a configurable class map.
//! - [`geometry`]: coordinate transforms, oriented 3D boxes, and rotated IoU
//!   in BEV and 3D.
//! - [`encoders`]: pillar / voxel / cylindrical detector input encodings and
//!   box-regression target codecs.
//! - [`augment`]: ground-truth database sampling and global/per-box scene
//!   augmentation with collision revert.
//! - [`losses`]: gradient-checked loss numerics usable as a verification
//!   oracle for training code.
//! - [`eval`]: the KITTI 3D/BEV Average-Precision evaluation protocol.
//!
//! Everything is seed-deterministic: identical inputs, configs, and seeds
//! produce bit-identical outputs.

pub mod augment;
pub mod encoders;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod kitti_io;
pub mod losses;
pub mod seed;

pub use fusion::{FusedPoint, FusedPointCloud, KittiClass};
pub use geometry::Box3D;
pub use kitti_io::{Point, PointCloud};
