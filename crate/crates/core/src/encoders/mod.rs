//! Detector input encodings for fused point clouds, plus the box-regression
//! target codecs.
//!
//! Every encoder only groups, decorates, and pads: feature values of retained
//! points are copied bit-exactly, dropped points are counted, and zero
//! padding fills slots beyond each cell's count. Under a fixed config seed
//! the outputs are bit-identical across runs.

mod boxcodec;
mod cylinder;
mod dump;
mod pillar;
mod voxel;

pub use boxcodec::{
    anchor_residual_decode, anchor_residual_encode, bin_decode_center, bin_encode_center,
    num_bins, BinEncoding,
};
pub use cylinder::{cyl_partition, CylCell, CylinderGrid};
pub use dump::{parse_tensor_dump, write_tensor_dump, TensorDump};
pub use pillar::{pillarize, scatter_to_pseudo_image, PillarTensor, PseudoImage, PILLAR_DIM};
pub use voxel::{voxelize, Voxel, VoxelGrid};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grid geometry and capacity settings for all three encoders.
///
/// Defaults follow the usual published KITTI settings: 0.16 m pillars over
/// x in [0, 69.12], y in [-39.68, 39.68]; 0.05 x 0.05 x 0.1 m voxels over
/// z in [-3, 1]; a 480 x 360 x 32 cylindrical grid over rho in [0, 50],
/// z in [-4, 2].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GridConfig {
    pub x_range: (f32, f32),
    pub y_range: (f32, f32),
    pub z_range: (f32, f32),
    /// Pillar footprint (dx, dy) in meters.
    pub pillar_size: (f32, f32),
    pub max_pillars: usize,
    pub max_points_per_pillar: usize,
    /// Voxel size (dx, dy, dz) in meters.
    pub voxel_size: (f32, f32, f32),
    pub max_voxels: usize,
    pub max_points_per_voxel: usize,
    /// Optional per-class caps indexed by [unlabeled, car, pedestrian,
    /// cyclist]; a voxel's cap is the cap of its first point's class.
    pub max_points_per_voxel_by_class: Option<[usize; 4]>,
    pub rho_range: (f32, f32),
    pub rho_res: f32,
    /// Azimuthal resolution in radians.
    pub phi_res: f32,
    pub cyl_z_range: (f32, f32),
    pub cyl_z_res: f32,
    /// Bin search range S for center regression, meters per axis.
    pub bin_search_range: f64,
    /// Bin size delta, meters.
    pub bin_size: f64,
    /// Seed for pillar subsampling.
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_range: (0.0, 69.12),
            y_range: (-39.68, 39.68),
            z_range: (-3.0, 1.0),
            pillar_size: (0.16, 0.16),
            max_pillars: 12000,
            max_points_per_pillar: 100,
            voxel_size: (0.05, 0.05, 0.1),
            max_voxels: 16000,
            max_points_per_voxel: 5,
            max_points_per_voxel_by_class: None,
            rho_range: (0.0, 50.0),
            rho_res: 50.0 / 480.0,
            phi_res: std::f32::consts::TAU / 360.0,
            cyl_z_range: (-4.0, 2.0),
            cyl_z_res: 6.0 / 32.0,
            bin_search_range: 3.0,
            bin_size: 0.5,
            seed: 0,
        }
    }
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self, EncoderError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| EncoderError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("GridConfig serializes")
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let ranges = [
            ("x_range", self.x_range),
            ("y_range", self.y_range),
            ("z_range", self.z_range),
            ("rho_range", self.rho_range),
            ("cyl_z_range", self.cyl_z_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(EncoderError::InvalidConfig(format!(
                    "{name} must be a non-degenerate finite interval, got ({lo}, {hi})"
                )));
            }
        }
        let resolutions = [
            ("pillar_size.0", self.pillar_size.0),
            ("pillar_size.1", self.pillar_size.1),
            ("voxel_size.0", self.voxel_size.0),
            ("voxel_size.1", self.voxel_size.1),
            ("voxel_size.2", self.voxel_size.2),
            ("rho_res", self.rho_res),
            ("phi_res", self.phi_res),
            ("cyl_z_res", self.cyl_z_res),
        ];
        for (name, res) in resolutions {
            if !(res.is_finite() && res > 0.0) {
                return Err(EncoderError::InvalidConfig(format!(
                    "{name} must be positive, got {res}"
                )));
            }
        }
        let caps = [
            ("max_pillars", self.max_pillars),
            ("max_points_per_pillar", self.max_points_per_pillar),
            ("max_voxels", self.max_voxels),
            ("max_points_per_voxel", self.max_points_per_voxel),
        ];
        for (name, cap) in caps {
            if cap == 0 {
                return Err(EncoderError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if let Some(table) = self.max_points_per_voxel_by_class {
            if table.contains(&0) {
                return Err(EncoderError::InvalidConfig(
                    "per-class voxel caps must be > 0".to_string(),
                ));
            }
        }
        if !(self.bin_search_range > 0.0 && self.bin_size > 0.0) {
            return Err(EncoderError::InvalidConfig(
                "bin search range and bin size must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// Pillar grid extent (nx, ny).
    pub fn pillar_grid_dims(&self) -> (usize, usize) {
        (
            cell_count(self.x_range, self.pillar_size.0),
            cell_count(self.y_range, self.pillar_size.1),
        )
    }

    /// Voxel grid extent (nx, ny, nz).
    pub fn voxel_grid_dims(&self) -> (usize, usize, usize) {
        (
            cell_count(self.x_range, self.voxel_size.0),
            cell_count(self.y_range, self.voxel_size.1),
            cell_count(self.z_range, self.voxel_size.2),
        )
    }

    /// Cylindrical grid extent (n_rho, n_phi, n_z). The phi axis always
    /// covers the full circle.
    pub fn cyl_grid_dims(&self) -> (usize, usize, usize) {
        let n_phi = (std::f64::consts::TAU / self.phi_res as f64).round().max(1.0) as usize;
        (
            cell_count(self.rho_range, self.rho_res),
            n_phi,
            cell_count(self.cyl_z_range, self.cyl_z_res),
        )
    }
}

/// Number of cells covering a range at the given resolution (rounded so that
/// exact configs like 69.12 / 0.16 stay exact).
fn cell_count(range: (f32, f32), res: f32) -> usize {
    (((range.1 - range.0) as f64 / res as f64).round()).max(1.0) as usize
}

/// Half-open cell index of a coordinate, or `None` when it falls outside
/// [min, min + n*res).
fn cell_index(value: f32, min: f32, res: f32, n: usize) -> Option<u32> {
    let idx = ((value as f64 - min as f64) / res as f64).floor();
    if idx < 0.0 || idx >= n as f64 {
        None
    } else {
        Some(idx as u32)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("pillar {pillar} coordinate {coord:?} outside the configured grid")]
    CoordOutOfRange { pillar: usize, coord: (u32, u32) },
    #[error("{axis} offset {offset} exceeds the search range {limit}")]
    Overflow {
        axis: &'static str,
        offset: f64,
        limit: f64,
    },
    #[error("anchor box has a degenerate diagonal or height")]
    DegenerateAnchor,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_dims() {
        let cfg = GridConfig::default();
        assert_eq!(cfg.pillar_grid_dims(), (432, 496));
        assert_eq!(cfg.cyl_grid_dims(), (480, 360, 32));
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = GridConfig {
            max_pillars: 77,
            seed: 42,
            ..GridConfig::default()
        };
        let parsed = GridConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = GridConfig::from_toml("max_pillars = 9\nseed = 3\n").unwrap();
        assert_eq!(cfg.max_pillars, 9);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.pillar_size, GridConfig::default().pillar_size);
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        let mut cfg = GridConfig::default();
        cfg.x_range = (5.0, 5.0);
        assert!(matches!(cfg.validate(), Err(EncoderError::InvalidConfig(_))));

        let mut cfg = GridConfig::default();
        cfg.pillar_size.0 = 0.0;
        assert!(matches!(cfg.validate(), Err(EncoderError::InvalidConfig(_))));
    }

    #[test]
    fn half_open_cells() {
        // Points on a boundary belong to the upper cell; the top edge is out.
        assert_eq!(cell_index(0.0, 0.0, 0.5, 4), Some(0));
        assert_eq!(cell_index(0.5, 0.0, 0.5, 4), Some(1));
        assert_eq!(cell_index(2.0, 0.0, 0.5, 4), None);
        assert_eq!(cell_index(-0.01, 0.0, 0.5, 4), None);
    }
}
