//! Buffered voxel encoding with per-class occupancy caps.

use super::{cell_index, EncoderError, GridConfig};
use crate::fusion::{FusedPoint, FusedPointCloud};
use std::collections::HashMap;

/// One occupied voxel: its grid coordinate, the stored point feature rows,
/// and per-point local coordinates relative to the voxel's min corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Voxel {
    pub coord: [u32; 3],
    pub points: Vec<FusedPoint>,
    pub local: Vec<[f32; 3]>,
}

impl Voxel {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// Fixed-capacity voxel buffer in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub voxels: Vec<Voxel>,
    pub dropped_out_of_range: usize,
    /// Points arriving at a voxel already at its cap.
    pub dropped_voxel_full: usize,
    /// Points of cells that appeared after the buffer filled.
    pub dropped_buffer_full: usize,
}

impl VoxelGrid {
    pub fn retained_points(&self) -> usize {
        self.voxels.iter().map(Voxel::count).sum()
    }

    pub fn dropped_points(&self) -> usize {
        self.dropped_out_of_range + self.dropped_voxel_full + self.dropped_buffer_full
    }
}

/// Assign points to voxels first-come in point order. The buffer holds at
/// most `max_voxels` voxels; each voxel stores at most its class cap of
/// points (the cap of its first point's class when a per-class table is
/// configured). Local coordinates are the offsets from the voxel min corner.
pub fn voxelize(fpc: &FusedPointCloud, cfg: &GridConfig) -> Result<VoxelGrid, EncoderError> {
    cfg.validate()?;
    let (nx, ny, nz) = cfg.voxel_grid_dims();

    const DROPPED: usize = usize::MAX;
    let mut cell_to_voxel: HashMap<[u32; 3], usize> = HashMap::new();
    let mut voxels: Vec<Voxel> = Vec::new();
    let mut caps: Vec<usize> = Vec::new();
    let mut dropped_out_of_range = 0usize;
    let mut dropped_voxel_full = 0usize;
    let mut dropped_buffer_full = 0usize;

    for p in &fpc.points {
        let (Some(ix), Some(iy), Some(iz)) = (
            cell_index(p.x, cfg.x_range.0, cfg.voxel_size.0, nx),
            cell_index(p.y, cfg.y_range.0, cfg.voxel_size.1, ny),
            cell_index(p.z, cfg.z_range.0, cfg.voxel_size.2, nz),
        ) else {
            dropped_out_of_range += 1;
            continue;
        };
        let coord = [ix, iy, iz];
        let slot = *cell_to_voxel.entry(coord).or_insert_with(|| {
            if voxels.len() < cfg.max_voxels {
                voxels.push(Voxel {
                    coord,
                    points: Vec::new(),
                    local: Vec::new(),
                });
                caps.push(match cfg.max_points_per_voxel_by_class {
                    Some(table) => table[p.argmax_class().index()],
                    None => cfg.max_points_per_voxel,
                });
                voxels.len() - 1
            } else {
                DROPPED
            }
        });
        if slot == DROPPED {
            dropped_buffer_full += 1;
            continue;
        }
        if voxels[slot].count() >= caps[slot] {
            dropped_voxel_full += 1;
            continue;
        }
        let min_x = cfg.x_range.0 as f64 + ix as f64 * cfg.voxel_size.0 as f64;
        let min_y = cfg.y_range.0 as f64 + iy as f64 * cfg.voxel_size.1 as f64;
        let min_z = cfg.z_range.0 as f64 + iz as f64 * cfg.voxel_size.2 as f64;
        voxels[slot].points.push(*p);
        voxels[slot].local.push([
            (p.x as f64 - min_x) as f32,
            (p.y as f64 - min_y) as f32,
            (p.z as f64 - min_z) as f32,
        ]);
    }

    Ok(VoxelGrid {
        voxels,
        dropped_out_of_range,
        dropped_voxel_full,
        dropped_buffer_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GridConfig {
        GridConfig {
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            z_range: (0.0, 1.0),
            voxel_size: (0.1, 0.1, 0.1),
            max_voxels: 100,
            max_points_per_voxel: 5,
            ..GridConfig::default()
        }
    }

    fn pt(x: f32, y: f32, z: f32, class: usize) -> FusedPoint {
        let mut sem = [0.0; 4];
        sem[class] = 1.0;
        FusedPoint { x, y, z, r: 0.5, sem }
    }

    #[test]
    fn single_point_local_coords() {
        let grid = voxelize(
            &FusedPointCloud {
                points: vec![pt(0.05, 0.05, 0.05, 1)],
            },
            &cfg(),
        )
        .unwrap();
        assert_eq!(grid.voxels.len(), 1);
        assert_eq!(grid.voxels[0].coord, [0, 0, 0]);
        for (k, v) in grid.voxels[0].local[0].iter().enumerate() {
            assert!((v - 0.05).abs() < 1e-6, "axis {k}: {v}");
        }
    }

    #[test]
    fn buffer_cap_drops_later_cells() {
        let grid = voxelize(
            &FusedPointCloud {
                points: vec![pt(0.05, 0.05, 0.05, 1), pt(0.55, 0.55, 0.55, 1)],
            },
            &GridConfig {
                max_voxels: 1,
                ..cfg()
            },
        )
        .unwrap();
        assert_eq!(grid.voxels.len(), 1);
        assert_eq!(grid.dropped_buffer_full, 1);
        assert_eq!(grid.retained_points() + grid.dropped_points(), 2);
    }

    #[test]
    fn voxel_point_cap() {
        let points: Vec<FusedPoint> = (0..8).map(|i| pt(0.01 + i as f32 * 0.005, 0.05, 0.05, 1)).collect();
        let grid = voxelize(&FusedPointCloud { points }, &cfg()).unwrap();
        assert_eq!(grid.voxels[0].count(), 5);
        assert_eq!(grid.dropped_voxel_full, 3);
    }

    #[test]
    fn per_class_caps_follow_first_point() {
        let table = Some([1, 3, 2, 2]);
        let cfg = GridConfig {
            max_points_per_voxel_by_class: table,
            ..cfg()
        };
        // First point is a car (class 1): cap 3.
        let points: Vec<FusedPoint> = (0..5).map(|i| pt(0.01 + i as f32 * 0.005, 0.05, 0.05, 1)).collect();
        let grid = voxelize(&FusedPointCloud { points }, &cfg).unwrap();
        assert_eq!(grid.voxels[0].count(), 3);

        // First point unlabeled (class 0): cap 1.
        let points: Vec<FusedPoint> = (0..5)
            .map(|i| pt(0.01 + i as f32 * 0.005, 0.05, 0.05, if i == 0 { 0 } else { 1 }))
            .collect();
        let grid = voxelize(&FusedPointCloud { points }, &cfg).unwrap();
        assert_eq!(grid.voxels[0].count(), 1);
    }

    #[test]
    fn stored_points_inside_bounds_random() {
        let mut state = 11u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let points: Vec<FusedPoint> = (0..2000)
            .map(|_| {
                pt(
                    next() as f32 * 1.2 - 0.1,
                    next() as f32 * 1.2 - 0.1,
                    next() as f32 * 1.2 - 0.1,
                    1,
                )
            })
            .collect();
        let n = points.len();
        let cfg = cfg();
        let grid = voxelize(&FusedPointCloud { points }, &cfg).unwrap();
        assert_eq!(grid.retained_points() + grid.dropped_points(), n);
        for v in &grid.voxels {
            for local in &v.local {
                assert!(local[0] >= 0.0 && local[0] < cfg.voxel_size.0 + 1e-6);
                assert!(local[1] >= 0.0 && local[1] < cfg.voxel_size.1 + 1e-6);
                assert!(local[2] >= 0.0 && local[2] < cfg.voxel_size.2 + 1e-6);
            }
        }
    }

    #[test]
    fn features_copied_bit_exact() {
        let original = pt(0.123_456_7, 0.05, 0.05, 2);
        let grid = voxelize(
            &FusedPointCloud { points: vec![original] },
            &cfg(),
        )
        .unwrap();
        assert_eq!(grid.voxels[0].points[0], original);
    }
}
