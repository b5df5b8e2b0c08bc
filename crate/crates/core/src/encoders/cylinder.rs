//! Cylindrical partitioning. Radial cells grow with distance, which spreads
//! sparse far-field returns across cells far more evenly than a Cartesian
//! grid.

use super::{EncoderError, GridConfig};
use crate::fusion::FusedPointCloud;
use crate::geometry::cart_to_cyl;
use std::collections::HashMap;

/// One occupied cylindrical cell (rho bin, phi bin, z bin) holding indices
/// into the source cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CylCell {
    pub coord: [u32; 3],
    pub point_indices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderGrid {
    pub cells: Vec<CylCell>,
    /// (n_rho, n_phi, n_z).
    pub bins: (usize, usize, usize),
    pub dropped_out_of_range: usize,
}

impl CylinderGrid {
    pub fn retained_points(&self) -> usize {
        self.cells.iter().map(|c| c.point_indices.len()).sum()
    }
}

/// Partition points into (rho, phi, z) cells. The phi axis wraps at the +-pi
/// seam, so every finite point has a valid phi bin; rho and z outside their
/// ranges are dropped and counted.
pub fn cyl_partition(fpc: &FusedPointCloud, cfg: &GridConfig) -> Result<CylinderGrid, EncoderError> {
    cfg.validate()?;
    let (n_rho, n_phi, n_z) = cfg.cyl_grid_dims();

    let mut cell_slots: HashMap<[u32; 3], usize> = HashMap::new();
    let mut cells: Vec<CylCell> = Vec::new();
    let mut dropped = 0usize;

    for (i, p) in fpc.points.iter().enumerate() {
        let cyl = cart_to_cyl([p.x as f64, p.y as f64, p.z as f64]);
        let rho_bin = ((cyl.rho - cfg.rho_range.0 as f64) / cfg.rho_res as f64).floor();
        let z_bin = ((p.z as f64 - cfg.cyl_z_range.0 as f64) / cfg.cyl_z_res as f64).floor();
        if rho_bin < 0.0 || rho_bin >= n_rho as f64 || z_bin < 0.0 || z_bin >= n_z as f64 {
            dropped += 1;
            continue;
        }
        let phi_bin =
            (((cyl.phi + std::f64::consts::PI) / cfg.phi_res as f64).floor() as i64).rem_euclid(n_phi as i64);
        let coord = [rho_bin as u32, phi_bin as u32, z_bin as u32];
        let slot = *cell_slots.entry(coord).or_insert_with(|| {
            cells.push(CylCell {
                coord,
                point_indices: Vec::new(),
            });
            cells.len() - 1
        });
        cells[slot].point_indices.push(i as u32);
    }

    Ok(CylinderGrid {
        cells,
        bins: (n_rho, n_phi, n_z),
        dropped_out_of_range: dropped,
    })
}
