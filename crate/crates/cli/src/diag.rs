//! Projection-mismatch diagnostics.
//!
//! Semantic labels live on points; associating them with image pixels goes
//! through the LiDAR-camera calibration. This module rasterizes point labels
//! into a sparse pixel map (nearest depth wins), then measures how often a
//! pixel lookup returns a *different* label than the point itself carries
//! once the calibration is perturbed - the projection-sensitivity failure
//! mode of pixel-wise fusion.

use rand::Rng;
use semfuse::geometry::{project_lidar_to_image, Projection};
use semfuse::kitti_io::{Calibration, PointCloud, SemanticLabelMap};
use std::collections::HashMap;

/// Sparse pixel -> (semantic id, depth) map.
#[derive(Debug, Default)]
pub struct LabelRaster {
    pub cells: HashMap<(i64, i64), (u16, f64)>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct RasterStats {
    pub in_image: usize,
    pub behind: usize,
    pub outside: usize,
}

fn pixel_of(
    p: [f64; 3],
    calib: &Calibration,
    width: u32,
    height: u32,
) -> Result<Option<(i64, i64, f64)>, ()> {
    match project_lidar_to_image(p, calib) {
        Projection::Behind => Err(()),
        Projection::Pixel { u, v, depth } => {
            let (iu, iv) = (u.floor() as i64, v.floor() as i64);
            if iu < 0 || iv < 0 || iu >= width as i64 || iv >= height as i64 {
                Ok(None)
            } else {
                Ok(Some((iu, iv, depth)))
            }
        }
    }
}

/// Project every labeled point with the reference calibration; the nearest
/// point claims each pixel.
pub fn rasterize(
    cloud: &PointCloud,
    labels: &SemanticLabelMap,
    calib: &Calibration,
    width: u32,
    height: u32,
) -> (LabelRaster, RasterStats) {
    let mut raster = LabelRaster::default();
    let mut stats = RasterStats::default();
    for (p, l) in cloud.points.iter().zip(&labels.entries) {
        match pixel_of([p.x as f64, p.y as f64, p.z as f64], calib, width, height) {
            Err(()) => stats.behind += 1,
            Ok(None) => stats.outside += 1,
            Ok(Some((iu, iv, depth))) => {
                stats.in_image += 1;
                let cell = raster.cells.entry((iu, iv)).or_insert((l.semantic_id, depth));
                if depth < cell.1 {
                    *cell = (l.semantic_id, depth);
                }
            }
        }
    }
    (raster, stats)
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlipStats {
    pub flips: usize,
    pub lookups: usize,
}

impl FlipStats {
    pub fn rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.flips as f64 / self.lookups as f64
        }
    }
}

/// Re-project points with a (jittered) calibration and look their labels up
/// in the reference raster; count label disagreements.
pub fn label_flip_rate(
    cloud: &PointCloud,
    labels: &SemanticLabelMap,
    raster: &LabelRaster,
    calib: &Calibration,
    width: u32,
    height: u32,
) -> FlipStats {
    let mut stats = FlipStats::default();
    for (p, l) in cloud.points.iter().zip(&labels.entries) {
        if let Ok(Some((iu, iv, _))) =
            pixel_of([p.x as f64, p.y as f64, p.z as f64], calib, width, height)
        {
            if let Some(&(pixel_label, _)) = raster.cells.get(&(iu, iv)) {
                stats.lookups += 1;
                if pixel_label != l.semantic_id {
                    stats.flips += 1;
                }
            }
        }
    }
    stats
}

fn rotation_xyz(rx: f64, ry: f64, rz: f64) -> [[f64; 3]; 3] {
    let (sx, cx) = rx.sin_cos();
    let (sy, cy) = ry.sin_cos();
    let (sz, cz) = rz.sin_cos();
    // Rz * Ry * Rx.
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

/// Perturb the LiDAR-to-camera extrinsics: compose a random small rotation
/// (angles uniform in +-magnitude radians) and add a random translation
/// (uniform in +-magnitude meters).
pub fn jitter_calibration(calib: &Calibration, magnitude: f64, rng: &mut impl Rng) -> Calibration {
    if magnitude == 0.0 {
        return calib.clone();
    }
    let rx = rng.random_range(-magnitude..=magnitude);
    let ry = rng.random_range(-magnitude..=magnitude);
    let rz = rng.random_range(-magnitude..=magnitude);
    let j = rotation_xyz(rx, ry, rz);
    let t_j = [
        rng.random_range(-magnitude..=magnitude),
        rng.random_range(-magnitude..=magnitude),
        rng.random_range(-magnitude..=magnitude),
    ];
    let tr = &calib.tr_velo_to_cam;
    let mut out = calib.clone();
    for i in 0..3 {
        for c in 0..3 {
            out.tr_velo_to_cam[i][c] =
                j[i][0] * tr[0][c] + j[i][1] * tr[1][c] + j[i][2] * tr[2][c];
        }
        out.tr_velo_to_cam[i][3] =
            j[i][0] * tr[0][3] + j[i][1] * tr[1][3] + j[i][2] * tr[2][3] + t_j[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use semfuse::kitti_io::{Point, SemanticLabel};
    use semfuse::seed::frame_rng;

    /// A flat wall of abutting 1 m label stripes. Point spacing is ~1.2
    /// pixels, so no two points share a pixel (zero jitter means zero flips)
    /// while any sub-stripe shift flips lookups near stripe boundaries in
    /// proportion to its size.
    pub(crate) fn striped_wall_scene() -> (PointCloud, SemanticLabelMap) {
        let mut points = Vec::new();
        let mut entries = Vec::new();
        let step = 0.0343f32;
        let (n_y, n_z) = ((16.0 / step) as usize, (2.0 / step) as usize);
        for i in 0..n_y {
            let y = -8.0 + i as f32 * step;
            let stripe = (y + 8.0).floor() as i32;
            let semantic_id = if stripe % 2 == 0 { 10 } else { 30 };
            for k in 0..n_z {
                points.push(Point {
                    x: 20.0,
                    y,
                    z: -1.0 + k as f32 * step,
                    r: 0.5,
                });
                entries.push(SemanticLabel {
                    semantic_id,
                    instance_id: 0,
                });
            }
        }
        (PointCloud { points }, SemanticLabelMap { entries })
    }

    #[test]
    fn zero_jitter_zero_flips() {
        let calib = Calibration::nominal();
        let (cloud, labels) = striped_wall_scene();
        let (raster, stats) = rasterize(&cloud, &labels, &calib, 1242, 375);
        assert!(stats.in_image > 0);
        assert_eq!(stats.behind, 0);
        let flips = label_flip_rate(&cloud, &labels, &raster, &calib, 1242, 375);
        assert_eq!(flips.flips, 0);
        assert!(flips.lookups > 0);
    }

    #[test]
    fn behind_camera_points_counted() {
        let calib = Calibration::nominal();
        let cloud = PointCloud {
            points: vec![Point { x: -5.0, y: 0.0, z: 0.0, r: 0.5 }],
        };
        let labels = SemanticLabelMap {
            entries: vec![SemanticLabel { semantic_id: 10, instance_id: 0 }],
        };
        let (_, stats) = rasterize(&cloud, &labels, &calib, 1242, 375);
        assert_eq!(stats.behind, 1);
        assert_eq!(stats.in_image, 0);
    }

    #[test]
    fn flip_rate_monotone_in_jitter() {
        let calib = Calibration::nominal();
        let (cloud, labels) = striped_wall_scene();
        let (raster, _) = rasterize(&cloud, &labels, &calib, 1242, 375);
        let mut rates = Vec::new();
        // One stream per frame, restarted per magnitude: the perturbation
        // direction is fixed and only its size scales.
        for magnitude in [0.0, 0.005, 0.02] {
            let mut rng = frame_rng(17, "jitter");
            let jittered = jitter_calibration(&calib, magnitude, &mut rng);
            rates.push(label_flip_rate(&cloud, &labels, &raster, &jittered, 1242, 375).rate());
        }
        assert_eq!(rates[0], 0.0);
        assert!(rates[0] <= rates[1] && rates[1] <= rates[2], "{rates:?}");
        assert!(rates[2] > 0.0);
    }

    #[test]
    fn jitter_keeps_rotation_orthonormal() {
        let calib = Calibration::nominal();
        let jittered = jitter_calibration(&calib, 0.05, &mut frame_rng(3, "ortho"));
        let r = &jittered.tr_velo_to_cam;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }
}

