//! Pillar tensor encoding and the pseudo-image scatter.

use super::{cell_index, EncoderError, GridConfig};
use crate::fusion::FusedPointCloud;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Per-point feature width of a fused pillar: the 9 baseline features
/// (x, y, z, r, xc, yc, zc, xp, yp) plus the 4-wide semantic block.
pub const PILLAR_DIM: usize = 13;

/// Dense (D, P, N) pillar tensor with occupancy bookkeeping.
///
/// `D` = [`PILLAR_DIM`], `P` = number of non-empty pillars (first-occurrence
/// order of cells in point order), `N` = configured max points per pillar.
/// Entries beyond `counts[p]` are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarTensor {
    pub feature_dim: usize,
    pub max_points: usize,
    /// (grid_ix, grid_iy) per pillar.
    pub coords: Vec<(u32, u32)>,
    pub counts: Vec<u32>,
    /// Row-major over (d, p, n).
    pub data: Vec<f32>,
    pub dropped_out_of_range: usize,
    pub dropped_pillar_overflow: usize,
    pub dropped_pillar_cap: usize,
}

impl PillarTensor {
    pub fn num_pillars(&self) -> usize {
        self.coords.len()
    }

    pub fn at(&self, d: usize, p: usize, n: usize) -> f32 {
        self.data[(d * self.num_pillars() + p) * self.max_points + n]
    }

    pub fn retained_points(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn dropped_points(&self) -> usize {
        self.dropped_out_of_range + self.dropped_pillar_overflow + self.dropped_pillar_cap
    }
}

/// Group a fused cloud into pillars and decorate each point with offsets from
/// the pillar mean (xc, yc, zc) and from the pillar's cell center (xp, yp).
///
/// Points outside the x/y range are dropped and counted. Pillars over the
/// point cap are randomly subsampled (seeded by `cfg.seed`, original point
/// order kept); pillars under it are zero-padded. Cells past `max_pillars`
/// are dropped whole.
pub fn pillarize(fpc: &FusedPointCloud, cfg: &GridConfig) -> Result<PillarTensor, EncoderError> {
    cfg.validate()?;
    let (nx, ny) = cfg.pillar_grid_dims();
    let cap = cfg.max_points_per_pillar;

    // Sentinel for cells that arrived after the pillar buffer filled.
    const DROPPED: usize = usize::MAX;
    let mut cell_to_pillar: HashMap<(u32, u32), usize> = HashMap::new();
    let mut coords: Vec<(u32, u32)> = Vec::new();
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut dropped_out_of_range = 0usize;
    let mut dropped_pillar_cap = 0usize;

    for (i, p) in fpc.points.iter().enumerate() {
        let (Some(ix), Some(iy)) = (
            cell_index(p.x, cfg.x_range.0, cfg.pillar_size.0, nx),
            cell_index(p.y, cfg.y_range.0, cfg.pillar_size.1, ny),
        ) else {
            dropped_out_of_range += 1;
            continue;
        };
        let slot = *cell_to_pillar.entry((ix, iy)).or_insert_with(|| {
            if coords.len() < cfg.max_pillars {
                coords.push((ix, iy));
                members.push(Vec::new());
                coords.len() - 1
            } else {
                DROPPED
            }
        });
        if slot == DROPPED {
            dropped_pillar_cap += 1;
        } else {
            members[slot].push(i as u32);
        }
    }

    // Subsample overfull pillars; kept indices stay in point order.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropped_pillar_overflow = 0usize;
    for m in &mut members {
        if m.len() > cap {
            dropped_pillar_overflow += m.len() - cap;
            let mut keep = rand::seq::index::sample(&mut rng, m.len(), cap).into_vec();
            keep.sort_unstable();
            *m = keep.into_iter().map(|k| m[k]).collect();
        }
    }

    let num_pillars = coords.len();
    let mut data = vec![0.0f32; PILLAR_DIM * num_pillars * cap];
    let mut counts = vec![0u32; num_pillars];
    let slot = |d: usize, p: usize, n: usize| (d * num_pillars + p) * cap + n;

    for (p_idx, m) in members.iter().enumerate() {
        counts[p_idx] = m.len() as u32;
        let mut mean = [0.0f64; 3];
        for &i in m {
            let pt = &fpc.points[i as usize];
            mean[0] += pt.x as f64;
            mean[1] += pt.y as f64;
            mean[2] += pt.z as f64;
        }
        for v in &mut mean {
            *v /= m.len() as f64;
        }
        let (ix, iy) = coords[p_idx];
        let center_x = cfg.x_range.0 as f64 + (ix as f64 + 0.5) * cfg.pillar_size.0 as f64;
        let center_y = cfg.y_range.0 as f64 + (iy as f64 + 0.5) * cfg.pillar_size.1 as f64;

        for (n, &i) in m.iter().enumerate() {
            let pt = &fpc.points[i as usize];
            data[slot(0, p_idx, n)] = pt.x;
            data[slot(1, p_idx, n)] = pt.y;
            data[slot(2, p_idx, n)] = pt.z;
            data[slot(3, p_idx, n)] = pt.r;
            data[slot(4, p_idx, n)] = (pt.x as f64 - mean[0]) as f32;
            data[slot(5, p_idx, n)] = (pt.y as f64 - mean[1]) as f32;
            data[slot(6, p_idx, n)] = (pt.z as f64 - mean[2]) as f32;
            data[slot(7, p_idx, n)] = (pt.x as f64 - center_x) as f32;
            data[slot(8, p_idx, n)] = (pt.y as f64 - center_y) as f32;
            for k in 0..4 {
                data[slot(9 + k, p_idx, n)] = pt.sem[k];
            }
        }
    }

    Ok(PillarTensor {
        feature_dim: PILLAR_DIM,
        max_points: cap,
        coords,
        counts,
        data,
        dropped_out_of_range,
        dropped_pillar_overflow,
        dropped_pillar_cap,
    })
}

/// Dense (C, H, W) grid of pooled pillar features; empty cells are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoImage {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major over (c, iy, ix).
    pub data: Vec<f32>,
}

impl PseudoImage {
    pub fn at(&self, c: usize, iy: usize, ix: usize) -> f32 {
        self.data[(c * self.height + iy) * self.width + ix]
    }
}

/// Scatter per-pillar pooled feature vectors to their grid cells. Pooling is
/// element-wise max over each pillar's occupied slots, standing in for the
/// learned per-pillar network, so `pooled_channels` must equal the tensor's
/// feature width.
pub fn scatter_to_pseudo_image(
    pt: &PillarTensor,
    pooled_channels: usize,
    cfg: &GridConfig,
) -> Result<PseudoImage, EncoderError> {
    cfg.validate()?;
    if pooled_channels != pt.feature_dim {
        return Err(EncoderError::InvalidConfig(format!(
            "pooled channel count {pooled_channels} != pillar feature width {}",
            pt.feature_dim
        )));
    }
    let (nx, ny) = cfg.pillar_grid_dims();
    let mut data = vec![0.0f32; pooled_channels * ny * nx];
    for (p, &(ix, iy)) in pt.coords.iter().enumerate() {
        if ix as usize >= nx || iy as usize >= ny {
            return Err(EncoderError::CoordOutOfRange {
                pillar: p,
                coord: (ix, iy),
            });
        }
        for c in 0..pooled_channels {
            let mut pooled = f32::NEG_INFINITY;
            for n in 0..pt.counts[p] as usize {
                pooled = pooled.max(pt.at(c, p, n));
            }
            if pt.counts[p] == 0 {
                pooled = 0.0;
            }
            data[(c * ny + iy as usize) * nx + ix as usize] = pooled;
        }
    }
    Ok(PseudoImage {
        channels: pooled_channels,
        height: ny,
        width: nx,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FusedPoint;

    fn small_cfg() -> GridConfig {
        GridConfig {
            x_range: (0.0, 1.6),
            y_range: (0.0, 1.6),
            pillar_size: (0.16, 0.16),
            max_pillars: 100,
            max_points_per_pillar: 4,
            ..GridConfig::default()
        }
    }

    fn fused(points: &[[f32; 8]]) -> FusedPointCloud {
        FusedPointCloud {
            points: points.iter().map(|&f| FusedPoint::from_features(f)).collect(),
        }
    }

    #[test]
    fn single_point_decoration() {
        let cfg = small_cfg();
        let fpc = fused(&[[0.1, 0.1, -1.0, 0.5, 0.0, 1.0, 0.0, 0.0]]);
        let pt = pillarize(&fpc, &cfg).unwrap();
        assert_eq!(pt.num_pillars(), 1);
        assert_eq!(pt.coords[0], (0, 0));
        assert_eq!(pt.counts[0], 1);
        let expect = [
            0.1, 0.1, -1.0, 0.5, // raw
            0.0, 0.0, 0.0, // mean offsets vanish for a lone point
            0.02, 0.02, // offsets from the (0.08, 0.08) cell center
            0.0, 1.0, 0.0, 0.0,
        ];
        for d in 0..PILLAR_DIM {
            assert!(
                (pt.at(d, 0, 0) - expect[d]).abs() < 1e-6,
                "feature {d}: {} vs {}",
                pt.at(d, 0, 0),
                expect[d]
            );
        }
        // Padding beyond the count is exactly zero.
        for d in 0..PILLAR_DIM {
            for n in 1..pt.max_points {
                assert_eq!(pt.at(d, 0, n), 0.0);
            }
        }
    }

    #[test]
    fn empty_cloud_empty_tensor() {
        let pt = pillarize(&fused(&[]), &small_cfg()).unwrap();
        assert_eq!(pt.num_pillars(), 0);
        assert_eq!(pt.dropped_points(), 0);
    }

    #[test]
    fn overfull_pillar_subsampled_to_cap() {
        let cfg = small_cfg();
        let pts: Vec<[f32; 8]> = (0..cfg.max_points_per_pillar + 3)
            .map(|i| [0.05, 0.05, i as f32 * 0.1, 0.5, 1.0, 0.0, 0.0, 0.0])
            .collect();
        let pt = pillarize(&fused(&pts), &cfg).unwrap();
        assert_eq!(pt.num_pillars(), 1);
        assert_eq!(pt.counts[0] as usize, cfg.max_points_per_pillar);
        assert_eq!(pt.dropped_pillar_overflow, 3);
        assert_eq!(pt.retained_points() + pt.dropped_points(), pts.len());
    }

    #[test]
    fn out_of_range_points_counted() {
        let cfg = small_cfg();
        let fpc = fused(&[
            [-0.1, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
            [0.5, 2.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
        ]);
        let pt = pillarize(&fpc, &cfg).unwrap();
        assert_eq!(pt.dropped_out_of_range, 2);
        assert_eq!(pt.retained_points(), 1);
    }

    #[test]
    fn pillar_cap_drops_whole_cells() {
        let cfg = GridConfig {
            max_pillars: 1,
            ..small_cfg()
        };
        let fpc = fused(&[
            [0.05, 0.05, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
            [0.55, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0],
        ]);
        let pt = pillarize(&fpc, &cfg).unwrap();
        assert_eq!(pt.num_pillars(), 1);
        assert_eq!(pt.coords[0], (0, 0));
        assert_eq!(pt.dropped_pillar_cap, 2);
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = small_cfg();
        let pts: Vec<[f32; 8]> = (0..40)
            .map(|i| {
                let t = i as f32;
                [
                    (t * 0.037) % 1.6,
                    (t * 0.071) % 1.6,
                    t * 0.01,
                    0.5,
                    0.0,
                    1.0,
                    0.0,
                    0.0,
                ]
            })
            .collect();
        let fpc = fused(&pts);
        let a = pillarize(&fpc, &cfg).unwrap();
        let b = pillarize(&fpc, &cfg).unwrap();
        assert_eq!(a, b);

        let other = pillarize(&fpc, &GridConfig { seed: 1, ..cfg }).unwrap();
        // Same grouping, same counts; only the subsample may differ.
        assert_eq!(a.coords, other.coords);
        assert_eq!(a.counts, other.counts);
    }

    #[test]
    fn scatter_places_single_pillar() {
        let cfg = small_cfg();
        let fpc = fused(&[[3.0 * 0.16 + 0.01, 4.0 * 0.16 + 0.01, 0.3, 0.5, 1.0, 0.0, 0.0, 0.0]]);
        let pt = pillarize(&fpc, &cfg).unwrap();
        assert_eq!(pt.coords[0], (3, 4));
        let img = scatter_to_pseudo_image(&pt, PILLAR_DIM, &cfg).unwrap();
        let (nx, ny) = cfg.pillar_grid_dims();
        assert_eq!((img.width, img.height), (nx, ny));
        for c in 0..img.channels {
            for iy in 0..ny {
                for ix in 0..nx {
                    if (ix, iy) != (3, 4) {
                        assert_eq!(img.at(c, iy, ix), 0.0);
                    }
                }
            }
        }
        assert_eq!(img.at(2, 4, 3), 0.3);
    }

    #[test]
    fn scatter_zero_pillars_zero_grid() {
        let cfg = small_cfg();
        let pt = pillarize(&fused(&[]), &cfg).unwrap();
        let img = scatter_to_pseudo_image(&pt, PILLAR_DIM, &cfg).unwrap();
        assert!(img.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scatter_conserves_pooled_sums() {
        let cfg = small_cfg();
        let pts: Vec<[f32; 8]> = (0..60)
            .map(|i| {
                let t = i as f32 * 0.611;
                [t % 1.6, (t * 1.3) % 1.6, (t % 2.0) - 1.0, 0.5, 0.0, 0.0, 1.0, 0.0]
            })
            .collect();
        let pt = pillarize(&fused(&pts), &cfg).unwrap();
        let img = scatter_to_pseudo_image(&pt, PILLAR_DIM, &cfg).unwrap();
        let grid_sum: f64 = img.data.iter().map(|&v| v as f64).sum();
        let mut pooled_sum = 0.0f64;
        for p in 0..pt.num_pillars() {
            for c in 0..PILLAR_DIM {
                let mut m = f32::NEG_INFINITY;
                for n in 0..pt.counts[p] as usize {
                    m = m.max(pt.at(c, p, n));
                }
                pooled_sum += m as f64;
            }
        }
        assert!((grid_sum - pooled_sum).abs() < 1e-6);
    }

    #[test]
    fn scatter_rejects_foreign_coords() {
        let cfg = small_cfg();
        let fpc = fused(&[[1.5, 1.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0]]);
        let pt = pillarize(&fpc, &cfg).unwrap();
        // Shrink the grid so the recorded coordinate no longer fits.
        let tiny = GridConfig {
            x_range: (0.0, 0.32),
            y_range: (0.0, 0.32),
            ..cfg
        };
        assert!(matches!(
            scatter_to_pseudo_image(&pt, PILLAR_DIM, &tiny),
            Err(EncoderError::CoordOutOfRange { .. })
        ));
    }
}
