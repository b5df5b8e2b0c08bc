//! Monte-Carlo IoU oracles.
//!
//! Containment is tested straight from the box parameters (rotate the sample
//! into the box frame and compare against the half-extents), so these
//! estimates share no code with the polygon-clipping implementation they
//! check.

use rand::Rng;
use semfuse::Box3D;

/// True when (x, y) lies in the box footprint.
fn in_footprint(b: &Box3D, x: f64, y: f64) -> bool {
    let (sin, cos) = b.yaw.sin_cos();
    let dx = x - b.center[0];
    let dy = y - b.center[1];
    let along = cos * dx + sin * dy;
    let across = -sin * dx + cos * dy;
    along.abs() <= b.size[2] * 0.5 && across.abs() <= b.size[0] * 0.5
}

fn footprint_aabb(b: &Box3D) -> [f64; 4] {
    let (hw, hl) = (b.size[0] * 0.5, b.size[2] * 0.5);
    let (sin, cos) = b.yaw.sin_cos();
    let ex = (cos * hl).abs() + (sin * hw).abs();
    let ey = (sin * hl).abs() + (cos * hw).abs();
    [
        b.center[0] - ex,
        b.center[1] - ey,
        b.center[0] + ex,
        b.center[1] + ey,
    ]
}

/// Estimate the BEV IoU of two boxes by sampling `samples` points uniformly
/// over the intersection of the footprint bounding boxes. Footprint areas
/// are exact; only the intersection is estimated.
pub fn mc_bev_iou(a: &Box3D, b: &Box3D, samples: usize, rng: &mut impl Rng) -> f64 {
    let ra = footprint_aabb(a);
    let rb = footprint_aabb(b);
    let lo_x = ra[0].max(rb[0]);
    let lo_y = ra[1].max(rb[1]);
    let hi_x = ra[2].min(rb[2]);
    let hi_y = ra[3].min(rb[3]);
    let area_a = a.size[0] * a.size[2];
    let area_b = b.size[0] * b.size[2];
    if lo_x >= hi_x || lo_y >= hi_y {
        return 0.0;
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.random_range(lo_x..hi_x);
        let y = rng.random_range(lo_y..hi_y);
        if in_footprint(a, x, y) && in_footprint(b, x, y) {
            hits += 1;
        }
    }
    let inter = hits as f64 / samples as f64 * (hi_x - lo_x) * (hi_y - lo_y);
    inter / (area_a + area_b - inter)
}

/// Estimate the 3D IoU by volume sampling over the intersection of the two
/// axis-aligned bounding boxes.
pub fn mc_iou_3d(a: &Box3D, b: &Box3D, samples: usize, rng: &mut impl Rng) -> f64 {
    let ra = footprint_aabb(a);
    let rb = footprint_aabb(b);
    let (az0, az1) = (a.center[2] - a.size[1] * 0.5, a.center[2] + a.size[1] * 0.5);
    let (bz0, bz1) = (b.center[2] - b.size[1] * 0.5, b.center[2] + b.size[1] * 0.5);
    let lo = [ra[0].max(rb[0]), ra[1].max(rb[1]), az0.max(bz0)];
    let hi = [ra[2].min(rb[2]), ra[3].min(rb[3]), az1.min(bz1)];
    if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
        return 0.0;
    }
    let vol_a = a.size[0] * a.size[1] * a.size[2];
    let vol_b = b.size[0] * b.size[1] * b.size[2];
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.random_range(lo[0]..hi[0]);
        let y = rng.random_range(lo[1]..hi[1]);
        let z = rng.random_range(lo[2]..hi[2]);
        let in_a = in_footprint(a, x, y) && z >= az0 && z <= az1;
        let in_b = in_footprint(b, x, y) && z >= bz0 && z <= bz1;
        if in_a && in_b {
            hits += 1;
        }
    }
    let cell = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    let inter = hits as f64 / samples as f64 * cell;
    inter / (vol_a + vol_b - inter)
}
