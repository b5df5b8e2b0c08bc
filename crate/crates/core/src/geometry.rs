//! Coordinate transforms, oriented 3D boxes, and rotated IoU.
//!
//! Internal box convention: LiDAR frame, z-up, yaw measured from +x about z,
//! box center at the geometric center. Camera-frame labels (which anchor
//! boxes at the bottom face) are converted on ingest by `kitti_io`.

use crate::fusion::KittiClass;
use crate::kitti_io::{Calibration, Point, PointCloud};

/// On-edge classification tolerance for polygon clipping, in meters.
const CLIP_EPS: f64 = 1e-9;

/// An oriented 3D box: center (x, y, z), size (w, h, l), yaw about z.
///
/// `l` runs along the heading axis (+x at yaw 0), `w` across it, `h` along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: [f64; 3],
    /// (w, h, l), all strictly positive.
    pub size: [f64; 3],
    /// Normalized to (-pi, pi].
    pub yaw: f64,
    pub class: KittiClass,
    pub score: Option<f64>,
}

impl Box3D {
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64, class: KittiClass) -> Self {
        assert!(
            size.iter().all(|&s| s > 0.0 && s.is_finite()),
            "box size must be positive and finite, got {size:?}"
        );
        Self {
            center,
            size,
            yaw: normalize_angle(yaw),
            class,
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn width(&self) -> f64 {
        self.size[0]
    }

    pub fn height(&self) -> f64 {
        self.size[1]
    }

    pub fn length(&self) -> f64 {
        self.size[2]
    }

    pub fn volume(&self) -> f64 {
        self.size[0] * self.size[1] * self.size[2]
    }

    /// Vertical extent [z_min, z_max].
    pub fn z_span(&self) -> (f64, f64) {
        let half = self.size[1] * 0.5;
        (self.center[2] - half, self.center[2] + half)
    }

    /// Footprint corners on the ground plane, counterclockwise.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (hw, hl) = (self.size[0] * 0.5, self.size[2] * 0.5);
        let (sin, cos) = self.yaw.sin_cos();
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        local.map(|[lx, ly]| {
            [
                self.center[0] + cos * lx - sin * ly,
                self.center[1] + sin * lx + cos * ly,
            ]
        })
    }
}

/// A point in cylindrical coordinates (rho >= 0, phi in (-pi, pi], z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub rho: f64,
    pub phi: f64,
    pub z: f64,
}

/// Result of projecting a LiDAR point through the camera chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Pixel coordinates plus camera-frame depth in meters.
    Pixel { u: f64, v: f64, depth: f64 },
    /// The point sits at or behind the camera plane (depth <= 0).
    Behind,
}

/// Normalize an angle to (-pi, pi]. In-range angles pass through unchanged
/// (no round-trip rounding).
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -std::f64::consts::PI && theta <= std::f64::consts::PI {
        return theta;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Cartesian to cylindrical. phi at rho = 0 is defined as 0.
pub fn cart_to_cyl(p: [f64; 3]) -> CylPoint {
    let rho = p[0].hypot(p[1]);
    let phi = if rho == 0.0 { 0.0 } else { p[1].atan2(p[0]) };
    CylPoint { rho, phi, z: p[2] }
}

/// Cylindrical back to Cartesian.
pub fn cyl_to_cart(c: CylPoint) -> [f64; 3] {
    [c.rho * c.phi.cos(), c.rho * c.phi.sin(), c.z]
}

/// Project a LiDAR-frame point to image coordinates:
/// `u' = P2 . [R0_rect] . [Tr_velo_to_cam] . [x, y, z, 1]^T`.
///
/// Depth is the homogeneous scale of the projection (camera-frame z for the
/// usual pinhole P2); `Behind` when it is non-positive.
pub fn project_lidar_to_image(p: [f64; 3], calib: &Calibration) -> Projection {
    let cam = calib.lidar_to_rect(p);
    let w = calib.p2[2][0] * cam[0] + calib.p2[2][1] * cam[1] + calib.p2[2][2] * cam[2]
        + calib.p2[2][3];
    if w <= 0.0 {
        return Projection::Behind;
    }
    let u = calib.p2[0][0] * cam[0] + calib.p2[0][1] * cam[1] + calib.p2[0][2] * cam[2]
        + calib.p2[0][3];
    let v = calib.p2[1][0] * cam[0] + calib.p2[1][1] * cam[1] + calib.p2[1][2] * cam[2]
        + calib.p2[1][3];
    Projection::Pixel {
        u: u / w,
        v: v / w,
        depth: w,
    }
}

/// The eight corners of a box, bottom face first, matching `footprint` order.
pub fn box_corners(b: &Box3D) -> [[f64; 3]; 8] {
    let fp = b.footprint();
    let (z0, z1) = b.z_span();
    let mut out = [[0.0; 3]; 8];
    for (i, c) in fp.iter().enumerate() {
        out[i] = [c[0], c[1], z0];
        out[i + 4] = [c[0], c[1], z1];
    }
    out
}

/// Map a point into a box's canonical frame: the box center goes to the
/// origin and its heading to +x.
pub fn canonical_point(p: [f64; 3], b: &Box3D) -> [f64; 3] {
    let (sin, cos) = b.yaw.sin_cos();
    let dx = p[0] - b.center[0];
    let dy = p[1] - b.center[1];
    [cos * dx + sin * dy, -sin * dx + cos * dy, p[2] - b.center[2]]
}

/// Inverse of [`canonical_point`].
pub fn canonical_point_inverse(p: [f64; 3], b: &Box3D) -> [f64; 3] {
    let (sin, cos) = b.yaw.sin_cos();
    [
        cos * p[0] - sin * p[1] + b.center[0],
        sin * p[0] + cos * p[1] + b.center[1],
        p[2] + b.center[2],
    ]
}

/// True when the point lies inside the box, with `tol` meters of slack on
/// every face.
pub fn point_in_box(p: [f64; 3], b: &Box3D, tol: f64) -> bool {
    let c = canonical_point(p, b);
    c[0].abs() <= b.size[2] * 0.5 + tol
        && c[1].abs() <= b.size[0] * 0.5 + tol
        && c[2].abs() <= b.size[1] * 0.5 + tol
}

/// Canonical transform of a whole cloud (f32 storage, f64 arithmetic).
pub fn canonical_transform(points: &PointCloud, b: &Box3D) -> PointCloud {
    let points = points
        .points
        .iter()
        .map(|p| {
            let c = canonical_point([p.x as f64, p.y as f64, p.z as f64], b);
            Point {
                x: c[0] as f32,
                y: c[1] as f32,
                z: c[2] as f32,
                r: p.r,
            }
        })
        .collect();
    PointCloud { points }
}

/// Signed area of a polygon (positive for counterclockwise winding).
fn signed_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc * 0.5
}

/// Sutherland-Hodgman clip of a convex subject polygon by a convex,
/// counterclockwise clip polygon.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        // Inside = on or left of the directed edge a->b (CCW clip polygon).
        let inside = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -CLIP_EPS;
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = inside(cur);
            let prev_in = inside(prev);
            if cur_in {
                if !prev_in {
                    output.push(edge_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(edge_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

/// Intersection of segment p0-p1 with the infinite line through a-b.
fn edge_intersection(p0: [f64; 2], p1: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = d[0] * e[1] - d[1] * e[0];
    if denom.abs() < f64::MIN_POSITIVE {
        return p0;
    }
    let t = ((a[0] - p0[0]) * e[1] - (a[1] - p0[1]) * e[0]) / denom;
    [p0[0] + t * d[0], p0[1] + t * d[1]]
}

/// Area of the intersection of the two yaw-rotated footprints.
pub fn footprint_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let inter = clip_convex(&a.footprint(), &b.footprint());
    signed_area(&inter).abs()
}

/// Rotated IoU of the two box footprints on the ground plane.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = footprint_intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let area_a = a.size[0] * a.size[2];
    let area_b = b.size[0] * b.size[2];
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Rotated 3D IoU: BEV intersection area times vertical overlap, over the
/// union of volumes.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (a0, a1) = a.z_span();
    let (b0, b1) = b.z_span();
    let dz = (a1.min(b1) - a0.max(b0)).max(0.0);
    if dz <= 0.0 {
        return 0.0;
    }
    let inter = footprint_intersection_area(a, b) * dz;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}
