//! Conversion between camera-frame label rows and LiDAR-frame boxes.
//!
//! KITTI labels anchor boxes at the bottom-face center in the rectified
//! camera frame (y down) with `rotation_y` about the camera y-axis; the
//! internal convention is z-up with the center at the geometric center and
//! yaw about z. The yaw relation is `yaw = -rotation_y - pi/2`, which is its
//! own inverse.

use super::{Calibration, GroundTruthObject};
use crate::fusion::KittiClass;
use crate::geometry::{box_corners, normalize_angle, project_lidar_to_image, Box3D, Projection};

/// Build a LiDAR-frame box from a label row. Returns `None` for `DontCare`
/// rows and rows without positive dimensions.
pub fn object_to_box(obj: &GroundTruthObject, calib: &Calibration) -> Option<Box3D> {
    if obj.dont_care || obj.dimensions.iter().any(|&d| d <= 0.0) {
        return None;
    }
    let [h, w, l] = obj.dimensions;
    // Bottom-face anchor -> geometric center (camera y points down).
    let center_rect = [
        obj.location[0],
        obj.location[1] - h * 0.5,
        obj.location[2],
    ];
    let center = calib.rect_to_lidar(center_rect);
    let yaw = normalize_angle(-obj.rotation_y - std::f64::consts::FRAC_PI_2);
    let class = obj.kitti_class().unwrap_or(KittiClass::Unlabeled);
    let mut b = Box3D::new(center, [w, h, l], yaw, class);
    b.score = obj.score;
    Some(b)
}

/// Render a LiDAR-frame box as a label row in the camera frame. The 2D box is
/// the image-plane hull of the projected corners ([0, 0, 1, 1] when the whole
/// box sits behind the camera).
pub fn box_to_object(b: &Box3D, calib: &Calibration) -> GroundTruthObject {
    let [w, h, l] = b.size;
    let center_rect = calib.lidar_to_rect(b.center);
    let location = [center_rect[0], center_rect[1] + h * 0.5, center_rect[2]];
    let rotation_y = normalize_angle(-b.yaw - std::f64::consts::FRAC_PI_2);
    let alpha = normalize_angle(rotation_y - location[0].atan2(location[2]));

    let mut bbox2d = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut any = false;
    for corner in box_corners(b) {
        if let Projection::Pixel { u, v, .. } = project_lidar_to_image(corner, calib) {
            bbox2d[0] = bbox2d[0].min(u);
            bbox2d[1] = bbox2d[1].min(v);
            bbox2d[2] = bbox2d[2].max(u);
            bbox2d[3] = bbox2d[3].max(v);
            any = true;
        }
    }
    if !any || bbox2d[2] <= bbox2d[0] || bbox2d[3] <= bbox2d[1] {
        bbox2d = [0.0, 0.0, 1.0, 1.0];
    }

    let class_name = match b.class {
        KittiClass::Car => "Car",
        KittiClass::Pedestrian => "Pedestrian",
        KittiClass::Cyclist => "Cyclist",
        KittiClass::Unlabeled => "Misc",
    };
    GroundTruthObject {
        class_name: class_name.to_string(),
        truncation: 0.0,
        occlusion: 0,
        alpha,
        bbox2d,
        dimensions: [h, w, l],
        location,
        rotation_y,
        score: b.score,
        dont_care: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitti_io::{parse_object_labels, write_detections};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn box_object_inverse() {
        let calib = Calibration::nominal();
        let b = Box3D::new([12.0, -3.0, -0.8], [1.6, 1.5, 3.9], 0.7, KittiClass::Car);
        let obj = box_to_object(&b, &calib);
        let back = object_to_box(&obj, &calib).unwrap();
        for k in 0..3 {
            assert!(close(back.center[k], b.center[k], 1e-9));
            assert!(close(back.size[k], b.size[k], 1e-9));
        }
        assert!(close(back.yaw, b.yaw, 1e-9));
    }

    #[test]
    fn detection_text_round_trip_random_boxes() {
        let calib = Calibration::nominal();
        let mut state = 0xC0FFEEu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut max_err = 0.0f64;
        for _ in 0..300 {
            let b = Box3D::new(
                [next() * 60.0 + 2.0, next() * 40.0 - 20.0, next() * 3.0 - 2.0],
                [next() * 2.0 + 0.4, next() * 1.5 + 0.8, next() * 3.0 + 0.8],
                (next() - 0.5) * 2.0 * std::f64::consts::PI,
                KittiClass::Car,
            )
            .with_score(next());
            let text = write_detections(&[b], &calib).unwrap();
            let objs = parse_object_labels(&text).unwrap();
            let back = object_to_box(&objs[0], &calib).unwrap();
            for k in 0..3 {
                max_err = max_err.max((back.center[k] - b.center[k]).abs());
                max_err = max_err.max((back.size[k] - b.size[k]).abs());
            }
            let mut dyaw = (back.yaw - b.yaw).abs();
            dyaw = dyaw.min(2.0 * std::f64::consts::PI - dyaw);
            max_err = max_err.max(dyaw);
            max_err = max_err.max((back.score.unwrap() - b.score.unwrap()).abs());
        }
        assert!(max_err < 1e-4, "round-trip error {max_err}");
    }

    #[test]
    fn dont_care_has_no_box() {
        let text = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10";
        let objs = parse_object_labels(text).unwrap();
        assert!(object_to_box(&objs[0], &Calibration::nominal()).is_none());
    }
}
