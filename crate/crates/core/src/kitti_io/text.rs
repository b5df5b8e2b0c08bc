//! KITTI text formats: object labels (15 fields, 16 with a trailing score)
//! and calibration files.

use super::convert::box_to_object;
use super::{Calibration, FormatError, GroundTruthObject};
use crate::geometry::Box3D;

fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64, FormatError> {
    token.parse::<f64>().map_err(|_| FormatError::MalformedLine {
        line,
        reason: format!("{what}: not a number: {token:?}"),
    })
}

/// Parse a label or detection file. One object per non-empty line; `DontCare`
/// rows are retained with their flag set.
pub fn parse_object_labels(text: &str) -> Result<Vec<GroundTruthObject>, FormatError> {
    let mut objects = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 15 && fields.len() != 16 {
            return Err(FormatError::MalformedLine {
                line,
                reason: format!("expected 15 or 16 fields, got {}", fields.len()),
            });
        }
        let class_name = fields[0].to_string();
        let dont_care = class_name == "DontCare";
        let truncation = parse_f64(fields[1], line, "truncation")?;
        let occlusion_raw = parse_f64(fields[2], line, "occlusion")?;
        let occlusion = occlusion_raw.round() as i32;
        if !(-1..=3).contains(&occlusion) {
            return Err(FormatError::MalformedLine {
                line,
                reason: format!("occlusion out of range: {occlusion_raw}"),
            });
        }
        let alpha = parse_f64(fields[3], line, "alpha")?;
        let mut bbox2d = [0.0; 4];
        for (k, v) in bbox2d.iter_mut().enumerate() {
            *v = parse_f64(fields[4 + k], line, "bbox")?;
        }
        if bbox2d[2] <= bbox2d[0] || bbox2d[3] <= bbox2d[1] {
            return Err(FormatError::MalformedLine {
                line,
                reason: format!("degenerate 2D box {bbox2d:?}"),
            });
        }
        let mut dimensions = [0.0; 3];
        for (k, v) in dimensions.iter_mut().enumerate() {
            *v = parse_f64(fields[8 + k], line, "dimensions")?;
        }
        if !dont_care && dimensions.iter().any(|&d| d <= 0.0) {
            return Err(FormatError::MalformedLine {
                line,
                reason: format!("non-positive dimensions {dimensions:?}"),
            });
        }
        let mut location = [0.0; 3];
        for (k, v) in location.iter_mut().enumerate() {
            *v = parse_f64(fields[11 + k], line, "location")?;
        }
        let rotation_y = parse_f64(fields[14], line, "rotation_y")?;
        let score = if fields.len() == 16 {
            Some(parse_f64(fields[15], line, "score")?)
        } else {
            None
        };
        objects.push(GroundTruthObject {
            class_name,
            truncation,
            occlusion,
            alpha,
            bbox2d,
            dimensions,
            location,
            rotation_y,
            score,
            dont_care,
        });
    }
    Ok(objects)
}

fn format_object(obj: &GroundTruthObject) -> String {
    let mut line = format!(
        "{} {:.2} {} {:.6} {:.2} {:.2} {:.2} {:.2} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
        obj.class_name,
        obj.truncation,
        obj.occlusion,
        obj.alpha,
        obj.bbox2d[0],
        obj.bbox2d[1],
        obj.bbox2d[2],
        obj.bbox2d[3],
        obj.dimensions[0],
        obj.dimensions[1],
        obj.dimensions[2],
        obj.location[0],
        obj.location[1],
        obj.location[2],
        obj.rotation_y,
    );
    if let Some(score) = obj.score {
        line.push_str(&format!(" {score:.6}"));
    }
    line
}

/// Render objects back to label-file text, one row per object.
pub fn write_object_labels(objects: &[GroundTruthObject]) -> String {
    let mut out = String::new();
    for obj in objects {
        out.push_str(&format_object(obj));
        out.push('\n');
    }
    out
}

/// Render scored detections in submission format (16 fields). Boxes are
/// converted from the LiDAR frame to the camera frame through `calib`;
/// re-parsing recovers box parameters within 1e-4.
pub fn write_detections(dets: &[Box3D], calib: &Calibration) -> Result<String, FormatError> {
    let mut out = String::new();
    for (index, det) in dets.iter().enumerate() {
        let score = match det.score {
            Some(s) if s.is_finite() => s,
            _ => return Err(FormatError::MissingScore { index }),
        };
        let mut obj = box_to_object(det, calib);
        obj.score = Some(score);
        out.push_str(&format_object(&obj));
        out.push('\n');
    }
    Ok(out)
}

fn matrix_values(
    text: &str,
    key: &'static str,
    expected: usize,
) -> Result<Vec<f64>, FormatError> {
    for line in text.lines() {
        let Some(rest) = line.strip_prefix(key) else {
            continue;
        };
        let Some(rest) = rest.strip_prefix(':') else {
            continue;
        };
        let values: Result<Vec<f64>, _> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect();
        let values = values.map_err(|e| FormatError::MalformedMatrix {
            key,
            reason: e.to_string(),
        })?;
        if values.len() != expected {
            return Err(FormatError::MalformedMatrix {
                key,
                reason: format!("expected {expected} values, got {}", values.len()),
            });
        }
        return Ok(values);
    }
    Err(FormatError::MissingKey { key })
}

fn check_orthonormal(
    rot: &[[f64; 3]; 3],
    key: &'static str,
    tol: f64,
) -> Result<(), FormatError> {
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| rot[k][i] * rot[k][j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (dot - expect).abs() > tol {
                return Err(FormatError::MalformedMatrix {
                    key,
                    reason: format!("rotation block not orthonormal (col {i} . col {j} = {dot})"),
                });
            }
        }
    }
    Ok(())
}

/// Parse a KITTI calibration file. Requires the `P2`, `R0_rect`, and
/// `Tr_velo_to_cam` keys; matrices are row-major.
pub fn parse_calibration(text: &str) -> Result<Calibration, FormatError> {
    let p2v = matrix_values(text, "P2", 12)?;
    let r0v = matrix_values(text, "R0_rect", 9)?;
    let trv = matrix_values(text, "Tr_velo_to_cam", 12)?;

    let mut p2 = [[0.0; 4]; 3];
    let mut tr = [[0.0; 4]; 3];
    let mut r0 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..4 {
            p2[i][j] = p2v[i * 4 + j];
            tr[i][j] = trv[i * 4 + j];
        }
        for j in 0..3 {
            r0[i][j] = r0v[i * 3 + j];
        }
    }
    check_orthonormal(&r0, "R0_rect", 1e-3)?;
    let tr_rot = [
        [tr[0][0], tr[0][1], tr[0][2]],
        [tr[1][0], tr[1][1], tr[1][2]],
        [tr[2][0], tr[2][1], tr[2][2]],
    ];
    check_orthonormal(&tr_rot, "Tr_velo_to_cam", 1e-3)?;
    Ok(Calibration {
        p2,
        r0_rect: r0,
        tr_velo_to_cam: tr,
    })
}

/// Render a calibration in the same key-prefixed layout `parse_calibration`
/// reads.
pub fn write_calibration(calib: &Calibration) -> String {
    fn row(values: impl IntoIterator<Item = f64>) -> String {
        values
            .into_iter()
            .map(|v| format!("{v:.12e}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
    format!(
        "P2: {}\nR0_rect: {}\nTr_velo_to_cam: {}\n",
        row(calib.p2.iter().flatten().copied()),
        row(calib.r0_rect.iter().flatten().copied()),
        row(calib.tr_velo_to_cam.iter().flatten().copied()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::KittiClass;

    const CAR_LINE: &str =
        "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59";

    #[test]
    fn parse_single_car() {
        let objs = parse_object_labels(CAR_LINE).unwrap();
        assert_eq!(objs.len(), 1);
        let o = &objs[0];
        assert_eq!(o.class_name, "Car");
        assert_eq!(o.occlusion, 0);
        assert_eq!(o.alpha, -1.58);
        assert_eq!(o.bbox2d, [587.01, 173.33, 614.12, 200.12]);
        assert_eq!(o.dimensions, [1.65, 1.67, 3.64]);
        assert_eq!(o.location, [-0.65, 1.71, 46.70]);
        assert_eq!(o.rotation_y, -1.59);
        assert_eq!(o.score, None);
        assert!(!o.dont_care);
        assert_eq!(o.kitti_class(), Some(KittiClass::Car));
    }

    #[test]
    fn parse_empty_text() {
        assert!(parse_object_labels("").unwrap().is_empty());
        assert!(parse_object_labels("\n\n").unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_wrong_field_count() {
        let short = CAR_LINE.rsplit_once(' ').unwrap().0;
        match parse_object_labels(short) {
            Err(FormatError::MalformedLine { line: 1, .. }) => {}
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_non_numeric() {
        let bad = CAR_LINE.replace("46.70", "forty");
        match parse_object_labels(&bad) {
            Err(FormatError::MalformedLine { line: 1, .. }) => {}
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn parse_dont_care_row() {
        let text = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10";
        let objs = parse_object_labels(text).unwrap();
        assert!(objs[0].dont_care);
        assert_eq!(objs[0].kitti_class(), None);
    }

    #[test]
    fn detection_line_has_16_fields() {
        let line = format!("{CAR_LINE} 0.87");
        let objs = parse_object_labels(&line).unwrap();
        assert_eq!(objs[0].score, Some(0.87));
    }

    #[test]
    fn object_labels_round_trip() {
        let objs = parse_object_labels(CAR_LINE).unwrap();
        let text = write_object_labels(&objs);
        let reparsed = parse_object_labels(&text).unwrap();
        assert_eq!(reparsed, objs);
    }

    const CALIB: &str = "P2: 0 1 2 3 4 5 6 7 8 9 10 11\n\
        R0_rect: 1 0 0 0 1 0 0 0 1\n\
        Tr_velo_to_cam: 0 -1 0 0.1 0 0 -1 -0.2 1 0 0 0.3\n";

    #[test]
    fn parse_calibration_row_major() {
        let calib = parse_calibration(CALIB).unwrap();
        assert_eq!(calib.p2[1][2], 6.0);
        assert_eq!(calib.r0_rect, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(calib.tr_velo_to_cam[0][3], 0.1);
    }

    #[test]
    fn parse_calibration_missing_key() {
        let text = "P2: 0 1 2 3 4 5 6 7 8 9 10 11\nR0_rect: 1 0 0 0 1 0 0 0 1\n";
        assert_eq!(
            parse_calibration(text),
            Err(FormatError::MissingKey { key: "Tr_velo_to_cam" })
        );
    }

    #[test]
    fn parse_calibration_wrong_count() {
        let text = CALIB.replace("R0_rect: 1 0 0 0 1 0 0 0 1", "R0_rect: 1 0 0 0 1 0 0 0");
        match parse_calibration(&text) {
            Err(FormatError::MalformedMatrix { key: "R0_rect", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_calibration_rejects_skewed_rotation() {
        let text = CALIB.replace("R0_rect: 1 0 0 0 1 0 0 0 1", "R0_rect: 1 0.5 0 0 1 0 0 0 1");
        match parse_calibration(&text) {
            Err(FormatError::MalformedMatrix { key: "R0_rect", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_round_trip() {
        let calib = parse_calibration(CALIB).unwrap();
        let text = write_calibration(&calib);
        assert_eq!(parse_calibration(&text).unwrap(), calib);
    }

    #[test]
    fn write_detections_requires_score() {
        let calib = Calibration::nominal();
        let b = Box3D::new([10.0, 1.0, -0.5], [1.6, 1.5, 3.9], 0.3, KittiClass::Car);
        assert_eq!(
            write_detections(&[b], &calib),
            Err(FormatError::MissingScore { index: 0 })
        );
        let text = write_detections(&[b.with_score(0.9)], &calib).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.split_whitespace().count(), 16);
    }

    #[test]
    fn write_detections_empty() {
        assert_eq!(write_detections(&[], &Calibration::nominal()).unwrap(), "");
    }
}
