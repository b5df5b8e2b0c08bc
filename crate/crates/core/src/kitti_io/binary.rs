//! Binary record formats: velodyne scans, semantic labels, fused clouds, and
//! per-point class scores. All values are little-endian.

use super::{FormatError, Point, PointCloud, SemanticLabel, SemanticLabelMap};
use crate::fusion::{ClassScoreMap, FusedPoint, FusedPointCloud};

/// A parsed scan plus how many reflectance values had to be clamped into
/// [0, 1]. Real sensors occasionally emit out-of-range intensities; those are
/// clamped rather than rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct VelodyneParse {
    pub cloud: PointCloud,
    pub clamped_reflectance: usize,
}

fn f32_at(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Decode a raw velodyne scan: N x 4 f32 records (x, y, z, reflectance).
pub fn parse_velodyne(bytes: &[u8]) -> Result<VelodyneParse, FormatError> {
    const STRIDE: usize = 16;
    if bytes.len() % STRIDE != 0 {
        return Err(FormatError::TruncatedFile {
            len: bytes.len(),
            stride: STRIDE,
        });
    }
    let n = bytes.len() / STRIDE;
    let mut points = Vec::with_capacity(n);
    let mut clamped = 0usize;
    for i in 0..n {
        let base = i * STRIDE;
        let x = f32_at(bytes, base);
        let y = f32_at(bytes, base + 4);
        let z = f32_at(bytes, base + 8);
        let r = f32_at(bytes, base + 12);
        if !(x.is_finite() && y.is_finite() && z.is_finite() && r.is_finite()) {
            return Err(FormatError::NonFiniteValue { index: i });
        }
        let r = if (0.0..=1.0).contains(&r) {
            r
        } else {
            clamped += 1;
            r.clamp(0.0, 1.0)
        };
        points.push(Point { x, y, z, r });
    }
    Ok(VelodyneParse {
        cloud: PointCloud { points },
        clamped_reflectance: clamped,
    })
}

/// Encode a scan back to the raw record layout. Inverse of [`parse_velodyne`]
/// for in-range inputs.
pub fn write_velodyne(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.r] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decode a semantic label file: N x u32, low half semantic id, high half
/// instance id.
pub fn parse_semantic_labels(bytes: &[u8]) -> Result<SemanticLabelMap, FormatError> {
    const STRIDE: usize = 4;
    if bytes.len() % STRIDE != 0 {
        return Err(FormatError::TruncatedFile {
            len: bytes.len(),
            stride: STRIDE,
        });
    }
    let entries = bytes
        .chunks_exact(STRIDE)
        .map(|c| SemanticLabel::from_word(u32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(SemanticLabelMap { entries })
}

pub fn write_semantic_labels(labels: &SemanticLabelMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(labels.len() * 4);
    for l in &labels.entries {
        out.extend_from_slice(&l.to_word().to_le_bytes());
    }
    out
}

/// Decode a fused cloud: N x 8 f32 records (x, y, z, r, s0..s3).
pub fn parse_fused(bytes: &[u8]) -> Result<FusedPointCloud, FormatError> {
    const STRIDE: usize = 32;
    if bytes.len() % STRIDE != 0 {
        return Err(FormatError::TruncatedFile {
            len: bytes.len(),
            stride: STRIDE,
        });
    }
    let n = bytes.len() / STRIDE;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let base = i * STRIDE;
        let mut f = [0.0f32; 8];
        for (k, v) in f.iter_mut().enumerate() {
            *v = f32_at(bytes, base + 4 * k);
            if !v.is_finite() {
                return Err(FormatError::NonFiniteValue { index: i });
            }
        }
        points.push(FusedPoint::from_features(f));
    }
    Ok(FusedPointCloud { points })
}

/// Encode a fused cloud; every point must carry 8 finite features.
/// `parse_fused(write_fused(c))` is the identity.
pub fn write_fused(fpc: &FusedPointCloud) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::with_capacity(fpc.len() * 32);
    for (i, p) in fpc.points.iter().enumerate() {
        let f = p.features();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFiniteValue { index: i });
        }
        for v in f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decode per-point class scores: N x 4 f32 logit records.
pub fn parse_scores(bytes: &[u8]) -> Result<ClassScoreMap, FormatError> {
    const STRIDE: usize = 16;
    if bytes.len() % STRIDE != 0 {
        return Err(FormatError::TruncatedFile {
            len: bytes.len(),
            stride: STRIDE,
        });
    }
    let n = bytes.len() / STRIDE;
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let base = i * STRIDE;
        let mut s = [0.0f32; 4];
        for (k, v) in s.iter_mut().enumerate() {
            *v = f32_at(bytes, base + 4 * k);
            if !v.is_finite() {
                return Err(FormatError::NonFiniteValue { index: i });
            }
        }
        scores.push(s);
    }
    Ok(ClassScoreMap { scores })
}

pub fn write_scores(map: &ClassScoreMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.scores.len() * 16);
    for s in &map.scores {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
