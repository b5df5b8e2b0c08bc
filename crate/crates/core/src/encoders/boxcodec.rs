//! Box-regression target codecs: bin discretization for center regression
//! and normalized anchor residuals.

use super::EncoderError;
use crate::geometry::Box3D;

/// Bin indices plus normalized intra-bin residuals for a 2-axis center
/// offset. Decoding is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEncoding {
    pub bin_x: usize,
    pub bin_z: usize,
    /// Residuals normalized by the bin size, in [-0.5, 0.5].
    pub residual_x: f64,
    pub residual_z: f64,
}

/// Number of bins covering [-search_range, +search_range].
pub fn num_bins(search_range: f64, bin_size: f64) -> usize {
    ((2.0 * search_range / bin_size) - 1e-9).ceil().max(1.0) as usize
}

fn encode_axis(
    offset: f64,
    search_range: f64,
    bin_size: f64,
    axis: &'static str,
) -> Result<(usize, f64), EncoderError> {
    if offset.abs() > search_range {
        return Err(EncoderError::Overflow {
            axis,
            offset,
            limit: search_range,
        });
    }
    let n = num_bins(search_range, bin_size);
    let shifted = offset + search_range;
    let bin = ((shifted / bin_size).floor() as usize).min(n - 1);
    let residual = (shifted - (bin as f64 + 0.5) * bin_size) / bin_size;
    Ok((bin, residual))
}

/// Discretize the offset from a foreground point to its target center into a
/// bin index and normalized residual per axis. Offsets beyond the search
/// range overflow.
pub fn bin_encode_center(
    point: (f64, f64),
    target: (f64, f64),
    search_range: f64,
    bin_size: f64,
) -> Result<BinEncoding, EncoderError> {
    let (bin_x, residual_x) = encode_axis(target.0 - point.0, search_range, bin_size, "x")?;
    let (bin_z, residual_z) = encode_axis(target.1 - point.1, search_range, bin_size, "z")?;
    Ok(BinEncoding {
        bin_x,
        bin_z,
        residual_x,
        residual_z,
    })
}

/// Reconstruct the target center from a bin encoding.
pub fn bin_decode_center(
    point: (f64, f64),
    enc: &BinEncoding,
    search_range: f64,
    bin_size: f64,
) -> (f64, f64) {
    let decode = |p: f64, bin: usize, residual: f64| {
        p + (bin as f64 + 0.5) * bin_size + residual * bin_size - search_range
    };
    (
        decode(point.0, enc.bin_x, enc.residual_x),
        decode(point.1, enc.bin_z, enc.residual_z),
    )
}

/// Encode a ground-truth box against an anchor as the 7-vector
/// (dx/d, dy/d, dz/h, ln w-ratio, ln h-ratio, ln l-ratio, sin d-yaw)
/// where d is the anchor's footprint diagonal. The sine leaves a direction
/// ambiguity that the direction classifier resolves.
pub fn anchor_residual_encode(gt: &Box3D, anchor: &Box3D) -> Result<[f64; 7], EncoderError> {
    let d = anchor.size[0].hypot(anchor.size[2]);
    let h = anchor.size[1];
    if !(d > 0.0 && h > 0.0) || anchor.size.iter().any(|&s| s <= 0.0) {
        return Err(EncoderError::DegenerateAnchor);
    }
    if gt.size.iter().any(|&s| s <= 0.0) {
        return Err(EncoderError::DegenerateAnchor);
    }
    Ok([
        (gt.center[0] - anchor.center[0]) / d,
        (gt.center[1] - anchor.center[1]) / d,
        (gt.center[2] - anchor.center[2]) / h,
        (gt.size[0] / anchor.size[0]).ln(),
        (gt.size[1] / anchor.size[1]).ln(),
        (gt.size[2] / anchor.size[2]).ln(),
        (gt.yaw - anchor.yaw).sin(),
    ])
}

/// Decode a residual vector back into a box. Recovers the ground truth
/// within 1e-6 when |yaw difference| < pi/2.
pub fn anchor_residual_decode(res: &[f64; 7], anchor: &Box3D) -> Result<Box3D, EncoderError> {
    let d = anchor.size[0].hypot(anchor.size[2]);
    let h = anchor.size[1];
    if !(d > 0.0 && h > 0.0) || anchor.size.iter().any(|&s| s <= 0.0) {
        return Err(EncoderError::DegenerateAnchor);
    }
    Ok(Box3D::new(
        [
            anchor.center[0] + res[0] * d,
            anchor.center[1] + res[1] * d,
            anchor.center[2] + res[2] * h,
        ],
        [
            anchor.size[0] * res[3].exp(),
            anchor.size[1] * res[4].exp(),
            anchor.size[2] * res[5].exp(),
        ],
        anchor.yaw + res[6].clamp(-1.0, 1.0).asin(),
        anchor.class,
    ))
}
