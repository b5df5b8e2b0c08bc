//! Raw tensor dump format for downstream training code: one ASCII header
//! line `name dim0 dim1 ...`, then the data as little-endian f32.

use crate::kitti_io::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorDump {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn write_tensor_dump(name: &str, dims: &[usize], data: &[f32]) -> Vec<u8> {
    assert_eq!(
        dims.iter().product::<usize>(),
        data.len(),
        "shape/product mismatch for tensor {name}"
    );
    let mut out = name.as_bytes().to_vec();
    for d in dims {
        out.extend_from_slice(format!(" {d}").as_bytes());
    }
    out.push(b'\n');
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_tensor_dump(bytes: &[u8]) -> Result<TensorDump, FormatError> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(FormatError::MalformedLine {
            line: 1,
            reason: "missing shape header".to_string(),
        })?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| FormatError::MalformedLine {
        line: 1,
        reason: "header is not UTF-8".to_string(),
    })?;
    let mut fields = header.split_whitespace();
    let name = fields
        .next()
        .ok_or(FormatError::MalformedLine {
            line: 1,
            reason: "empty header".to_string(),
        })?
        .to_string();
    let dims: Result<Vec<usize>, _> = fields.map(|f| f.parse::<usize>()).collect();
    let dims = dims.map_err(|e| FormatError::MalformedLine {
        line: 1,
        reason: format!("bad dimension: {e}"),
    })?;
    let body = &bytes[newline + 1..];
    let expected = dims.iter().product::<usize>() * 4;
    if body.len() != expected {
        return Err(FormatError::TruncatedFile {
            len: body.len(),
            stride: 4,
        });
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TensorDump { name, dims, data })
}
