//! On-disk formats for feature matrices and Gabor plane dumps.
//!
//! * Feature matrix: magic `FEATMAT1`, `u32` rows, `u32` cols, then
//!   `rows * cols` little-endian `f64` in row-major order. A sidecar CSV
//!   `row,path,class_id` names the source of each row.
//! * Plane: magic `GWTPLANE`, `u32` height, `u32` width, then the samples as
//!   little-endian `f64`, row-major.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image_io::encode_pgm_p5;

pub const FEATURE_MAGIC: &[u8; 8] = b"FEATMAT1";
pub const PLANE_MAGIC: &[u8; 8] = b"GWTPLANE";

fn encode_matrix(magic: &[u8; 8], rows: usize, cols: usize, values: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + rows * cols * 8);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_matrix(magic: &[u8; 8], bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    if bytes.len() < 16 || &bytes[..8] != magic {
        return Err(format!(
            "missing {} header",
            String::from_utf8_lossy(magic)
        ));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != rows * cols * 8 {
        return Err(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            rows * cols * 8,
            body.len()
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, values))
}

pub fn encode_feature_matrix(rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::dims(cols, bad.len(), "feature matrix row"));
    }
    Ok(encode_matrix(
        FEATURE_MAGIC,
        rows.len(),
        cols,
        rows.iter().flatten().copied(),
    ))
}

pub fn decode_feature_matrix(bytes: &[u8]) -> std::result::Result<Vec<Vec<f64>>, String> {
    let (rows, cols, values) = decode_matrix(FEATURE_MAGIC, bytes)?;
    if cols == 0 {
        return Ok(vec![Vec::new(); rows]);
    }
    Ok(values.chunks_exact(cols).map(<[f64]>::to_vec).collect())
}

pub fn write_feature_matrix(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_feature_matrix(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_feature_matrix(&bytes).map_err(|r| Error::decode(path, r))
}

/// Source of one feature matrix row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRow {
    pub path: PathBuf,
    pub class_id: usize,
}

pub fn feature_index_csv(rows: &[FeatureRow]) -> String {
    let mut out = String::from("row,path,class_id\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", r.path.display(), r.class_id));
    }
    out
}

pub fn read_feature_index(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (row, rest) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(path, idx + 1, "expected `row,path,class_id`"))?;
        let (file, class) = rest
            .rsplit_once(',')
            .ok_or_else(|| Error::parse(path, idx + 1, "expected `row,path,class_id`"))?;
        let row: usize = row
            .parse()
            .map_err(|e| Error::parse(path, idx + 1, format!("bad row index: {e}")))?;
        if row != rows.len() {
            return Err(Error::parse(path, idx + 1, format!("row index {row} out of order")));
        }
        let class_id = class
            .parse()
            .map_err(|e| Error::parse(path, idx + 1, format!("bad class id: {e}")))?;
        rows.push(FeatureRow {
            path: PathBuf::from(file),
            class_id,
        });
    }
    Ok(rows)
}

pub fn encode_plane(height: usize, width: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(data.len(), height * width);
    encode_matrix(PLANE_MAGIC, height, width, data.iter().copied())
}

pub fn decode_plane(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    decode_matrix(PLANE_MAGIC, bytes)
}

/// 8-bit `P5` rendering of a non-negative plane, scaled so its maximum is 255.
pub fn plane_to_pgm(height: usize, width: usize, data: &[f64]) -> Vec<u8> {
    let max = data.iter().copied().fold(0.0, f64::max);
    let samples: Vec<u8> = if max > 0.0 {
        data.iter()
            .map(|v| (v / max * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        vec![0; data.len()]
    };
    encode_pgm_p5(width, height, &samples)
}
