//! Little-endian binary matrix format and CSV export.
//!
//! ```text
//! offset  size  content
//! 0       8     magic  b"BPHCF64\0"
//! 8       4     format version (u32, currently 1)
//! 12      4     reserved, zero
//! 16      8     rows (u64)
//! 24      8     cols (u64)
//! 32      16·rows·cols   row-major (re: f64, im: f64) pairs
//! ```
//!
//! Real matrices are stored with zero imaginary parts. Axis metadata lives in
//! the JSON sidecars written by the pipeline.

use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"BPHCF64\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

pub fn encode_complex(values: &Array2<Complex64>) -> Vec<u8> {
    let (rows, cols) = values.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * rows * cols);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in values.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_complex(bytes: &[u8]) -> Result<Array2<Complex64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("file too short: {} bytes", bytes.len())));
    }
    if &bytes[0..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[24..32].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for {rows}x{cols}, found {}",
            bytes.len()
        )));
    }
    let data: Vec<Complex64> = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}

pub fn encode_real(values: &Array2<f64>) -> Vec<u8> {
    encode_complex(&values.mapv(|v| Complex64::new(v, 0.0)))
}

pub fn decode_real(bytes: &[u8]) -> Result<Array2<f64>> {
    Ok(decode_complex(bytes)?.mapv(|v| v.re))
}

pub fn write_complex(path: &Path, values: &Array2<Complex64>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_complex(values))?;
    Ok(())
}

pub fn read_complex(path: &Path) -> Result<Array2<Complex64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_complex(&bytes)
}

pub fn write_real(path: &Path, values: &Array2<f64>) -> Result<()> {
    std::fs::write(path, encode_real(values))?;
    Ok(())
}

pub fn read_real(path: &Path) -> Result<Array2<f64>> {
    decode_real(&std::fs::read(path)?)
}

/// Lossy CSV (`{:.9e}` per value, one matrix row per line). NaN is written as `nan`.
pub fn to_csv(values: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in values.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
