//! Tensor file formats.
//!
//! Text (`TNSR 1`):
//!
//! ```text
//! TNSR 1
//! <D>
//! <n_0> <n_1> ... <n_{D-1}>
//! <values, whitespace separated, row-major>
//! ```
//!
//! Binary (`TNSB`): magic `TNSB`, `u32` order, `u32` dims, then `f64`
//! values row-major. All integers and floats little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{DenseTensor, Shape};
use crate::error::{Error, Result};

const TEXT_MAGIC: &str = "TNSR 1";
const BINARY_MAGIC: &[u8; 4] = b"TNSB";

pub fn to_text(x: &DenseTensor) -> String {
    let mut out = String::new();
    out.push_str(TEXT_MAGIC);
    out.push('\n');
    out.push_str(&x.shape().order().to_string());
    out.push('\n');
    let dims: Vec<String> = x.dims().iter().map(|n| n.to_string()).collect();
    out.push_str(&dims.join(" "));
    out.push('\n');
    let vals: Vec<String> = x.data().iter().map(|v| format!("{v:e}")).collect();
    out.push_str(&vals.join(" "));
    out.push('\n');
    out
}

pub fn from_text(text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines();
    let magic = lines.next().map(str::trim).unwrap_or_default();
    if magic != TEXT_MAGIC {
        return Err(Error::Parse(format!("bad magic line {magic:?}")));
    }
    let order: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("missing order line".into()))?
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("order: {e}")))?;
    let dims = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dims line".into()))?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("dim {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != order {
        return Err(Error::Parse(format!("order {order} but {} dims", dims.len())));
    }
    let shape = Shape::new(dims)?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("value {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    DenseTensor::from_vec(shape, values)
}

pub fn to_binary(x: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * x.dims().len() + 8 * x.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(x.dims().len() as u32).to_le_bytes());
    for &n in x.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_binary(mut bytes: &[u8]) -> Result<DenseTensor> {
    let mut word = [0u8; 4];
    bytes.read_exact(&mut word).map_err(|_| Error::Parse("truncated header".into()))?;
    if &word != BINARY_MAGIC {
        return Err(Error::Parse("bad binary magic".into()));
    }
    let mut read_u32 = |bytes: &mut &[u8]| -> Result<usize> {
        bytes.read_exact(&mut word).map_err(|_| Error::Parse("truncated header".into()))?;
        Ok(u32::from_le_bytes(word) as usize)
    };
    let order = read_u32(&mut bytes)?;
    let dims = (0..order).map(|_| read_u32(&mut bytes)).collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims)?;
    if bytes.len() != 8 * shape.total() {
        return Err(Error::Parse(format!(
            "expected {} value bytes, found {}",
            8 * shape.total(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseTensor::from_vec(shape, values)
}

/// Read either format, detected from the leading magic bytes.
pub fn load(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        from_text(&text)
    }
}

pub fn save_text(x: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_text(x))?;
    Ok(())
}

pub fn save_binary(x: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_binary(x))?;
    Ok(())
}
