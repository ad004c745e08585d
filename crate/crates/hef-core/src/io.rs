//! File formats: the `HEF1` flat binary layout for grids and spectra, the
//! JSON-lines run log, and atomic writes.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! bytes 0..4   magic "HEF1"
//! bytes 4..8   u32 flags (bit 0: payload is complex, interleaved re/im)
//! bytes 8..12  u32 ndim
//! then         ndim × u32 dims
//! then         row-major f64 payload (2·Π dims values when complex)
//! ```

use crate::error::{HefError, Result};
use crate::grid::DensityGrid;
use crate::group::Pose;
use ndarray::{Array3, ArrayView3};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"HEF1";
const FLAG_COMPLEX: u32 = 1;

/// Write bytes to `path` atomically: temp file in the same directory, then
/// rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| HefError::Io(e.error))?;
    Ok(())
}

fn encode(dims: &[usize], payload: &[f64], complex: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * dims.len() + 8 * payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(if complex { FLAG_COMPLEX } else { 0 }).to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>, bool)> {
    let fail = |msg: &str| HefError::Parse(format!("HEF1: {msg}"));
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(fail("bad magic or truncated header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let flags = u32_at(4);
    let ndim = u32_at(8) as usize;
    let head = 12 + 4 * ndim;
    if bytes.len() < head {
        return Err(fail("truncated dims"));
    }
    let dims: Vec<usize> = (0..ndim).map(|i| u32_at(12 + 4 * i) as usize).collect();
    let complex = flags & FLAG_COMPLEX != 0;
    let count = dims.iter().product::<usize>() * if complex { 2 } else { 1 };
    if bytes.len() != head + 8 * count {
        return Err(fail("payload size mismatch"));
    }
    let payload = bytes[head..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, payload, complex))
}

/// Serialize a real 3-D array.
pub fn array3_bytes(a: &ArrayView3<f64>) -> Vec<u8> {
    let dims = [a.dim().0, a.dim().1, a.dim().2];
    let contiguous = a.to_owned();
    encode(&dims, contiguous.as_slice().expect("standard layout"), false)
}

/// Deserialize a real 3-D array.
pub fn array3_from_bytes(bytes: &[u8]) -> Result<Array3<f64>> {
    let (dims, payload, complex) = decode(bytes)?;
    if complex || dims.len() != 3 {
        return Err(HefError::Parse("HEF1: expected a real 3-D array".into()));
    }
    Array3::from_shape_vec((dims[0], dims[1], dims[2]), payload)
        .map_err(|e| HefError::Parse(format!("HEF1: {e}")))
    }

/// Serialize interleaved complex data (e.g. a spectrum block).
pub fn complex3_bytes(re: &ArrayView3<f64>, im: &ArrayView3<f64>) -> Result<Vec<u8>> {
    if re.dim() != im.dim() {
        return Err(HefError::Shape("re/im shape mismatch".into()));
    }
    let dims = [re.dim().0, re.dim().1, re.dim().2];
    let mut payload = Vec::with_capacity(2 * re.len());
    for (r, i) in re.iter().zip(im.iter()) {
        payload.push(*r);
        payload.push(*i);
    }
    Ok(encode(&dims, &payload, true))
}

/// Deserialize interleaved complex data back into (re, im).
pub fn complex3_from_bytes(bytes: &[u8]) -> Result<(Array3<f64>, Array3<f64>)> {
    let (dims, payload, complex) = decode(bytes)?;
    if !complex || dims.len() != 3 {
        return Err(HefError::Parse("HEF1: expected a complex 3-D array".into()));
    }
    let shape = (dims[0], dims[1], dims[2]);
    let re: Vec<f64> = payload.iter().step_by(2).copied().collect();
    let im: Vec<f64> = payload.iter().skip(1).step_by(2).copied().collect();
    Ok((
        Array3::from_shape_vec(shape, re).map_err(|e| HefError::Parse(e.to_string()))?,
        Array3::from_shape_vec(shape, im).map_err(|e| HefError::Parse(e.to_string()))?,
    ))
}

/// Dump a belief density for plotting / golden tests.
pub fn save_density(d: &DensityGrid, path: &Path) -> Result<()> {
    atomic_write(path, &array3_bytes(&d.values.view()))
}

/// One line of the per-step run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub t: usize,
    pub mode: Pose,
    pub mean: Pose,
    pub log_z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nll_gt: Option<f64>,
}

/// Render run records as JSON lines.
pub fn run_log_bytes(records: &[RunRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("serializable record");
        out.push(b'\n');
    }
    out
}

/// Parse a run log, annotating errors with line numbers.
pub fn parse_run_log(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HefError::Parse(format!("run log line {}: {e}", i + 1)))
        })
        .collect()
}
