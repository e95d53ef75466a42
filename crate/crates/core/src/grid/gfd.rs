//! GFD grid-function files: a JSON manifest plus a raw little-endian `f64`
//! payload in row-major order, either in a sibling file or inlined as base64.
//!
//! ```json
//! {"dim": 2, "points_per_axis": 64, "half_width": 2.0,
//!  "dtype": "f64le", "payload": "rho.bin"}
//! ```
//!
//! An inline payload is written `"base64:<data>"`.

use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};

const DTYPE: &str = "f64le";
const INLINE: &str = "base64:";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
    pub dtype: String,
    pub payload: String,
}

pub fn encode(samples: &[f64]) -> Vec<u8> {
    samples.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode(bytes: &[u8], expected: usize) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {} ({} samples)",
            bytes.len(),
            expected * 8,
            expected
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Manifest with the samples inlined as base64.
pub fn to_inline(f: &GridFunction) -> Manifest {
    let s = f.spec();
    Manifest {
        dim: s.dim,
        points_per_axis: s.points_per_axis,
        half_width: s.half_width,
        dtype: DTYPE.into(),
        payload: format!("{INLINE}{}", STANDARD.encode(encode(f.samples()))),
    }
}

/// Writes `<stem>.gfd.json` and `<stem>.bin` next to each other.
pub fn write(f: &GridFunction, manifest_path: &Path) -> Result<()> {
    let bin = payload_path(manifest_path);
    fs::write(&bin, encode(f.samples()))?;
    let s = f.spec();
    let m = Manifest {
        dim: s.dim,
        points_per_axis: s.points_per_axis,
        half_width: s.half_width,
        dtype: DTYPE.into(),
        payload: bin.file_name().unwrap().to_string_lossy().into_owned(),
    };
    fs::write(manifest_path, serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

pub fn write_inline(f: &GridFunction, manifest_path: &Path) -> Result<()> {
    fs::write(manifest_path, serde_json::to_string_pretty(&to_inline(f))?)?;
    Ok(())
}

pub fn read(manifest_path: &Path) -> Result<GridFunction> {
    let m: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    from_manifest(&m, base)
}

/// Resolves a manifest; relative payload paths are taken relative to `base`.
pub fn from_manifest(m: &Manifest, base: &Path) -> Result<GridFunction> {
    if m.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype `{}`", m.dtype)));
    }
    let spec = GridSpec::new(m.dim, m.points_per_axis, m.half_width)?;
    let bytes = match m.payload.strip_prefix(INLINE) {
        Some(data) => STANDARD
            .decode(data.trim())
            .map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?,
        None => fs::read(base.join(&m.payload))?,
    };
    GridFunction::new(spec, decode(&bytes, spec.len())?)
}

fn payload_path(manifest: &Path) -> PathBuf {
    let name = manifest
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name
        .strip_suffix(".gfd.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name);
    manifest.with_file_name(format!("{stem}.bin"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_round_trip() {
        let spec = GridSpec::new(2, 4, 1.0).unwrap();
        let f = GridFunction::from_fn(spec, |x| x[0] * 3.0 - x[1]);
        let m = to_inline(&f);
        assert_eq!(from_manifest(&m, Path::new(".")).unwrap(), f);
    }

    #[test]
    fn rejects_short_payload_and_dtype() {
        let spec = GridSpec::new(1, 4, 1.0).unwrap();
        let f = GridFunction::constant(spec, 1.0);
        let mut m = to_inline(&f);
        m.payload = format!("{INLINE}{}", STANDARD.encode(encode(&[1.0, 2.0])));
        assert!(matches!(from_manifest(&m, Path::new(".")), Err(Error::Format(_))));
        let mut m = to_inline(&f);
        m.dtype = "f32le".into();
        assert!(from_manifest(&m, Path::new(".")).is_err());
    }
}
