//! Binary field dumps with a JSON sidecar.
//!
//! `<stem>.bin` holds one or two planes of little-endian `f64`, each row-major with the
//! grid's first axis slowest (`s` then `z` on the cylinder). Complex fields store the real
//! plane followed by the imaginary plane; densities store a single plane. `<stem>.json`
//! describes the grid, the time and the planes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};
use crate::grid::{GridSpec, WaveField};
use crate::params::PhysicalParams;

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub grid: GridSpec,
    /// `[first axis, second axis]` node counts.
    pub shape: [usize; 2],
    /// Time in PDE units.
    pub t: f64,
    /// Names of the stored planes, in file order.
    pub planes: Vec<String>,
    pub dtype: String,
    pub byte_order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

fn sidecar(grid: GridSpec, t: f64, planes: &[&str], params: Option<&PhysicalParams>, label: Option<&str>) -> Sidecar {
    let (a, b) = grid.shape();
    Sidecar {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        grid,
        shape: [a, b],
        t,
        planes: planes.iter().map(|s| s.to_string()).collect(),
        dtype: "f64".into(),
        byte_order: "little".into(),
        params: params.copied(),
        label: label.map(str::to_string),
    }
}

fn write_planes(bin: &Path, planes: &[&dyn Fn(usize) -> f64], len: usize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(bin)?);
    for plane in planes {
        for i in 0..len {
            w.write_all(&plane(i).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_sidecar(path: &Path, meta: &Sidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| SnError::Io(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Writes `<stem>.bin` (re plane, im plane) and `<stem>.json`.
pub fn write_field(stem: &Path, psi: &WaveField, t: f64, params: Option<&PhysicalParams>) -> Result<()> {
    let (bin, json) = paths(stem);
    let d = psi.data();
    write_planes(&bin, &[&|i| d[i].re, &|i| d[i].im], d.len())?;
    write_sidecar(&json, &sidecar(*psi.grid(), t, &["re", "im"], params, None))
}

/// Writes a single density plane.
pub fn write_density(
    stem: &Path,
    grid: GridSpec,
    density: &[f64],
    t: f64,
    params: Option<&PhysicalParams>,
    label: Option<&str>,
) -> Result<()> {
    if density.len() != grid.len() {
        return Err(SnError::Precondition(format!("density has {} values for a grid of {}", density.len(), grid.len())));
    }
    let (bin, json) = paths(stem);
    write_planes(&bin, &[&|i| density[i]], density.len())?;
    write_sidecar(&json, &sidecar(grid, t, &["density"], params, label))
}

fn read_planes(stem: &Path) -> Result<(Sidecar, Vec<f64>)> {
    let (bin, json) = paths(stem);
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(json)?).map_err(|e| SnError::Io(e.to_string()))?;
    if meta.schema_version != SNAPSHOT_SCHEMA_VERSION || meta.dtype != "f64" || meta.byte_order != "little" {
        return Err(SnError::Io(format!(
            "unsupported snapshot (schema {}, {} {})",
            meta.schema_version, meta.dtype, meta.byte_order
        )));
    }
    let bytes = fs::read(bin)?;
    let expect = meta.grid.len() * meta.planes.len() * 8;
    if bytes.len() != expect {
        return Err(SnError::Io(format!("snapshot holds {} bytes, expected {expect}", bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((meta, values))
}

pub fn read_field(stem: &Path) -> Result<(WaveField, Sidecar)> {
    let (meta, v) = read_planes(stem)?;
    if meta.planes != ["re", "im"] {
        return Err(SnError::Io(format!("expected re/im planes, found {:?}", meta.planes)));
    }
    let n = meta.grid.len();
    let data = (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect();
    Ok((WaveField::new(meta.grid, data)?, meta))
}

pub fn read_density(stem: &Path) -> Result<(Vec<f64>, Sidecar)> {
    let (meta, v) = read_planes(stem)?;
    if meta.planes != ["density"] {
        return Err(SnError::Io(format!("expected a density plane, found {:?}", meta.planes)));
    }
    Ok((v, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::cylinder(8, 12, 4.0, 4.0).unwrap();
        let psi = WaveField::gaussian_cylinder(grid, 1.0, 0.5, 1.0, 0.1).unwrap();
        let stem = dir.path().join("snap_0001");
        write_field(&stem, &psi, 0.25, None).unwrap();
        let (back, meta) = read_field(&stem).unwrap();
        assert_eq!(back, psi);
        assert_eq!(meta.shape, [8, 12]);
        assert_eq!(meta.t, 0.25);
        assert_eq!(fs::metadata(stem.with_extension("bin")).unwrap().len(), 8 * 12 * 16);
    }

    #[test]
    fn layout_is_re_then_im() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::line(3, 1.0).unwrap();
        let psi = WaveField::new(grid, vec![Complex64::new(1.0, -1.0), Complex64::new(2.0, -2.0), Complex64::new(3.0, -3.0)]).unwrap();
        let stem = dir.path().join("s");
        write_field(&stem, &psi, 0.0, None).unwrap();
        let bytes = fs::read(stem.with_extension("bin")).unwrap();
        let v: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(v, vec![1.0, 2.0, 3.0, -1.0, -2.0, -3.0]);
    }

    #[test]
    fn density_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::line(4, 1.0).unwrap();
        let stem = dir.path().join("rho");
        write_density(&stem, grid, &[0.1, 0.2, 0.3, 0.4], 1.5, None, Some("mixed")).unwrap();
        let (rho, meta) = read_density(&stem).unwrap();
        assert_eq!(rho, vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(meta.label.as_deref(), Some("mixed"));
        fs::write(stem.with_extension("bin"), [0u8; 7]).unwrap();
        assert!(matches!(read_density(&stem), Err(SnError::Io(_))));
    }
}
