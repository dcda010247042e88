//! Field export: one CSV per time slice plus a raw little-endian binary dump
//! with a JSON sidecar describing its layout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Mesh, SpaceTimeField, TimeAxis};
use crate::error::{Error, Result};

const AXIS_NAMES: [&str; 3] = ["i", "j", "l"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub name: String,
    /// Interior nodes per axis, axis 0 first.
    pub interior_dims: Vec<usize>,
    pub nodes_per_axis: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub horizon: f64,
    pub steps: usize,
    /// `[M + 1, interior nodes]`
    pub shape: [usize; 2],
    pub layout: String,
    pub endianness: String,
    pub element: String,
}

impl FieldMeta {
    pub fn new(name: &str, mesh: &Mesh, time: &TimeAxis) -> Self {
        Self {
            name: name.to_string(),
            interior_dims: mesh.interior_dims().to_vec(),
            nodes_per_axis: mesh.nodes_per_axis().to_vec(),
            bounds: mesh.bounds(),
            horizon: time.horizon(),
            steps: time.steps(),
            shape: [time.steps() + 1, mesh.interior_len()],
            layout: "slice-major, interior nodes with axis 0 fastest".into(),
            endianness: "little".into(),
            element: "f64".into(),
        }
    }
}

/// Writes `field_<name>_k<slice>.csv` for every slice. Columns are the full
/// grid indices of the node followed by the value.
pub fn write_field_csv(
    dir: &Path,
    name: &str,
    mesh: &Mesh,
    time: &TimeAxis,
    field: &SpaceTimeField,
) -> Result<Vec<PathBuf>> {
    field.check_axes(mesh, time, name)?;
    fs::create_dir_all(dir)?;
    let header = AXIS_NAMES[..mesh.dim()].join(",") + ",value\n";
    let mut paths = Vec::with_capacity(field.num_slices());
    for (k, slice) in field.slices().enumerate() {
        let path = dir.join(format!("field_{name}_k{k}.csv"));
        let mut out = String::with_capacity(header.len() + 32 * slice.len());
        out.push_str(&header);
        for (node, value) in slice.iter().enumerate() {
            let idx = mesh.grid_index(node);
            for i in &idx[..mesh.dim()] {
                out.push_str(&i.to_string());
                out.push(',');
            }
            out.push_str(&format!("{value:.16e}\n"));
        }
        fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes `field_<name>.bin` and `field_<name>.meta.json`; returns the path
/// of the binary file.
pub fn write_field_binary(
    dir: &Path,
    name: &str,
    mesh: &Mesh,
    time: &TimeAxis,
    field: &SpaceTimeField,
) -> Result<PathBuf> {
    field.check_axes(mesh, time, name)?;
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("field_{name}.bin"));
    let mut bytes = Vec::with_capacity(8 * field.as_slice().len());
    for x in field.as_slice() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::File::create(&bin)?.write_all(&bytes)?;
    let meta = FieldMeta::new(name, mesh, time);
    fs::write(meta_path(&bin), serde_json::to_string_pretty(&meta)?)?;
    Ok(bin)
}

fn meta_path(bin: &Path) -> PathBuf {
    bin.with_extension("meta.json")
}

/// Reads a binary field and its sidecar.
pub fn read_field_binary(bin: &Path) -> Result<(FieldMeta, SpaceTimeField)> {
    let meta: FieldMeta = serde_json::from_str(&fs::read_to_string(meta_path(bin))?)?;
    if meta.endianness != "little" || meta.element != "f64" {
        return Err(Error::InvalidArgument(format!(
            "unsupported encoding {} {}",
            meta.endianness, meta.element
        )));
    }
    let bytes = fs::read(bin)?;
    let expected = 8 * meta.shape[0] * meta.shape[1];
    if bytes.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "{} holds {} bytes, metadata implies {expected}",
            bin.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = SpaceTimeField::from_vec(meta.shape[1], data)?;
    Ok((meta, field))
}
