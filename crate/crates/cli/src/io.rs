//! Output files: CSV time series, JSON documents and raw float64 grids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Provenance stamped into every output file.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes a CSV whose first line is a `#` comment carrying the stamp and the
/// column list, followed by a header row and the data.
pub fn write_csv(path: &Path, stamp: &Stamp, columns: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::new();
    writeln!(
        out,
        "# metamorph {} config_sha256={} seed={} columns={}",
        stamp.command,
        stamp.config_sha256,
        stamp.seed,
        columns.join(";")
    )
    .unwrap();
    writeln!(out, "{}", columns.join(",")).unwrap();
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Shape sidecar for a raw grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub format: String,
    pub shape: Vec<usize>,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const GRID_FORMAT: &str = "float64-le-row-major";

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn write_grid(path: &Path, stamp: &Stamp, values: &[f64], dim: usize, length: f64) -> Result<(), CliError> {
    let n = if dim == 1 { values.len() } else { (values.len() as f64).sqrt().round() as usize };
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    write_json(
        &sidecar_path(path),
        &GridSidecar {
            format: GRID_FORMAT.into(),
            shape: vec![n; dim],
            length,
            config_sha256: Some(stamp.config_sha256.clone()),
            seed: Some(stamp.seed),
        },
    )
}

/// Reads a raw grid and checks its sidecar shape against `n^dim`.
pub fn read_grid(path: &Path, dim: usize, n: usize) -> Result<Vec<f64>, CliError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let meta: GridSidecar =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", side.display())))?;
    if meta.format != GRID_FORMAT {
        return Err(CliError::Io(format!("{}: unsupported format `{}`", side.display(), meta.format)));
    }
    if meta.shape != vec![n; dim] {
        return Err(CliError::Io(format!(
            "{}: shape {:?} does not match the configured grid {:?}",
            side.display(),
            meta.shape,
            vec![n; dim]
        )));
    }
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != 8 * n.pow(dim as u32) {
        return Err(CliError::Io(format!(
            "{}: {} bytes, expected {}",
            path.display(),
            bytes.len(),
            8 * n.pow(dim as u32)
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Io(format!("{}: non-finite values", path.display())));
    }
    Ok(values)
}
