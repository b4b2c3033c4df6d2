//! Field files (raw little-endian `f64` plus a JSON sidecar) and CSV tables.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldV, FieldVd};
use crate::grid::Grid2;
use crate::vector::D;

const LAYOUT: &str = "site_major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    pub hx: f64,
    pub hy: f64,
    pub layout: String,
    /// Present (and equal to 2) for `V^d` fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ay: Option<f64>,
}

impl FieldHeader {
    fn new(grid: &Grid2, n: usize, d: Option<usize>) -> Self {
        let (ax, ay) = grid.origin();
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            n,
            hx: grid.hx(),
            hy: grid.hy(),
            layout: LAYOUT.into(),
            d,
            ax: (ax != 0.0).then_some(ax),
            ay: (ay != 0.0).then_some(ay),
        }
    }

    pub fn grid(&self) -> Result<Grid2> {
        Grid2::with_origin(
            self.nx,
            self.ny,
            self.hx,
            self.hy,
            self.ax.unwrap_or(0.0),
            self.ay.unwrap_or(0.0),
        )
    }
}

/// Sidecar path: same basename with a `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_raw(path: &Path, header: &FieldHeader, data: &[f64]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(header)?)?;
    Ok(())
}

fn read_raw(path: &Path) -> Result<(FieldHeader, Vec<f64>)> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if header.layout != LAYOUT {
        return Err(Error::Format(format!("unsupported layout `{}`", header.layout)));
    }
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("{} bytes is not a whole number of f64", bytes.len())));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}

pub fn write_field(path: &Path, field: &FieldV) -> Result<()> {
    write_raw(path, &FieldHeader::new(field.grid(), field.n(), None), field.as_slice())
}

pub fn write_field_vd(path: &Path, field: &FieldVd) -> Result<()> {
    write_raw(path, &FieldHeader::new(field.grid(), field.n(), Some(D)), field.as_slice())
}

pub fn read_field(path: &Path) -> Result<FieldV> {
    let (h, data) = read_raw(path)?;
    if h.d.is_some_and(|d| d != 1) {
        return Err(Error::Format("expected a V-valued field, found a V^d field".into()));
    }
    FieldV::from_vec(h.grid()?, h.n, data)
}

pub fn read_field_vd(path: &Path) -> Result<FieldVd> {
    let (h, data) = read_raw(path)?;
    if h.d != Some(D) {
        return Err(Error::Format(format!("expected d = {D} in the sidecar")));
    }
    FieldVd::from_vec(h.grid()?, h.n, data)
}

/// Comma-separated table with a header row; numbers use 17 significant digits.
pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {}: `{s}`: {e}", line + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Format(format!("row {} has {} columns, header has {}", line + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads a scalar signal: one row per time sample (axis `y`), one column per
/// receiver (axis `x`). Values are returned in site order `j * n_x + i`.
pub fn read_signal_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let (header, rows) = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Format("empty signal".into()));
    }
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("signal".into()));
    }
    let nx = header.len();
    Ok((nx, values.len() / nx, values))
}

pub fn write_signal_csv(path: &Path, nx: usize, values: &[f64]) -> Result<()> {
    let names: Vec<String> = (0..nx).map(|i| format!("r{i}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_csv(path, &header, values.chunks_exact(nx).map(<[f64]>::to_vec))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::with_origin(4, 3, 0.5, 0.25, -1.0, 2.0).unwrap();
        let f = FieldV::from_fn(g, 3, |i, j, out| {
            out.iter_mut().enumerate().for_each(|(k, v)| *v = (i * 7 + j * 3 + k) as f64 * 0.1 - 1.0 / 3.0)
        })
        .unwrap();
        let p = dir.path().join("f.rawh");
        write_field(&p, &f).unwrap();
        assert!(sidecar_path(&p).exists());
        assert_eq!(read_field(&p).unwrap(), f);
        assert!(read_field_vd(&p).is_err());

        let w = FieldVd::from_vec(g, 1, (0..24).map(|x| x as f64).collect()).unwrap();
        let q = dir.path().join("w.rawh");
        write_field_vd(&q, &w).unwrap();
        assert_eq!(read_field_vd(&q).unwrap(), w);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let values: Vec<f64> = (0..12).map(|k| (k as f64).sin() / 3.0).collect();
        write_signal_csv(&p, 4, &values).unwrap();
        let (nx, ny, back) = read_signal_csv(&p).unwrap();
        assert_eq!((nx, ny), (4, 3));
        assert_eq!(back, values);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b\n1,2\n3\n").unwrap();
        assert!(read_csv(&p).is_err());
    }
}
