//! `.fkf` snapshots: one UTF-8 JSON header line, then the coefficients as
//! little-endian f64 (re, im) pairs in flat row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{Grid, SpectralField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub name: String,
    pub time: f64,
}

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, name: &str, time: f64) -> Result<()> {
    let g = field.grid;
    let header = SnapshotHeader { dim: g.dim, n: g.n, half_width: g.half_width, name: name.into(), time };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * field.coeffs.len());
    for c in &field.coeffs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, SpectralField)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Snapshot(format!("bad header: {e}")))?;
    let grid = Grid::new(header.dim, header.n, header.half_width)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::Snapshot(format!("expected {} payload bytes, found {}", 16 * grid.len(), bytes.len())));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
            let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((header, SpectralField { grid, coeffs }))
}

pub fn save_snapshot(path: &Path, field: &SpectralField, name: &str, time: f64) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(f), field, name, time)
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, SpectralField)> {
    read_snapshot(std::fs::File::open(path)?)
}
