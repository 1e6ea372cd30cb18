//! `.fld` field snapshots.
//!
//! Layout: one line of JSON (`dim`, `n`, `extent`, `components`, `time`)
//! terminated by `\n`, followed by the field as little-endian `f64`
//! `(re, im)` pairs, component-major per point, points in grid order.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub components: usize,
    pub time: f64,
}

pub fn write_field<const C: usize, W: Write>(out: W, field: &Field<C>, time: f64) -> Result<()> {
    let g = field.grid();
    let header = SnapshotHeader {
        dim: g.dim(),
        n: g.n(),
        extent: g.extent(),
        components: C,
        time,
    };
    let mut w = BufWriter::new(out);
    let io = |e| Error::io("<snapshot>", e);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::Snapshot(e.to_string()))?;
    w.write_all(b"\n").map_err(io)?;
    for i in 0..g.len() {
        for z in field.at(i) {
            w.write_all(&z.re.to_le_bytes()).map_err(io)?;
            w.write_all(&z.im.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_field<const C: usize, R: Read>(input: R) -> Result<(Field<C>, f64)> {
    let mut r = BufReader::new(input);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::io("<snapshot>", e))?;
    if !line.ends_with('\n') {
        return Err(Error::Snapshot("missing header terminator".into()));
    }
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Snapshot(e.to_string()))?;
    if header.components != C {
        return Err(Error::Snapshot(format!(
            "expected {C} components, file has {}",
            header.components
        )));
    }
    let grid = Grid::new(header.dim, header.n, header.extent)?;
    let mut field = Field::<C>::zeros(grid);
    let mut buf = [0u8; 16];
    for i in 0..grid.len() {
        let mut v = [Complex64::new(0.0, 0.0); C];
        for z in v.iter_mut() {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Snapshot("truncated data".into()))?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            *z = Complex64::new(re, im);
        }
        field.set(i, v);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io("<snapshot>", e))? != 0 {
        return Err(Error::Snapshot("trailing bytes after field data".into()));
    }
    Ok((field, header.time))
}

pub fn save<const C: usize>(path: &Path, field: &Field<C>, time: f64) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_field(f, field, time)
}

pub fn load<const C: usize>(path: &Path) -> Result<(Field<C>, f64)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_field(f)
}
