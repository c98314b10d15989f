//! Binary field snapshots and the CSV conventions.
//!
//! Snapshot layout, all little-endian regardless of host:
//!
//! ```text
//!     magic   "KPSNAP01"           8 bytes
//!     version u32                  (currently 1)
//!     nx, ny  u32, u32
//!     lx, ly  f64, f64
//!     t       f64
//!     epsilon f64
//!     lambda  i8
//!     kind    u8                   (model kind code)
//!     payload nx*ny f64            row-major, y outer / x inner
//! ```
//!
//! Round trips are bitwise. CSV files are ASCII with '.' decimals, a
//! mandatory header row, and 17 significant digits so doubles survive a
//! round trip exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::analysis::DiagnosticsSeries;
use crate::error::{Error, Result};
use crate::grid::{RealField, SpectralGrid};
use crate::models::ModelKind;

const MAGIC: &[u8; 8] = b"KPSNAP01";
const VERSION: u32 = 1;

/// Run metadata carried in a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub t: f64,
    pub epsilon: f64,
    /// Transverse sign, stored as a signed byte.
    pub lambda: i8,
    pub kind: ModelKind,
}

pub fn write_snapshot<W: Write>(w: &mut W, field: &RealField, meta: &SnapshotMeta) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.nx() as u32).to_le_bytes())?;
    w.write_all(&(grid.ny() as u32).to_le_bytes())?;
    w.write_all(&grid.lx().to_le_bytes())?;
    w.write_all(&grid.ly().to_le_bytes())?;
    w.write_all(&meta.t.to_le_bytes())?;
    w.write_all(&meta.epsilon.to_le_bytes())?;
    w.write_all(&meta.lambda.to_le_bytes())?;
    w.write_all(&[meta.kind.as_u8()])?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<(RealField, SnapshotMeta)> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    let version = read_u32(r, "version")?;
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!(
            "unknown format version {version}"
        )));
    }
    let nx = read_u32(r, "nx")? as usize;
    let ny = read_u32(r, "ny")? as usize;
    let lx = read_f64(r, "lx")?;
    let ly = read_f64(r, "ly")?;
    let t = read_f64(r, "t")?;
    let epsilon = read_f64(r, "epsilon")?;
    let mut small = [0u8; 2];
    read_exact(r, &mut small, "lambda/kind")?;
    let lambda = small[0] as i8;
    let kind = ModelKind::from_u8(small[1])?;

    let grid = SpectralGrid::new(nx, ny, lx, ly)
        .map_err(|e| Error::SnapshotFormat(format!("header grid invalid: {e}")))?;
    let mut payload = vec![0u8; nx * ny * 8];
    read_exact(r, &mut payload, "payload")?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = RealField::from_values(&grid, values).expect("payload length checked");
    Ok((
        field,
        SnapshotMeta {
            t,
            epsilon,
            lambda,
            kind,
        },
    ))
}

pub fn write_snapshot_file(
    path: &Path,
    field: &RealField,
    meta: &SnapshotMeta,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, field, meta)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<(RealField, SnapshotMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    read_snapshot(&mut r)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::SnapshotFormat(format!("truncated while reading {what}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

/// Format a double with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_diagnostics_csv<W: Write>(w: &mut W, d: &DiagnosticsSeries) -> Result<()> {
    let with_energy = d.energy_printed.is_some() && d.energy_conventional.is_some();
    if with_energy {
        writeln!(w, "t,mass,err,maxgrad,energy_printed,energy_conventional")?;
    } else {
        writeln!(w, "t,mass,err,maxgrad")?;
    }
    for i in 0..d.times.len() {
        if with_energy {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(d.times[i]),
                fmt_f64(d.mass[i]),
                fmt_f64(d.err[i]),
                fmt_f64(d.max_grad[i]),
                fmt_f64(d.energy_printed.as_ref().expect("checked")[i]),
                fmt_f64(d.energy_conventional.as_ref().expect("checked")[i]),
            )?;
        } else {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(d.times[i]),
                fmt_f64(d.mass[i]),
                fmt_f64(d.err[i]),
                fmt_f64(d.max_grad[i]),
            )?;
        }
    }
    Ok(())
}

/// Read `(eps, delta)` pairs from a CSV with a header row; the first two
/// columns are used.
pub fn read_pairs_csv<R: Read>(r: &mut R) -> Result<Vec<(f64, f64)>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    if header.split(',').count() < 2 {
        return Err(Error::InvalidInput(
            "CSV header must declare at least two columns".into(),
        ));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::InvalidInput(format!("CSV line {}: missing column", i + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("CSV line {}: {e}", i + 1)))
        };
        let a = parse(cols.next())?;
        let b = parse(cols.next())?;
        out.push((a, b));
    }
    Ok(out)
}
