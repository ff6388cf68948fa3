//! Binary field dumps (`KSPD` header, little-endian) and CSV export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, TorusGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const FIELD_MAGIC: &[u8; 4] = b"KSPD";
pub const FIELD_VERSION: u32 = 1;

/// Writes the binary dump: magic, version, dim, points (all `u32` LE),
/// then the values as `f64` LE in storage order.
pub fn write_binary_to<T: Real, W: Write>(f: &Field<T>, mut w: W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    w.write_all(&(f.grid().dim() as u32).to_le_bytes())?;
    w.write_all(&(f.grid().points_per_dim() as u32).to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary_from<T: Real, R: Read>(mut r: R) -> Result<Field<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Config(format!("bad field magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = next_u32(&mut r)?;
    if version != FIELD_VERSION {
        return Err(Error::Config(format!("unsupported field dump version {version}")));
    }
    let dim = next_u32(&mut r)? as usize;
    let points = next_u32(&mut r)? as usize;
    let grid = TorusGrid::new(dim, points)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut buf = [0u8; 8];
    for _ in 0..grid.len() {
        r.read_exact(&mut buf)?;
        values.push(T::lit(f64::from_le_bytes(buf)));
    }
    Field::new(grid, values)
}

pub fn write_binary<T: Real>(f: &Field<T>, path: impl AsRef<Path>) -> Result<()> {
    write_binary_to(f, BufWriter::new(File::create(path)?))
}

pub fn read_binary<T: Real>(path: impl AsRef<Path>) -> Result<Field<T>> {
    read_binary_from(BufReader::new(File::open(path)?))
}

/// CSV with one row per node: `x,value` or `x,y,value`, 17 significant digits.
pub fn write_csv<T: Real, W: Write>(f: &Field<T>, mut w: W) -> Result<()> {
    let g = f.grid();
    if g.dim() == 1 {
        writeln!(w, "x,value")?;
    } else {
        writeln!(w, "x,y,value")?;
    }
    for (i, v) in f.values().iter().enumerate() {
        let [x, y] = g.coords::<f64>(i);
        if g.dim() == 1 {
            writeln!(w, "{:.16e},{:.16e}", x, v.to_f64_lossy())?;
        } else {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x, y, v.to_f64_lossy())?;
        }
    }
    Ok(())
}
