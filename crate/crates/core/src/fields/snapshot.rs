//! Binary state snapshots: magic "EPI1", u32 n, f64 L, f64 t (little-endian),
//! then the ρ samples and the ψ samples, row-major x-fastest, f64 LE.

use super::{Grid3, RealField};
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"EPI1";

pub struct Snapshot {
    pub grid: Grid3,
    pub t: f64,
    pub rho: RealField,
    pub psi: RealField,
}

pub fn write_snapshot(path: &Path, t: f64, rho: &RealField, psi: &RealField) -> Result<()> {
    if rho.grid != psi.grid {
        return Err(Error::Shape("snapshot fields on different grids".into()));
    }
    let grid = rho.grid;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n as u32).to_le_bytes())?;
    w.write_all(&grid.box_len.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in &rho.data {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &psi.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let box_len = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let grid = Grid3::new(n, box_len).map_err(|e| Error::Snapshot(e.to_string()))?;
    let read_field = |r: &mut dyn Read| -> Result<RealField> {
        let mut data = vec![0.0f64; grid.len()];
        for v in data.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        Ok(RealField { grid, data })
    };
    let rho = read_field(&mut r)?;
    let psi = read_field(&mut r)?;
    Ok(Snapshot { grid, t, rho, psi })
}
