//! Binary field container and CSV export.
//!
//! Container layout (little endian):
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `RAVFIELD` |
//! | 4 | format version (`1`) |
//! | 4 | number of axes `n` |
//! | 24·n | per axis `min: f64`, `max: f64`, `points: u64` |
//! | 8 | discount `γ: f64` |
//! | 8 | iterations `u64` |
//! | 8 | final residual `f64` |
//! | 1 | converged flag |
//! | 8·N | node values, row-major (last axis fastest) |

use std::io::{Read, Write};
use std::path::Path;

use super::field::{IterationStats, ValueField};
use super::grid::{Axis, Grid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RAVFIELD";
const VERSION: u32 = 1;

pub fn write_field<W: Write>(field: &ValueField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let axes = field.grid().axes();
    w.write_all(&(axes.len() as u32).to_le_bytes())?;
    for a in axes {
        w.write_all(&a.min.to_le_bytes())?;
        w.write_all(&a.max.to_le_bytes())?;
        w.write_all(&(a.points as u64).to_le_bytes())?;
    }
    let stats = field.stats();
    w.write_all(&field.gamma().to_le_bytes())?;
    w.write_all(&(stats.iterations as u64).to_le_bytes())?;
    w.write_all(&stats.residual.to_le_bytes())?;
    w.write_all(&[stats.converged as u8])?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated container: {e}")))?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

pub fn read_field<R: Read>(mut r: R) -> Result<ValueField> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if n == 0 || n > super::grid::MAX_GRID_DIM {
        return Err(Error::Format(format!("bad axis count {n}")));
    }
    let mut axes = Vec::with_capacity(n);
    for _ in 0..n {
        let min = read_f64(&mut r)?;
        let max = read_f64(&mut r)?;
        let points = read_u64(&mut r)? as usize;
        axes.push(Axis { min, max, points });
    }
    let grid = Grid::new(axes)?;
    let gamma = read_f64(&mut r)?;
    let iterations = read_u64(&mut r)? as usize;
    let residual = read_f64(&mut r)?;
    let converged = read_array::<1, _>(&mut r)?[0] != 0;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(read_f64(&mut r)?);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    ValueField::new(
        grid,
        values,
        gamma,
        IterationStats {
            iterations,
            residual,
            converged,
        },
    )
}

pub fn save_field(field: &ValueField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ValueField> {
    let file = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(file))
}

/// One row per node: coordinates `x0..x{n-1}` then `value`.
pub fn write_field_csv<W: Write>(field: &ValueField, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = field.grid().dim();
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    out.write_record(&header)?;
    for (i, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = field.grid().node(i).iter().map(|c| format!("{c:?}")).collect();
        row.push(format!("{v:?}"));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip_is_exact() {
        let grid = Grid::new(vec![
            Axis {
                min: -1.0,
                max: 1.0,
                points: 3,
            },
            Axis {
                min: 0.0,
                max: 2.0,
                points: 2,
            },
        ])
        .unwrap();
        let field = ValueField::new(
            grid,
            vec![0.1, -0.2, 1e-300, 3.5, -7.25, 0.0],
            0.9,
            IterationStats {
                iterations: 7,
                residual: 1e-7,
                converged: true,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_field(&field, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 48 + 8 + 8 + 8 + 1 + 48);
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn truncated_container_is_rejected() {
        let field = ValueField::constant(Grid::uniform_1d(0.0, 1.0, 4).unwrap(), 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        write_field(&field, &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_field(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let field = ValueField::constant(Grid::uniform_1d(0.0, 1.0, 3).unwrap(), 2.0, 0.5).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x0,value"));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(2), Some("0.5,2.0"));
    }
}
