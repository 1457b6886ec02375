//! `AFGRID1` raw intensity dump.
//!
//! Line 1 is `AFGRID1`, line 2 is `nx ny dx dy wavelength z`, followed by
//! `nx * ny` little-endian f64 samples, row-major with y as the outer index.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::IntensityMap;
use crate::grid::GridSpec;
use crate::metrics::SignedMap;

use super::fmt::format_float;

const MAGIC: &str = "AFGRID1";

fn header_for(g: &GridSpec, z: f64) -> String {
    format!(
        "{MAGIC}\n{} {} {} {} {} {}\n",
        g.nx,
        g.ny,
        format_float(g.dx),
        format_float(g.dy),
        format_float(g.wavelength),
        format_float(z)
    )
}

pub fn header(map: &IntensityMap) -> String {
    header_for(map.grid(), map.z())
}

fn write_values(g: &GridSpec, z: f64, values: &[f64], path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(header_for(g, z).as_bytes()).map_err(io)?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_grid(map: &IntensityMap, path: &Path) -> Result<()> {
    write_values(map.grid(), map.z(), map.values(), path)
}

/// Same layout for a map that may hold negative values.
pub fn write_signed_grid(map: &SignedMap, path: &Path) -> Result<()> {
    write_values(&map.grid, map.z, &map.values, path)
}

pub fn read_grid(path: &Path) -> Result<IntensityMap> {
    let io = |e| Error::io(path, e);
    let bad = |m: String| Error::GridFormat {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut line = String::new();
    r.read_line(&mut line).map_err(io)?;
    if line.trim_end_matches('\n') != MAGIC {
        return Err(bad(format!("missing {MAGIC} magic line")));
    }
    line.clear();
    r.read_line(&mut line).map_err(io)?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(bad(format!("header has {} fields, expected 6", fields.len())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad size `{s}`")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let (nx, ny) = (int(fields[0])?, int(fields[1])?);
    let grid = GridSpec::new(nx, ny, real(fields[2])?, real(fields[3])?, real(fields[4])?)
        .map_err(|e| bad(e.to_string()))?;
    let z = real(fields[5])?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != 8 * nx * ny {
        return Err(bad(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            8 * nx * ny
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    IntensityMap::new(grid, z, values).map_err(|e| bad(e.to_string()))
}
