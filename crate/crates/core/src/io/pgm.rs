//! 16-bit binary PGM previews.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::IntensityMap;

pub const DEFAULT_PREVIEW_GAMMA: f64 = 0.5;

/// Big-endian 16-bit samples, `65535 * (v / max)^gamma`, top row at the
/// largest y so that +y points up.
pub fn preview_pixels(map: &IntensityMap, gamma: f64) -> Vec<u16> {
    let g = map.grid();
    let max = map.max();
    let mut out = Vec::with_capacity(g.len());
    for j in (0..g.ny).rev() {
        for v in map.row(j) {
            let p = if max > 0.0 {
                (65535.0 * (v / max).powf(gamma)).round()
            } else {
                0.0
            };
            out.push(p as u16);
        }
    }
    out
}

pub fn write_preview(map: &IntensityMap, path: &Path, gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("preview gamma {gamma} must be > 0")));
    }
    let io = |e| Error::io(path, e);
    let g = map.grid();
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write!(w, "P5\n{} {}\n65535\n", g.nx, g.ny).map_err(io)?;
    for p in preview_pixels(map, gamma) {
        w.write_all(&p.to_be_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn zero_map_is_black_and_max_is_white() {
        let g = GridSpec::new(3, 2, 1.0, 1.0, 1.0).unwrap();
        let z = IntensityMap::new(g, 0.0, vec![0.0; 6]).unwrap();
        assert!(preview_pixels(&z, 0.5).iter().all(|p| *p == 0));
        // Row j = 1 (top) holds the maximum.
        let m = IntensityMap::new(g, 0.0, vec![0.0, 0.25, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let px = preview_pixels(&m, 0.5);
        assert_eq!(px[2], 65535);
        assert_eq!(px[4], 32768);
    }

    #[test]
    fn file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let g = GridSpec::new(2, 1, 1.0, 1.0, 1.0).unwrap();
        let m = IntensityMap::new(g, 0.0, vec![1.0, 0.0]).unwrap();
        write_preview(&m, &p, 1.0).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let head = b"P5\n2 1\n65535\n";
        assert_eq!(&bytes[..head.len()], head);
        assert_eq!(&bytes[head.len()..], &[0xff, 0xff, 0, 0]);
        assert!(write_preview(&m, &p, 0.0).is_err());
    }
}
