//! Sampling grid shared by fields and intensity maps.

use crate::error::{Error, Result};

/// Uniform transverse sampling grid.
///
/// Sample `i` sits at `x_i = (i - nx/2) * dx` (integer division), so the
/// optical axis always falls on a sample. `ny == 1` selects 1D mode, where
/// apertures become slits and `dy` is ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub wavelength: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, wavelength: f64) -> Result<Self> {
        let grid = GridSpec {
            nx,
            ny,
            dx,
            dy,
            wavelength,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(n: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch, wavelength)
    }

    pub fn line(n: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        Self::new(n, 1, pitch, pitch, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid size {}x{} must be nonzero",
                self.nx, self.ny
            )));
        }
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx = {} must be > 0", self.dx)));
        }
        if !self.is_1d() && !(self.dy.is_finite() && self.dy > 0.0) {
            return Err(Error::InvalidGrid(format!("dy = {} must be > 0", self.dy)));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "wavelength = {} must be > 0",
                self.wavelength
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn is_1d(&self) -> bool {
        self.ny == 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if self.is_1d() {
            0.0
        } else {
            (j as f64 - (self.ny / 2) as f64) * self.dy
        }
    }

    /// Nearest sample index for coordinate `x`, if it falls inside the window.
    pub fn x_index(&self, x: f64) -> Option<usize> {
        axis_index(x, self.nx, self.dx)
    }

    pub fn y_index(&self, y: f64) -> Option<usize> {
        if self.is_1d() {
            return (y.abs() <= 0.5 * self.dy).then_some(0);
        }
        axis_index(y, self.ny, self.dy)
    }

    /// Area element used in power integrals (`dx` alone in 1D mode).
    #[inline]
    pub fn cell_area(&self) -> f64 {
        if self.is_1d() {
            self.dx
        } else {
            self.dx * self.dy
        }
    }

    /// Physical window edges along x: outer edges of the first and last cells.
    pub fn x_bounds(&self) -> (f64, f64) {
        (
            self.x(0) - 0.5 * self.dx,
            self.x(self.nx - 1) + 0.5 * self.dx,
        )
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        if self.is_1d() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (
                self.y(0) - 0.5 * self.dy,
                self.y(self.ny - 1) + 0.5 * self.dy,
            )
        }
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        if self.is_1d() {
            0.0
        } else {
            self.ny as f64 * self.dy
        }
    }

    /// Exact-parameter equality, used for cache keys and mismatch checks.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.dx.to_bits() == other.dx.to_bits()
            && (self.is_1d() || self.dy.to_bits() == other.dy.to_bits())
            && self.wavelength.to_bits() == other.wavelength.to_bits()
    }
}

fn axis_index(x: f64, n: usize, d: f64) -> Option<usize> {
    let k = (x / d).round() + (n / 2) as f64;
    if k >= 0.0 && k < n as f64 {
        Some(k as usize)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(0, 4, 1.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(4, 4, 0.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(4, 4, 1.0, -1.0, 1.0).is_err());
        assert!(GridSpec::new(4, 4, 1.0, 1.0, 0.0).is_err());
        // dy is ignored in 1D mode
        assert!(GridSpec::new(8, 1, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn axis_sample_is_at_origin() {
        let g = GridSpec::square(8, 0.5, 1.0).unwrap();
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.y(4), 0.0);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(7), 1.5);
        let odd = GridSpec::square(7, 1.0, 1.0).unwrap();
        assert_eq!(odd.x(3), 0.0);
        assert_eq!(odd.x(0), -3.0);
        assert_eq!(odd.x(6), 3.0);
    }

    proptest! {
        #[test]
        fn index_coordinate_round_trip(n in 1usize..5000, pitch in 1e-7f64..1e-2, frac in 0.0f64..1.0) {
            let g = GridSpec::line(n, pitch, 650e-9).unwrap();
            let i = ((n as f64 - 1.0) * frac) as usize;
            prop_assert_eq!(g.x_index(g.x(i)), Some(i));
        }
    }
}
