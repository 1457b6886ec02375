//! Sampled complex scalar fields and their intensity maps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::par::{self, Exec};

/// Complex scalar amplitude on a [`GridSpec`] at axial position `z`.
///
/// Samples are row-major with y as the outer index: sample `(i, j)` lives at
/// `samples[j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    z: f64,
    samples: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, z: f64, samples: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if !z.is_finite() || samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Field { grid, z, samples })
    }

    /// Internal constructor for values produced by already-validated arithmetic.
    pub(crate) fn from_parts(grid: GridSpec, z: f64, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Field { grid, z, samples }
    }

    pub fn zeros(grid: GridSpec, z: f64) -> Result<Self> {
        grid.validate()?;
        Ok(Field::from_parts(grid, z, vec![Complex64::new(0.0, 0.0); grid.len()]))
    }

    pub fn from_fn(grid: GridSpec, z: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        grid.validate()?;
        let mut samples = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                samples.push(f(grid.x(i), y));
            }
        }
        Field::new(grid, z, samples)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.samples[j * self.grid.nx + i]
    }

    pub(crate) fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        Field::from_parts(self.grid, self.z, self.samples.iter().map(|s| s * c).collect())
    }

    /// `a * self + b * other`; both fields must share grid and plane.
    pub fn combine(&self, a: Complex64, other: &Field, b: Complex64) -> Result<Field> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(Field::from_parts(self.grid, self.z, samples))
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.z.to_bits() != other.z.to_bits() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn intensity(&self) -> IntensityMap {
        intensity(self)
    }
}

/// Nonnegative real intensity `|u|^2` on a grid, arbitrary units.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    grid: GridSpec,
    z: f64,
    values: Vec<f64>,
}

impl IntensityMap {
    pub fn new(grid: GridSpec, z: f64, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "intensity values must be finite and nonnegative".into(),
            ));
        }
        Ok(IntensityMap { grid, z, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn create_plane_wave(grid: GridSpec, amplitude: Complex64) -> Result<Field> {
    grid.validate()?;
    if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
        return Err(Error::InvalidArgument("amplitude must be finite".into()));
    }
    Ok(Field::from_parts(grid, 0.0, vec![amplitude; grid.len()]))
}

pub fn intensity(field: &Field) -> IntensityMap {
    IntensityMap {
        grid: field.grid,
        z: field.z,
        values: field.samples.iter().map(|s| s.norm_sqr()).collect(),
    }
}

/// Anything whose integrated power is meaningful.
pub trait Power {
    fn total_power(&self) -> f64;
}

impl Power for Field {
    fn total_power(&self) -> f64 {
        let nx = self.grid.nx;
        par::sum_rows(Exec::Parallel, &self.samples, nx, |_, row| {
            row.iter().map(|s| s.norm_sqr()).sum()
        }) * self.grid.cell_area()
    }
}

impl Power for IntensityMap {
    fn total_power(&self) -> f64 {
        let nx = self.grid.nx;
        par::sum_rows(Exec::Parallel, &self.values, nx, |_, row| row.iter().sum())
            * self.grid.cell_area()
    }
}

/// Integrated power: `sum |u|^2 dx dy` (`dx` only in 1D mode).
pub fn total_power<P: Power + ?Sized>(p: &P) -> f64 {
    p.total_power()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plane_wave_power() {
        let g = GridSpec::square(4, 0.5, 650e-9).unwrap();
        let u = create_plane_wave(g, c(1.0, 0.0)).unwrap();
        assert!(u.samples().iter().all(|s| *s == c(1.0, 0.0)));
        assert_eq!(u.z(), 0.0);
        assert_eq!(total_power(&u), 16.0 * 0.25);
        let u2 = create_plane_wave(g, c(2.0, 0.0)).unwrap();
        assert_eq!(total_power(&u2), 4.0 * total_power(&u));
        assert_eq!(u.grid().wavelength, 650e-9);
    }

    #[test]
    fn plane_wave_rejects_bad_grid() {
        let g = GridSpec {
            nx: 0,
            ny: 4,
            dx: 1.0,
            dy: 1.0,
            wavelength: 1.0,
        };
        assert!(create_plane_wave(g, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn intensity_is_modulus_squared() {
        let g = GridSpec::line(8, 1.0, 1.0).unwrap();
        let mut s = vec![c(0.0, 0.0); 8];
        s[3] = c(3.0, 4.0);
        let u = Field::new(g, 0.0, s).unwrap();
        let m = intensity(&u);
        assert_eq!(m.values()[3], 25.0);
        assert_eq!(m.values().iter().filter(|v| **v != 0.0).count(), 1);

        let zero = Field::zeros(g, 0.1).unwrap();
        assert!(intensity(&zero).values().iter().all(|v| *v == 0.0));
        assert_eq!(intensity(&zero).z(), 0.1);
    }

    #[test]
    fn coherent_sum_quadruples_intensity() {
        let g = GridSpec::square(8, 1.0, 1.0).unwrap();
        let u = Field::from_fn(g, 0.0, |x, y| c(x.cos(), y.sin())).unwrap();
        let sum = u.combine(c(1.0, 0.0), &u, c(1.0, 0.0)).unwrap();
        for (a, b) in intensity(&sum).values().iter().zip(intensity(&u).values()) {
            assert!((a - 4.0 * b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn power_of_uniform_and_half_masked_maps() {
        let g = GridSpec::square(10, 1.0, 1.0).unwrap();
        let m = IntensityMap::new(g, 0.0, vec![1.0; 100]).unwrap();
        assert_eq!(total_power(&m), 100.0);
        let half: Vec<f64> = (0..100).map(|k| if k % 10 < 5 { 1.0 } else { 0.0 }).collect();
        let m = IntensityMap::new(g, 0.0, half).unwrap();
        assert_eq!(total_power(&m), 50.0);
    }

    #[test]
    fn one_dimensional_power_uses_dx_only() {
        let g = GridSpec::new(10, 1, 0.5, 123.0, 1.0).unwrap();
        let m = IntensityMap::new(g, 0.0, vec![1.0; 10]).unwrap();
        assert_eq!(total_power(&m), 5.0);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = GridSpec::line(8, 1.0, 1.0).unwrap();
        let mut s = vec![c(0.0, 0.0); 8];
        s[1] = c(f64::NAN, 0.0);
        assert!(Field::new(g, 0.0, s).is_err());
        assert!(IntensityMap::new(g, 0.0, vec![-1.0; 8]).is_err());
    }

    proptest! {
        #[test]
        fn power_is_quadratic_in_amplitude(re in -5.0f64..5.0, im in -5.0f64..5.0, seed in 0u64..1000) {
            let g = GridSpec::square(8, 0.3, 1.0).unwrap();
            let u = Field::from_fn(g, 0.0, |x, y| {
                let t = (x * 7.1 + y * 3.3 + seed as f64).sin();
                c(t, (t * 2.0).cos())
            }).unwrap();
            let k = c(re, im);
            let p = total_power(&u);
            let pk = total_power(&u.scaled(k));
            prop_assert!((pk - k.norm_sqr() * p).abs() <= 1e-12 * (pk.abs() + 1e-300));
            prop_assert!(intensity(&u.scaled(k)).values().iter().all(|v| *v >= 0.0));
            prop_assert!(p >= 0.0);
        }
    }
}
