use crate::error::Result;
use crate::field::{intensity, Field, IntensityMap, Power};
use crate::grid::GridSpec;

/// Real map that may take either sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMap {
    pub grid: GridSpec,
    pub z: f64,
    pub values: Vec<f64>,
}

/// Split of a two-beam intensity into single-beam terms and the cross term.
///
/// `p_total = i1 + i2 + gamma` pointwise, with `gamma = 2 Re(conj(u1) u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub p_total: IntensityMap,
    pub i1: IntensityMap,
    pub i2: IntensityMap,
    pub gamma: SignedMap,
    /// `sum |gamma| / sum p_total`.
    pub gamma_l1_fraction: f64,
}

pub fn decompose(f1: &Field, f2: &Field) -> Result<DecompositionReport> {
    f1.check_compatible(f2)?;
    let p_field = f1.combine(1.0.into(), f2, 1.0.into())?;
    let p_total = intensity(&p_field);
    let gamma: Vec<f64> = f1
        .samples()
        .iter()
        .zip(f2.samples())
        .map(|(a, b)| 2.0 * (a.conj() * b).re)
        .collect();
    let p_sum = p_total.total_power();
    let g_sum: f64 = gamma.iter().map(|g| g.abs()).sum::<f64>() * f1.grid().cell_area();
    let gamma_l1_fraction = if p_sum > 0.0 { g_sum / p_sum } else { 0.0 };
    Ok(DecompositionReport {
        p_total,
        i1: intensity(f1),
        i2: intensity(f2),
        gamma: SignedMap {
            grid: *f1.grid(),
            z: f1.z(),
            values: gamma,
        },
        gamma_l1_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use num_complex::Complex64;

    fn grid() -> GridSpec {
        GridSpec::square(16, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_partner_has_no_cross_term() {
        let u = Field::from_fn(grid(), 0.0, |x, y| Complex64::new(x, y)).unwrap();
        let z = Field::zeros(grid(), 0.0).unwrap();
        let d = decompose(&u, &z).unwrap();
        assert!(d.gamma.values.iter().all(|g| *g == 0.0));
        assert_eq!(d.p_total, intensity(&u));
        assert_eq!(d.gamma_l1_fraction, 0.0);
    }

    #[test]
    fn identical_fields_double() {
        let u = Field::from_fn(grid(), 0.0, |x, y| Complex64::new(x.cos(), y)).unwrap();
        let d = decompose(&u, &u).unwrap();
        for (g, i) in d.gamma.values.iter().zip(d.i1.values()) {
            assert!((g - 2.0 * i).abs() <= 1e-12 * i.max(1e-300));
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let u = Field::zeros(grid(), 0.0).unwrap();
        let v = Field::zeros(grid(), 0.1).unwrap();
        assert!(matches!(decompose(&u, &v), Err(Error::GridMismatch)));
        let w = Field::zeros(GridSpec::square(8, 1.0, 1.0).unwrap(), 0.0).unwrap();
        assert!(matches!(decompose(&u, &w), Err(Error::GridMismatch)));
    }
}
