use crate::error::{Error, Result};

/// Flux reduction of a wire run relative to its wire-free control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    pub phi_control: f64,
    pub phi_observed: f64,
    /// `100 (phi_control - phi_observed) / phi_control`.
    pub r_percent: f64,
}

impl FluxReport {
    /// Negative R means the wire run collected more light than the control.
    pub fn is_flux_gain(&self) -> bool {
        self.r_percent < 0.0
    }
}

pub fn reduction_r(phi_control: f64, phi_observed: f64) -> Result<FluxReport> {
    if !(phi_control > 0.0) || !phi_control.is_finite() {
        return Err(Error::NonPositiveControlFlux(phi_control));
    }
    if !phi_observed.is_finite() {
        return Err(Error::InvalidArgument("observed flux must be finite".into()));
    }
    Ok(FluxReport {
        phi_control,
        phi_observed,
        r_percent: 100.0 * (phi_control - phi_observed) / phi_control,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(reduction_r(3.0, 3.0).unwrap().r_percent, 0.0);
        let r = reduction_r(1.0, 0.98).unwrap();
        assert!((r.r_percent - 2.0).abs() < 1e-12);
        assert!(!r.is_flux_gain());
        assert!(reduction_r(1.0, 1.1).unwrap().is_flux_gain());
        assert!(matches!(reduction_r(0.0, 1.0), Err(Error::NonPositiveControlFlux(_))));
        assert!(reduction_r(-1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariant(c in 1e-6f64..1e6, ctl in 1e-3f64..1e3, frac in 0.0f64..2.0) {
            let a = reduction_r(ctl, ctl * frac).unwrap();
            let b = reduction_r(c * ctl, c * ctl * frac).unwrap();
            prop_assert!((a.r_percent - b.r_percent).abs() <= 1e-9 * (1.0 + a.r_percent.abs()));
        }
    }
}
