//! Band-limited angular-spectrum propagation between parallel planes.
//!
//! The exact scalar transfer function `exp(i 2 pi dz sqrt(1/lambda^2 - fx^2 - fy^2))`
//! is applied inside the band where its phase is adequately sampled on the
//! discrete frequency grid:
//!
//! ```text
//! |f| <= 1 / (lambda * sqrt((2 * df * |dz|)^2 + 1)),   df = 1 / (n * pitch)
//! ```
//!
//! per axis. Outside that band, and for evanescent components, the transfer
//! function is zero. An optional super-Gaussian guard band attenuates the
//! window border before each hop so periodic wraparound stays negligible.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::field::{Field, Power};
use crate::grid::GridSpec;
use crate::par::{self, Exec};

/// Largest admitted |fx| and |fy| for a hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimit {
    pub fx_max: f64,
    pub fy_max: f64,
}

impl BandLimit {
    pub fn for_hop(grid: &GridSpec, dz: f64) -> Self {
        let lambda = grid.wavelength;
        let limit = |n: usize, d: f64| {
            let df = 1.0 / (n as f64 * d);
            1.0 / (lambda * ((2.0 * df * dz.abs()).powi(2) + 1.0).sqrt())
        };
        BandLimit {
            fx_max: limit(grid.nx, grid.dx),
            fy_max: if grid.is_1d() {
                f64::INFINITY
            } else {
                limit(grid.ny, grid.dy)
            },
        }
    }

    #[inline]
    pub fn admits(&self, fx: f64, fy: f64, inv_lambda_sq: f64) -> bool {
        fx.abs() <= self.fx_max && fy.abs() <= self.fy_max && fx * fx + fy * fy < inv_lambda_sq
    }
}

/// DFT sample frequencies in FFT order (`numpy.fft.fftfreq`).
pub fn fft_frequencies(n: usize, d: f64) -> Vec<f64> {
    let span = n as f64 * d;
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            k / span
        })
        .collect()
}

/// Precomputed transfer function for one `(grid, dz)` hop.
#[derive(Debug, Clone)]
pub struct PropagationPlan {
    grid: GridSpec,
    dz: f64,
    band: BandLimit,
    /// Transposed layout: element `kx * ny + ky`.
    transfer: Vec<Complex64>,
    admitted: usize,
}

impl PropagationPlan {
    pub fn new(grid: GridSpec, dz: f64, exec: Exec) -> Self {
        let band = BandLimit::for_hop(&grid, dz);
        let fx = fft_frequencies(grid.nx, grid.dx);
        let fy = if grid.is_1d() {
            vec![0.0]
        } else {
            fft_frequencies(grid.ny, grid.dy)
        };
        let inv_l2 = 1.0 / (grid.wavelength * grid.wavelength);
        let ny = grid.ny;
        let mut transfer = vec![Complex64::default(); grid.len()];
        par::for_each_row(exec, &mut transfer, ny, |kx, row| {
            let fxk = fx[kx];
            for (ky, h) in row.iter_mut().enumerate() {
                let fyk = fy[ky];
                *h = if band.admits(fxk, fyk, inv_l2) {
                    let w = (inv_l2 - fxk * fxk - fyk * fyk).sqrt();
                    Complex64::from_polar(1.0, 2.0 * PI * dz * w)
                } else {
                    Complex64::default()
                };
            }
        });
        let admitted = transfer.iter().filter(|h| h.re != 0.0 || h.im != 0.0).count();
        PropagationPlan {
            grid,
            dz,
            band,
            transfer,
            admitted,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn band(&self) -> BandLimit {
        self.band
    }

    pub fn transfer(&self) -> &[Complex64] {
        &self.transfer
    }

    pub fn admitted_band_fraction(&self) -> f64 {
        self.admitted as f64 / self.transfer.len() as f64
    }

    /// Admitted frequencies in natural row-major order (`ky * nx + kx`).
    pub fn band_mask(&self) -> Vec<bool> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut mask = vec![false; nx * ny];
        for kx in 0..nx {
            for ky in 0..ny {
                let h = self.transfer[kx * ny + ky];
                mask[ky * nx + kx] = h.re != 0.0 || h.im != 0.0;
            }
        }
        mask
    }

    fn matches(&self, grid: &GridSpec, dz: f64) -> bool {
        self.grid.same_as(grid) && self.dz.to_bits() == dz.to_bits()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingWarning {
    /// The transfer-function phase would be undersampled; part of the band is cut.
    BandLimited,
    /// A beam must travel further off axis than the admitted band supports.
    BeamExceedsSupport { required: f64, supported: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDiagnostics {
    pub dz: f64,
    pub band: BandLimit,
    /// Largest lateral offset from the axis that admitted plane waves reach over `dz`,
    /// capped at the half window.
    pub max_beam_halfwidth_supported: f64,
    pub admitted_band_fraction: f64,
    pub warnings: Vec<SamplingWarning>,
}

impl SamplingDiagnostics {
    pub fn is_alias_safe(&self) -> bool {
        !self
            .warnings
            .iter()
            .any(|w| matches!(w, SamplingWarning::BeamExceedsSupport { .. }))
    }
}

pub fn check_sampling(grid: &GridSpec, dz: f64) -> SamplingDiagnostics {
    let half_window = 0.5 * grid.width();
    if dz == 0.0 {
        return SamplingDiagnostics {
            dz,
            band: BandLimit {
                fx_max: f64::INFINITY,
                fy_max: f64::INFINITY,
            },
            max_beam_halfwidth_supported: half_window,
            admitted_band_fraction: 1.0,
            warnings: Vec::new(),
        };
    }
    let band = BandLimit::for_hop(grid, dz);
    let inv_l2 = 1.0 / (grid.wavelength * grid.wavelength);
    let fx = fft_frequencies(grid.nx, grid.dx);
    let fy = if grid.is_1d() {
        vec![0.0]
    } else {
        fft_frequencies(grid.ny, grid.dy)
    };
    let admitted: usize = fy
        .iter()
        .map(|&fyk| fx.iter().filter(|&&fxk| band.admits(fxk, fyk, inv_l2)).count())
        .sum();
    let admitted_band_fraction = admitted as f64 / grid.len() as f64;

    let nyquist = 0.5 / grid.dx;
    let f_max = band.fx_max.min(nyquist);
    let sin_t = (grid.wavelength * f_max).min(1.0);
    let reach = if sin_t >= 1.0 {
        f64::INFINITY
    } else {
        dz.abs() * sin_t / (1.0 - sin_t * sin_t).sqrt()
    };
    let mut warnings = Vec::new();
    if admitted_band_fraction < 1.0 && band.fx_max < nyquist {
        warnings.push(SamplingWarning::BandLimited);
    }
    SamplingDiagnostics {
        dz,
        band,
        max_beam_halfwidth_supported: reach.min(half_window),
        admitted_band_fraction,
        warnings,
    }
}

/// [`check_sampling`] plus a check that a beam reaching `required_halfwidth`
/// off axis is representable.
pub fn check_sampling_for(grid: &GridSpec, dz: f64, required_halfwidth: f64) -> SamplingDiagnostics {
    let mut d = check_sampling(grid, dz);
    if required_halfwidth > d.max_beam_halfwidth_supported {
        d.warnings.push(SamplingWarning::BeamExceedsSupport {
            required: required_halfwidth,
            supported: d.max_beam_halfwidth_supported,
        });
    }
    d
}

/// Super-Gaussian absorbing border over the outer `fraction` of the window
/// (half on each side of each axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardBand {
    pub fraction: f64,
}

/// Amplitude transmission at the very edge of the window.
const GUARD_EDGE_AMPLITUDE: f64 = 1e-3;

impl GuardBand {
    pub fn none() -> Self {
        GuardBand { fraction: 0.0 }
    }

    pub fn is_active(&self) -> bool {
        self.fraction > 0.0
    }

    /// Per-axis weights; the 2D attenuator is their outer product.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        let width = (0.5 * self.fraction * n as f64).round() as usize;
        if width == 0 || n < 2 {
            return vec![1.0; n];
        }
        let alpha = -GUARD_EDGE_AMPLITUDE.ln();
        (0..n)
            .map(|i| {
                let from_edge = i.min(n - 1 - i);
                if from_edge >= width {
                    1.0
                } else {
                    let t = (width - from_edge) as f64 / width as f64;
                    (-alpha * t.powi(4)).exp()
                }
            })
            .collect()
    }

    pub fn apply(&self, field: &mut Field, exec: Exec) {
        if !self.is_active() {
            return;
        }
        let grid = *field.grid();
        let wx = self.weights(grid.nx);
        let wy = if grid.is_1d() {
            vec![1.0]
        } else {
            self.weights(grid.ny)
        };
        par::for_each_row(exec, field.samples_mut(), grid.nx, |j, row| {
            let gy = wy[j];
            for (v, gx) in row.iter_mut().zip(&wx) {
                *v *= gx * gy;
            }
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub guard: GuardBand,
    /// Hops whose admitted band fraction falls below this are refused.
    pub band_floor: f64,
    pub exec: Exec,
    /// Number of transfer functions kept in memory.
    pub cache_capacity: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            guard: GuardBand { fraction: 0.1 },
            band_floor: 1e-3,
            exec: Exec::Parallel,
            cache_capacity: 4,
        }
    }
}

/// Power bookkeeping for one hop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HopLosses {
    pub dz: f64,
    pub input_power: f64,
    pub guard_absorbed: f64,
    pub band_removed: f64,
    pub admitted_band_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Propagated {
    pub field: Field,
    pub losses: HopLosses,
}

/// Propagation engine with a bounded, thread-safe plan cache.
#[derive(Debug)]
pub struct Propagator {
    config: PropagatorConfig,
    plans: Mutex<VecDeque<Arc<PropagationPlan>>>,
    ffts: Mutex<Vec<Arc<Fft2>>>,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator::new(PropagatorConfig::default())
    }
}

impl Propagator {
    pub fn new(config: PropagatorConfig) -> Self {
        Propagator {
            config,
            plans: Mutex::new(VecDeque::new()),
            ffts: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    pub fn plan(&self, grid: &GridSpec, dz: f64) -> Arc<PropagationPlan> {
        {
            let mut plans = self.plans.lock().unwrap();
            if let Some(pos) = plans.iter().position(|p| p.matches(grid, dz)) {
                let p = plans.remove(pos).unwrap();
                plans.push_back(Arc::clone(&p));
                return p;
            }
        }
        let plan = Arc::new(PropagationPlan::new(*grid, dz, self.config.exec));
        let mut plans = self.plans.lock().unwrap();
        if self.config.cache_capacity > 0 && !plans.iter().any(|p| p.matches(grid, dz)) {
            while plans.len() >= self.config.cache_capacity {
                plans.pop_front();
            }
            plans.push_back(Arc::clone(&plan));
        }
        plan
    }

    pub fn cached_plans(&self) -> usize {
        self.plans.lock().unwrap().len()
    }

    fn fft(&self, grid: &GridSpec) -> Arc<Fft2> {
        let mut ffts = self.ffts.lock().unwrap();
        if let Some(f) = ffts.iter().find(|f| f.dims() == (grid.nx, grid.ny)) {
            return Arc::clone(f);
        }
        let f = Arc::new(Fft2::new(grid.nx, grid.ny));
        ffts.push(Arc::clone(&f));
        f
    }

    /// Propagates `field` by `dz` (negative `dz` back-propagates).
    pub fn propagate(&self, field: &Field, dz: f64) -> Result<Propagated> {
        if !dz.is_finite() {
            return Err(Error::InvalidArgument(format!("dz = {dz} is not finite")));
        }
        let input_power = field.total_power();
        if dz == 0.0 {
            return Ok(Propagated {
                field: field.clone(),
                losses: HopLosses {
                    dz,
                    input_power,
                    admitted_band_fraction: 1.0,
                    ..HopLosses::default()
                },
            });
        }
        let grid = *field.grid();
        let plan = self.plan(&grid, dz);
        let admitted = plan.admitted_band_fraction();
        if admitted < self.config.band_floor {
            return Err(Error::SamplingRefused {
                dz,
                floor: self.config.band_floor,
                diagnostics: check_sampling(&grid, dz),
            });
        }
        let exec = self.config.exec;
        let mut work = field.clone();
        self.config.guard.apply(&mut work, exec);
        let guarded_power = work.total_power();

        let fft = self.fft(&grid);
        let mut spectrum = fft.forward(exec, work.into_samples());
        let transfer = plan.transfer();
        let ny = grid.ny;
        par::for_each_row(exec, &mut spectrum, ny, |kx, row| {
            let h = &transfer[kx * ny..(kx + 1) * ny];
            for (s, h) in row.iter_mut().zip(h) {
                *s *= h;
            }
        });
        let out = Field::from_parts(grid, field.z() + dz, fft.inverse(exec, spectrum));
        let output_power = out.total_power();
        Ok(Propagated {
            field: out,
            losses: HopLosses {
                dz,
                input_power,
                guard_absorbed: (input_power - guarded_power).max(0.0),
                band_removed: (guarded_power - output_power).max(0.0),
                admitted_band_fraction: admitted,
            },
        })
    }
}

/// One-off propagation without a guard band or plan reuse.
pub fn propagate(field: &Field, dz: f64) -> Result<Field> {
    let p = Propagator::new(PropagatorConfig {
        guard: GuardBand::none(),
        cache_capacity: 0,
        ..PropagatorConfig::default()
    });
    Ok(p.propagate(field, dz)?.field)
}
