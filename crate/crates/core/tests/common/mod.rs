//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use whichway::elements::apply_circular_aperture;
use whichway::metrics::{first_radial_minimum, radial_profile};
use whichway::propagation::GuardBand;
use whichway::{total_power, Complex64, Field, GridSpec, Propagator, PropagatorConfig};

pub const LAMBDA: f64 = 650e-9;

pub fn unguarded() -> Propagator {
    Propagator::new(PropagatorConfig {
        guard: GuardBand::none(),
        ..PropagatorConfig::default()
    })
}

pub fn random_field(grid: GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Field::new(grid, 0.0, samples).unwrap()
}

/// Root of the power-weighted squared difference relative to `b`.
pub fn relative_error(a: &Field, b: &Field) -> f64 {
    let num: f64 = a.samples().iter().zip(b.samples()).map(|(p, q)| (p - q).norm_sqr()).sum();
    let den: f64 = b.samples().iter().map(|q| q.norm_sqr()).sum();
    (num / den).sqrt()
}

/// 1/e^2 radius from the second moment of the x-marginal.
pub fn second_moment_radius(field: &Field) -> f64 {
    let g = *field.grid();
    let (mut w, mut wxx) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = field.at(i, j).norm_sqr();
            w += v;
            wxx += v * g.x(i).powi(2);
        }
    }
    2.0 * (wxx / w).sqrt()
}

pub struct GaussianCheck {
    pub measured: f64,
    pub expected: f64,
    pub power_loss: f64,
}

impl GaussianCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.measured - self.expected) / self.expected).abs()
    }
}

/// Waist 200 um at z = 0 propagated 0.2 m.
pub fn gaussian_beam() -> GaussianCheck {
    let w0 = 200e-6;
    let z = 0.2;
    let grid = GridSpec::square(1024, 2.5e-6, LAMBDA).unwrap();
    let u = Field::from_fn(grid, 0.0, |x, y| Complex64::new((-(x * x + y * y) / (w0 * w0)).exp(), 0.0)).unwrap();
    let out = Propagator::default().propagate(&u, z).unwrap();
    let zr = std::f64::consts::PI * w0 * w0 / LAMBDA;
    GaussianCheck {
        measured: second_moment_radius(&out.field),
        expected: w0 * (1.0 + (z / zr).powi(2)).sqrt(),
        power_loss: 1.0 - total_power(&out.field) / total_power(&u),
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    // Bessel's integral; the integrand is periodic so the trapezoid rule
    // converges geometrically.
    let m = 400;
    let h = std::f64::consts::PI / m as f64;
    let f = |t: f64| (t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / std::f64::consts::PI
}

pub struct AiryCheck {
    pub first_zero: f64,
    pub expected_zero: f64,
    /// Peak-normalized RMS error out to 2.5 first-zero radii.
    pub rms: f64,
}

impl AiryCheck {
    pub fn zero_error(&self) -> f64 {
        ((self.first_zero - self.expected_zero) / self.expected_zero).abs()
    }
}

/// 50 um aperture observed 0.1 m away (Fresnel number about 0.01).
pub fn airy_far_field() -> AiryCheck {
    let d = 50e-6;
    let z = 0.1;
    let grid = GridSpec::square(2048, 4e-6, LAMBDA).unwrap();
    let u = Field::from_fn(grid, 0.0, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    let u = apply_circular_aperture(&u, (0.0, 0.0), d).unwrap();
    let map = Propagator::default().propagate(&u, z).unwrap().field.intensity();

    let zero = 1.22 * LAMBDA * z / d;
    let profile = radial_profile(&map, (0.0, 0.0), 1.5 * zero, grid.dx / 4.0);
    let first_zero = first_radial_minimum(&profile, 8).unwrap_or(f64::NAN);

    let j = grid.ny / 2;
    let peak = map.at(grid.nx / 2, j);
    let (mut sq, mut count) = (0.0, 0);
    for i in grid.nx / 2..grid.nx {
        let r = grid.x(i);
        if r > 2.5 * zero {
            break;
        }
        let v = std::f64::consts::PI * d * r / (LAMBDA * (r * r + z * z).sqrt());
        let airy = if v == 0.0 { 1.0 } else { (2.0 * bessel_j1(v) / v).powi(2) };
        sq += (map.at(i, j) / peak - airy).powi(2);
        count += 1;
    }
    AiryCheck {
        first_zero,
        expected_zero: zero,
        rms: (sq / count as f64).sqrt(),
    }
}

/// Worst composition, reversibility and unitarity errors over `cases`
/// random fields on a 64 x 64 grid with steps that admit the full band.
pub fn propagator_invariants(cases: u64) -> (f64, f64, f64) {
    let grid = GridSpec::square(64, 2.5e-6, LAMBDA).unwrap();
    let prop = unguarded();
    let mut rng = ChaCha8Rng::seed_from_u64(cases);
    let (mut comp, mut rev, mut unit) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..cases {
        let a = rng.random_range(-2e-4..2e-4);
        let b = rng.random_range(-2e-4..2e-4);
        for dz in [a, b, a + b] {
            assert_eq!(prop.plan(&grid, dz).admitted_band_fraction(), 1.0);
        }
        let u = random_field(grid, seed);
        let ua = prop.propagate(&u, a).unwrap().field;
        let two = prop.propagate(&ua, b).unwrap().field;
        let one = prop.propagate(&u, a + b).unwrap().field;
        comp = comp.max(relative_error(&two, &one));
        let back = prop.propagate(&ua, -a).unwrap().field;
        rev = rev.max(relative_error(&back, &u));
        unit = unit.max((total_power(&ua) - total_power(&u)).abs() / total_power(&u));
    }
    (comp, rev, unit)
}
