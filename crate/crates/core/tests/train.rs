use proptest::prelude::*;

use whichway::elements::{apply_circular_aperture, apply_wire_grid, run_train};
use whichway::metrics::{extract_profile, fringe_minima_in};
use whichway::scenarios::{Closure, Illumination, Numerics};
use whichway::{
    create_plane_wave, total_power, Complex64, ExperimentGeometry, Field, GridSpec, OpticalTrain,
    PinholeOpening, Propagator, TrainSetup,
};

fn line_numerics(geometry: &ExperimentGeometry) -> Numerics {
    Numerics::new(geometry, 8192, 2.5e-6, true).unwrap()
}

fn run_to(geometry: &ExperimentGeometry, numerics: &Numerics, setup: &TrainSetup, z: f64) -> Field {
    let src = create_plane_wave(numerics.grid, Complex64::new(1.0, 0.0)).unwrap();
    run_train(&numerics.propagator(), &src, &geometry.train(setup), z)
        .unwrap()
        .field
}

fn centroid_x(field: &Field) -> f64 {
    let g = *field.grid();
    let (mut w, mut wx) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = field.at(i, j).norm_sqr();
            w += v;
            wx += v * g.x(i);
        }
    }
    wx / w
}

#[test]
fn empty_train_to_own_plane_is_identity() {
    let grid = GridSpec::line(64, 1e-6, 650e-9).unwrap();
    let u = Field::from_fn(grid, 0.3, |x, _| Complex64::new(x * 1e5, 1.0)).unwrap();
    let out = run_train(&Propagator::default(), &u, &OpticalTrain::new(), 0.3).unwrap();
    assert_eq!(out.field.samples(), u.samples());
}

#[test]
fn focal_plane_fringe_period() {
    let g = ExperimentGeometry::default();
    let n = line_numerics(&g);
    let field = run_to(&g, &n, &TrainSetup::default(), g.sigma1_z);
    let profile = extract_profile(&field.intensity(), (0.0, 0.0)).unwrap();
    let p = g.fringe_period();
    let minima = fringe_minima_in(&profile, (-4.01 * p, 4.01 * p));
    assert_eq!(minima.len(), 8);
    let period = (minima[7] - minima[0]) / 7.0;
    assert!(((period - 65e-6) / 65e-6).abs() < 0.02, "period {period}");
}

#[test]
fn single_beam_centroid_follows_chief_ray() {
    let g = ExperimentGeometry::default();
    let n = line_numerics(&g);
    for (opening, x0) in [(PinholeOpening::FirstOnly, g.pinhole1_x()), (PinholeOpening::SecondOnly, -g.pinhole1_x())] {
        let setup = TrainSetup {
            opening,
            aperture_stop: false,
            ..TrainSetup::default()
        };
        let field = run_to(&g, &n, &setup, g.sigma2_z);
        let expected = -x0 * (g.sigma2_z - g.focal_length) / g.focal_length;
        let c = centroid_x(&field);
        assert!(((c - expected) / expected).abs() < 0.02, "centroid {c}, expected {expected}");
    }
}

#[test]
fn both_open_focal_pattern_is_even() {
    let g = ExperimentGeometry::default();
    let n = line_numerics(&g);
    let map = run_to(&g, &n, &TrainSetup::default(), g.sigma1_z).intensity();
    let v = map.values();
    let peak = map.max();
    let nx = v.len();
    for i in 1..nx {
        assert!((v[i] - v[nx - i]).abs() <= 1e-6 * peak, "asymmetry at {i}");
    }
}

#[test]
fn both_open_focal_pattern_is_even_in_2d() {
    let g = ExperimentGeometry::default();
    let n = Numerics::new(&g, 2048, 5e-6, false).unwrap();
    let map = run_to(&g, &n, &TrainSetup::default(), g.sigma1_z).intensity();
    let peak = map.max();
    let nx = map.grid().nx;
    for j in 0..map.grid().ny {
        let row = map.row(j);
        for i in 1..nx {
            assert!((row[i] - row[nx - i]).abs() <= 1e-6 * peak);
        }
    }
}

#[test]
fn selector_and_mask_closures_agree_on_far_plane_flux() {
    let g = ExperimentGeometry::default();
    let n = Numerics::new(&g, 4096, 2.5e-6, false).unwrap();
    for (mask, sel) in [
        (Illumination::First(Closure::Mask), Illumination::First(Closure::Selector)),
        (Illumination::Second(Closure::Mask), Illumination::Second(Closure::Selector)),
    ] {
        let a = total_power(&run_to(&g, &n, &mask.setup(), g.sigma2_z));
        let b = total_power(&run_to(&g, &n, &sel.setup(), g.sigma2_z));
        assert!(((a - b) / a).abs() < 0.005, "mask {a}, selector {b}");
    }
}

#[test]
fn uniform_field_through_aperture_passes_area_ratio() {
    let grid = GridSpec::square(1024, 2.5e-6, 650e-9).unwrap();
    let u = create_plane_wave(grid, Complex64::new(1.0, 0.0)).unwrap();
    let d = 500e-6;
    let out = apply_circular_aperture(&u, (1e-4, -2e-4), d).unwrap();
    let ratio = total_power(&out) / total_power(&u);
    let expected = std::f64::consts::PI * 0.25 * d * d / (grid.width() * grid.height());
    assert!(((ratio - expected) / expected).abs() < 0.005);
}

#[test]
fn wire_in_the_dark_changes_nothing() {
    let grid = GridSpec::square(256, 2.5e-6, 650e-9).unwrap();
    let u = Field::from_fn(grid, 0.0, |x, _| {
        if x < 0.0 {
            Complex64::new(1.0, 0.5)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .unwrap();
    let out = apply_wire_grid(&u, &[1e-4], 10e-6).unwrap();
    assert_eq!(out.samples(), u.samples());
    assert_eq!(total_power(&out), total_power(&u));
}

fn train_for(opening: PinholeOpening) -> (ExperimentGeometry, TrainSetup) {
    let g = ExperimentGeometry::default();
    let setup = TrainSetup {
        opening,
        wires: vec![32.5e-6],
        ..TrainSetup::default()
    };
    (g, setup)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn train_is_linear(ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64, bi in -2.0..2.0f64, k in 1.0e4..1.0e5f64) {
        let (g, setup) = train_for(PinholeOpening::Both);
        let n = Numerics::new(&g, 4096, 2.5e-6, true).unwrap();
        let prop = n.propagator();
        let train = g.train(&setup);
        let u = Field::from_fn(n.grid, 0.0, |x, _| Complex64::new(1.0, 0.0) + Complex64::from_polar(0.3, k * x)).unwrap();
        let v = Field::from_fn(n.grid, 0.0, |x, _| Complex64::new((x * 300.0).cos(), (x * k).sin())).unwrap();
        let (a, b) = (Complex64::new(ar, ai), Complex64::new(br, bi));
        let combined = run_train(&prop, &u.combine(a, &v, b).unwrap(), &train, g.sigma2_z).unwrap().field;
        let ru = run_train(&prop, &u, &train, g.sigma2_z).unwrap().field;
        let rv = run_train(&prop, &v, &train, g.sigma2_z).unwrap().field;
        let sum = ru.combine(a, &rv, b).unwrap();
        let num: f64 = combined.samples().iter().zip(sum.samples()).map(|(p, q)| (p - q).norm_sqr()).sum();
        let den: f64 = sum.samples().iter().map(|q| q.norm_sqr()).sum();
        prop_assume!(den > 0.0);
        prop_assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn masks_are_idempotent_up_to_edge_weights(cx in -1e-4..1e-4f64, cy in -1e-4..1e-4f64, d in 2e-5..3e-4f64) {
        let grid = GridSpec::square(192, 2.5e-6, 650e-9).unwrap();
        let ones = create_plane_wave(grid, Complex64::new(1.0, 0.0)).unwrap();
        let once = apply_circular_aperture(&ones, (cx, cy), d).unwrap();
        let twice = apply_circular_aperture(&once, (cx, cy), d).unwrap();
        for (t1, t2) in once.samples().iter().zip(twice.samples()) {
            let (t1, t2) = (t1.re, t2.re);
            prop_assert!((0.0..=1.0).contains(&t1));
            prop_assert!(t2 <= t1 + 1e-15);
            prop_assert!((t2 - t1 * t1).abs() < 1e-12);
            if t1 == 0.0 || t1 == 1.0 {
                prop_assert_eq!(t2, t1);
            }
        }
    }
}
