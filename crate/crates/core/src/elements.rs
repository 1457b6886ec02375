//! Bench components: transmittance masks, the thin lens, and the optical
//! train that sequences them along z.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::coverage::{disk_cell_fraction, interval_overlap};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::par::{self, Exec};
use crate::propagation::{HopLosses, Propagator};

/// Physical constants of the bench. Lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGeometry {
    pub wavelength: f64,
    pub focal_length: f64,
    pub pinhole_diameter: f64,
    /// Center-to-center.
    pub pinhole_separation: f64,
    pub selector_z: f64,
    pub selector_diameter: f64,
    pub as_z: f64,
    pub as_diameter: f64,
    pub sigma1_z: f64,
    pub sigma2_z: f64,
    pub wire_thickness: f64,
    /// Wire x-coordinates at the first observation plane.
    pub wire_positions: Vec<f64>,
}

impl Default for ExperimentGeometry {
    fn default() -> Self {
        ExperimentGeometry {
            wavelength: 650e-9,
            focal_length: 0.20,
            pinhole_diameter: 250e-6,
            pinhole_separation: 2e-3,
            selector_z: 13e-3,
            selector_diameter: 3e-3,
            as_z: 210e-3,
            as_diameter: 500e-6,
            sigma1_z: 0.20,
            sigma2_z: 0.515,
            wire_thickness: 10e-6,
            wire_positions: Vec::new(),
        }
    }
}

impl ExperimentGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("wavelength", self.wavelength),
            ("focal_length", self.focal_length),
            ("pinhole_diameter", self.pinhole_diameter),
            ("pinhole_separation", self.pinhole_separation),
            ("selector_z", self.selector_z),
            ("selector_diameter", self.selector_diameter),
            ("as_z", self.as_z),
            ("as_diameter", self.as_diameter),
            ("sigma1_z", self.sigma1_z),
            ("sigma2_z", self.sigma2_z),
            ("wire_thickness", self.wire_thickness),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} = {v} must be > 0")));
            }
        }
        if self.sigma1_z >= self.sigma2_z {
            return Err(Error::InvalidGeometry(format!(
                "sigma1_z = {} must be below sigma2_z = {}",
                self.sigma1_z, self.sigma2_z
            )));
        }
        if self.pinhole_separation <= self.pinhole_diameter {
            return Err(Error::InvalidGeometry(
                "pinhole_separation must exceed pinhole_diameter".into(),
            ));
        }
        if self.wire_positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGeometry("wire positions must be finite".into()));
        }
        check_wires_disjoint(&self.wire_positions, self.wire_thickness)
    }

    pub fn separation_in_wavelengths(&self) -> f64 {
        self.pinhole_separation / self.wavelength
    }

    /// x-coordinate of pinhole 1 (pinhole 2 sits at the mirror position).
    pub fn pinhole1_x(&self) -> f64 {
        0.5 * self.pinhole_separation
    }

    /// Two-source fringe period in the focal plane, `lambda f / s`.
    pub fn fringe_period(&self) -> f64 {
        self.wavelength * self.focal_length / self.pinhole_separation
    }

    /// Geometric center of the beam from a pinhole at `x0` on a plane at `z`:
    /// the chief ray runs from the pinhole through the focus.
    pub fn beam_center(&self, x0: f64, z: f64) -> f64 {
        x0 * (1.0 - z / self.focal_length)
    }

    /// Expected |x| of the which-way lobes on the second observation plane.
    pub fn sigma2_lobe_offset(&self) -> f64 {
        (0.5 * self.pinhole_separation * (self.sigma2_z - self.focal_length) / self.focal_length).abs()
    }

    /// Radius of the first dark ring of a single pinhole's focal spot.
    pub fn airy_first_zero(&self) -> f64 {
        1.22 * self.wavelength * self.focal_length / self.pinhole_diameter
    }

    pub fn train(&self, setup: &TrainSetup) -> OpticalTrain {
        let mut t = OpticalTrain::new();
        t.add(0.0, ElementSpec::ThinLens {
            focal_length: self.focal_length,
        });
        t.add(0.0, ElementSpec::DualPinhole {
            separation: self.pinhole_separation,
            diameter: self.pinhole_diameter,
            open: setup.opening,
        });
        let sel_x = match setup.selector {
            SelectorPosition::Centered => 0.0,
            SelectorPosition::PassFirst => self.beam_center(self.pinhole1_x(), self.selector_z),
            SelectorPosition::PassSecond => self.beam_center(-self.pinhole1_x(), self.selector_z),
        };
        t.add(self.selector_z, ElementSpec::CircularAperture {
            center_x: sel_x,
            center_y: 0.0,
            diameter: self.selector_diameter,
        });
        if !setup.wires.is_empty() {
            t.add(self.sigma1_z, ElementSpec::WireGrid {
                positions: setup.wires.clone(),
                thickness: self.wire_thickness,
                orientation: WireOrientation::Vertical,
            });
        }
        if setup.aperture_stop {
            t.add(self.as_z, ElementSpec::CircularAperture {
                center_x: 0.0,
                center_y: 0.0,
                diameter: self.as_diameter,
            });
        }
        t.observe("sigma1", self.sigma1_z);
        t.observe("sigma2", self.sigma2_z);
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PinholeOpening {
    #[default]
    Both,
    /// Only pinhole 1 (at +x) transmits.
    FirstOnly,
    /// Only pinhole 2 (at -x) transmits.
    SecondOnly,
}

impl PinholeOpening {
    fn passes(self, first: bool) -> bool {
        match self {
            PinholeOpening::Both => true,
            PinholeOpening::FirstOnly => first,
            PinholeOpening::SecondOnly => !first,
        }
    }
}

/// Horizontal placement of the selector aperture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectorPosition {
    #[default]
    Centered,
    /// Centered on beam 1 at the selector plane; blocks beam 2.
    PassFirst,
    PassSecond,
}

/// Variable parts of the bench for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSetup {
    pub opening: PinholeOpening,
    pub selector: SelectorPosition,
    pub wires: Vec<f64>,
    pub aperture_stop: bool,
}

impl Default for TrainSetup {
    fn default() -> Self {
        TrainSetup {
            opening: PinholeOpening::Both,
            selector: SelectorPosition::Centered,
            wires: Vec::new(),
            aperture_stop: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WireOrientation {
    /// Wires run along y; positions are x-coordinates.
    #[default]
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementSpec {
    ThinLens {
        focal_length: f64,
    },
    CircularAperture {
        center_x: f64,
        center_y: f64,
        diameter: f64,
    },
    DualPinhole {
        separation: f64,
        diameter: f64,
        open: PinholeOpening,
    },
    WireGrid {
        positions: Vec<f64>,
        thickness: f64,
        orientation: WireOrientation,
    },
}

impl ElementSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidElement(format!("{name} = {v} must be > 0")))
            }
        };
        match self {
            ElementSpec::ThinLens { focal_length } => {
                if *focal_length == 0.0 || !focal_length.is_finite() {
                    return Err(Error::InvalidElement("focal length must be finite and nonzero".into()));
                }
                Ok(())
            }
            ElementSpec::CircularAperture { diameter, .. } => positive("diameter", *diameter),
            ElementSpec::DualPinhole {
                separation,
                diameter,
                ..
            } => {
                positive("diameter", *diameter)?;
                if separation <= diameter {
                    return Err(Error::OverlappingPinholes {
                        separation: *separation,
                        diameter: *diameter,
                    });
                }
                Ok(())
            }
            ElementSpec::WireGrid {
                positions,
                thickness,
                ..
            } => {
                positive("thickness", *thickness)?;
                check_wires_disjoint(positions, *thickness)
            }
        }
    }

    pub fn apply(&self, field: &Field) -> Result<Field> {
        match self {
            ElementSpec::ThinLens { focal_length } => apply_thin_lens(field, *focal_length),
            ElementSpec::CircularAperture {
                center_x,
                center_y,
                diameter,
            } => apply_circular_aperture(field, (*center_x, *center_y), *diameter),
            ElementSpec::DualPinhole {
                separation,
                diameter,
                open,
            } => apply_pinholes(field, *separation, *diameter, *open),
            ElementSpec::WireGrid {
                positions,
                thickness,
                orientation,
            } => apply_wires(field, positions, *thickness, *orientation),
        }
    }
}

fn check_wires_disjoint(positions: &[f64], thickness: f64) -> Result<()> {
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] < thickness {
            return Err(Error::OverlappingWires { position: w[1] });
        }
    }
    Ok(())
}

/// Multiplies every sample by `t(i, x, y)`, evaluated per cell.
fn apply_transmittance<F>(field: &Field, t: F) -> Field
where
    F: Fn(usize, f64, f64) -> f64 + Sync + Send,
{
    let grid = *field.grid();
    let mut out = field.clone();
    par::for_each_row(Exec::Parallel, out.samples_mut(), grid.nx, |j, row| {
        let y = grid.y(j);
        for (i, v) in row.iter_mut().enumerate() {
            let w = t(i, grid.x(i), y);
            if w != 1.0 {
                *v *= w;
            }
        }
    });
    out
}

/// Cell coverage of a disk (a slit of the same width in 1D mode).
fn disk_coverage(grid: &GridSpec, x: f64, y: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let hx = 0.5 * grid.dx;
    if grid.is_1d() {
        return interval_overlap(x - hx, x + hx, cx - r, cx + r) / grid.dx;
    }
    let hy = 0.5 * grid.dy;
    disk_cell_fraction(x - hx - cx, x + hx - cx, y - hy - cy, y + hy - cy, r)
}

fn disk_intersects_window(grid: &GridSpec, cx: f64, cy: f64, r: f64) -> bool {
    let (x0, x1) = grid.x_bounds();
    let (y0, y1) = grid.y_bounds();
    if grid.is_1d() {
        return cx + r > x0 && cx - r < x1;
    }
    let nx = cx.clamp(x0, x1);
    let ny = cy.clamp(y0, y1);
    (nx - cx).powi(2) + (ny - cy).powi(2) < r * r
}

pub(crate) fn disk_inside_window(grid: &GridSpec, cx: f64, cy: f64, r: f64) -> bool {
    let (x0, x1) = grid.x_bounds();
    let (y0, y1) = grid.y_bounds();
    cx - r >= x0 && cx + r <= x1 && (grid.is_1d() || (cy - r >= y0 && cy + r <= y1))
}

/// Largest phase step between adjacent samples of the lens phase on `grid`.
pub fn lens_phase_step(grid: &GridSpec, f: f64) -> f64 {
    let k = PI / (grid.wavelength * f);
    // Largest adjacent-sample phase step occurs at the outermost sample.
    let edge_step = |n: usize, d: f64, x_edge: f64| {
        if n < 2 {
            0.0
        } else {
            (k * (2.0 * x_edge * d - d * d)).abs()
        }
    };
    let x_edge = grid.x(0).abs().max(grid.x(grid.nx - 1).abs());
    let mut step = edge_step(grid.nx, grid.dx, x_edge);
    if !grid.is_1d() {
        let y_edge = grid.y(0).abs().max(grid.y(grid.ny - 1).abs());
        step = step.max(edge_step(grid.ny, grid.dy, y_edge));
    }
    step
}

/// Ideal thin lens: multiplies by `exp(-i pi (x^2 + y^2) / (lambda f))`.
pub fn apply_thin_lens(field: &Field, f: f64) -> Result<Field> {
    ElementSpec::ThinLens { focal_length: f }.validate()?;
    let grid = *field.grid();
    let k = PI / (grid.wavelength * f);
    let step = lens_phase_step(&grid, f);
    if step > PI {
        return Err(Error::LensUndersampled { step });
    }
    let mut out = field.clone();
    let wx: Vec<Complex64> = (0..grid.nx)
        .map(|i| Complex64::from_polar(1.0, -k * grid.x(i).powi(2)))
        .collect();
    par::for_each_row(Exec::Parallel, out.samples_mut(), grid.nx, |j, row| {
        let py = Complex64::from_polar(1.0, -k * grid.y(j).powi(2));
        for (v, px) in row.iter_mut().zip(&wx) {
            *v *= px * py;
        }
    });
    Ok(out)
}

/// Opaque screen with a circular hole (a slit in 1D mode), anti-aliased edges.
pub fn apply_circular_aperture(field: &Field, center: (f64, f64), diameter: f64) -> Result<Field> {
    ElementSpec::CircularAperture {
        center_x: center.0,
        center_y: center.1,
        diameter,
    }
    .validate()?;
    let grid = *field.grid();
    let r = 0.5 * diameter;
    if !disk_intersects_window(&grid, center.0, center.1, r) {
        return Err(Error::ApertureOutsideWindow);
    }
    Ok(apply_transmittance(field, |_, x, y| {
        disk_coverage(&grid, x, y, center.0, center.1, r)
    }))
}

/// Two equal pinholes at `x = +-separation/2`, `y = 0`.
pub fn apply_dual_pinhole(field: &Field, separation: f64, diameter: f64) -> Result<Field> {
    apply_pinholes(field, separation, diameter, PinholeOpening::Both)
}

/// Dual pinhole mask with one hole optionally closed.
pub fn apply_pinholes(
    field: &Field,
    separation: f64,
    diameter: f64,
    open: PinholeOpening,
) -> Result<Field> {
    ElementSpec::DualPinhole {
        separation,
        diameter,
        open,
    }
    .validate()?;
    let grid = *field.grid();
    let r = 0.5 * diameter;
    let x1 = 0.5 * separation;
    if !disk_inside_window(&grid, x1, 0.0, r) || !disk_inside_window(&grid, -x1, 0.0, r) {
        return Err(Error::PinholeClipped);
    }
    let (p1, p2) = (open.passes(true), open.passes(false));
    Ok(apply_transmittance(field, |_, x, y| {
        let mut t = 0.0;
        if p1 {
            t += disk_coverage(&grid, x, y, x1, 0.0, r);
        }
        if p2 {
            t += disk_coverage(&grid, x, y, -x1, 0.0, r);
        }
        t
    }))
}

/// Opaque wires of width `thickness` centered on `positions`.
pub fn apply_wire_grid(field: &Field, positions: &[f64], thickness: f64) -> Result<Field> {
    apply_wires(field, positions, thickness, WireOrientation::Vertical)
}

pub fn apply_wires(
    field: &Field,
    positions: &[f64],
    thickness: f64,
    orientation: WireOrientation,
) -> Result<Field> {
    ElementSpec::WireGrid {
        positions: positions.to_vec(),
        thickness,
        orientation,
    }
    .validate()?;
    if positions.is_empty() {
        return Ok(field.clone());
    }
    let grid = *field.grid();
    if orientation == WireOrientation::Horizontal && grid.is_1d() {
        return Err(Error::InvalidElement(
            "horizontal wires need a 2D grid".into(),
        ));
    }
    let h = 0.5 * thickness;
    let blocked = |c: f64, d: f64| -> f64 {
        positions
            .iter()
            .map(|p| interval_overlap(c - 0.5 * d, c + 0.5 * d, p - h, p + h) / d)
            .sum::<f64>()
            .min(1.0)
    };
    Ok(match orientation {
        WireOrientation::Vertical => {
            let t: Vec<f64> = (0..grid.nx).map(|i| 1.0 - blocked(grid.x(i), grid.dx)).collect();
            apply_transmittance(field, |i, _, _| t[i])
        }
        WireOrientation::Horizontal => apply_transmittance(field, |_, _, y| 1.0 - blocked(y, grid.dy)),
    })
}

/// Elements sharing one z plane, applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub z: f64,
    pub elements: Vec<ElementSpec>,
}

/// Elements ordered along z, plus labelled observation planes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpticalTrain {
    stages: Vec<Stage>,
    observations: Vec<(String, f64)>,
}

impl OpticalTrain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `element` at `z`, after any element already placed there.
    pub fn add(&mut self, z: f64, element: ElementSpec) -> &mut Self {
        match self.stages.iter().position(|s| s.z >= z) {
            Some(k) if self.stages[k].z == z => self.stages[k].elements.push(element),
            Some(k) => self.stages.insert(
                k,
                Stage {
                    z,
                    elements: vec![element],
                },
            ),
            None => self.stages.push(Stage {
                z,
                elements: vec![element],
            }),
        }
        self
    }

    pub fn with(mut self, z: f64, element: ElementSpec) -> Self {
        self.add(z, element);
        self
    }

    pub fn observe(&mut self, label: &str, z: f64) -> &mut Self {
        self.observations.push((label.to_string(), z));
        self.observations.sort_by(|a, b| a.1.total_cmp(&b.1));
        self
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn observations(&self) -> &[(String, f64)] {
        &self.observations
    }

    pub fn observation(&self, label: &str) -> Option<f64> {
        self.observations.iter().find(|(l, _)| l == label).map(|(_, z)| *z)
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.stages.windows(2) {
            if w[0].z >= w[1].z {
                return Err(Error::InvalidElement("train stages must be strictly ordered in z".into()));
            }
        }
        self.stages
            .iter()
            .flat_map(|s| &s.elements)
            .try_for_each(ElementSpec::validate)
    }
}

/// Losses and band usage accumulated over a train run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunDiagnostics {
    pub hops: Vec<HopLosses>,
}

impl RunDiagnostics {
    pub fn guard_absorbed(&self) -> f64 {
        self.hops.iter().map(|h| h.guard_absorbed).sum()
    }

    pub fn band_removed(&self) -> f64 {
        self.hops.iter().map(|h| h.band_removed).sum()
    }

    /// Guard-band losses relative to the power entering each hop, summed.
    pub fn guard_absorbed_fraction(&self) -> f64 {
        self.hops
            .iter()
            .filter(|h| h.input_power > 0.0)
            .map(|h| h.guard_absorbed / h.input_power)
            .sum()
    }

    pub fn band_removed_fraction(&self) -> f64 {
        self.hops
            .iter()
            .filter(|h| h.input_power > 0.0)
            .map(|h| h.band_removed / h.input_power)
            .sum()
    }

    pub fn min_admitted_band_fraction(&self) -> f64 {
        self.hops
            .iter()
            .map(|h| h.admitted_band_fraction)
            .fold(1.0, f64::min)
    }

    pub fn extend(&mut self, other: &RunDiagnostics) {
        self.hops.extend_from_slice(&other.hops);
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub field: Field,
    pub diagnostics: RunDiagnostics,
}

/// Runs `input` through the train up to `stop_at_z`.
///
/// Elements with `input.z <= z < stop_at_z` are applied; the returned field
/// is the one incident on `stop_at_z`, so runs can be resumed from it.
pub fn run_train(
    propagator: &Propagator,
    input: &Field,
    train: &OpticalTrain,
    stop_at_z: f64,
) -> Result<TrainOutput> {
    if !(stop_at_z >= input.z()) {
        return Err(Error::InvalidArgument(format!(
            "stop plane {stop_at_z} lies before the input plane {}",
            input.z()
        )));
    }
    train.validate()?;
    let mut diagnostics = RunDiagnostics::default();
    let mut field = input.clone();
    for stage in train
        .stages
        .iter()
        .filter(|s| s.z >= input.z() && s.z < stop_at_z)
    {
        if stage.z > field.z() {
            let hop = propagator.propagate(&field, stage.z - field.z())?;
            diagnostics.hops.push(hop.losses);
            field = hop.field.with_z(stage.z);
        }
        for e in &stage.elements {
            field = e.apply(&field)?;
        }
    }
    if stop_at_z > field.z() {
        let hop = propagator.propagate(&field, stop_at_z - field.z())?;
        diagnostics.hops.push(hop.losses);
        field = hop.field.with_z(stop_at_z);
    }
    Ok(TrainOutput { field, diagnostics })
}
