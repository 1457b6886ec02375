//! The experiment matrix: baseline interference and which-way runs, the
//! six-run wire suite, cross-term decomposition, wire sweeps and photon
//! counting.

use std::fmt;
use std::str::FromStr;

use crate::elements::{
    apply_wires, disk_inside_window, lens_phase_step, run_train, ExperimentGeometry,
    PinholeOpening, RunDiagnostics, SelectorPosition, TrainSetup, WireOrientation,
};
use crate::error::{Error, Result};
use crate::field::{create_plane_wave, intensity, Field, IntensityMap, Power};
use crate::grid::GridSpec;
use crate::metrics::{
    central_visibilities, channel_width_x, crosstalk, decompose, detect_rois, extract_profile,
    flux_in_roi, fringe_minima_in, fringe_visibility, locate_fringe_minima, reduction_r,
    sample_photons_in_rois, Channel, DecompositionReport, FluxReport, HistogramVisibility,
    PhotonEvents, PhotonHistogram, Profile, Roi, VisibilityReport,
};
use crate::par::Exec;
use crate::propagation::{check_sampling, GuardBand, Propagator, PropagatorConfig, SamplingDiagnostics};
use crate::Complex64;

/// Steps used by the default wire sweep over one fringe period.
pub const DEFAULT_SWEEP_STEPS: usize = 27;

/// Note attached to suite reports about the plane spacing quoted alongside
/// the second observation plane.
pub const PLANE_DISTANCE_NOTE: &str = "the second observation plane is placed at its absolute z; \
the separation quoted with it elsewhere (0.325 m) does not match sigma2_z - sigma1_z";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    Sigma1Interference,
    Sigma2Control,
    Fig4aP1ClosedControl,
    Fig4aP1ClosedWire,
    Fig4bP2ClosedControl,
    Fig4bP2ClosedWire,
    Fig4cBothOpenControl,
    Fig4cBothOpenWire,
    DecompositionSigma1,
    DecompositionSigma2,
    WireSweep,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 11] = [
        ScenarioId::Sigma1Interference,
        ScenarioId::Sigma2Control,
        ScenarioId::Fig4aP1ClosedControl,
        ScenarioId::Fig4aP1ClosedWire,
        ScenarioId::Fig4bP2ClosedControl,
        ScenarioId::Fig4bP2ClosedWire,
        ScenarioId::Fig4cBothOpenControl,
        ScenarioId::Fig4cBothOpenWire,
        ScenarioId::DecompositionSigma1,
        ScenarioId::DecompositionSigma2,
        ScenarioId::WireSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Sigma1Interference => "Sigma1Interference",
            ScenarioId::Sigma2Control => "Sigma2Control",
            ScenarioId::Fig4aP1ClosedControl => "Fig4a_P1Closed_Control",
            ScenarioId::Fig4aP1ClosedWire => "Fig4a_P1Closed_Wire",
            ScenarioId::Fig4bP2ClosedControl => "Fig4b_P2Closed_Control",
            ScenarioId::Fig4bP2ClosedWire => "Fig4b_P2Closed_Wire",
            ScenarioId::Fig4cBothOpenControl => "Fig4c_BothOpen_Control",
            ScenarioId::Fig4cBothOpenWire => "Fig4c_BothOpen_Wire",
            ScenarioId::DecompositionSigma1 => "Decomposition_Sigma1",
            ScenarioId::DecompositionSigma2 => "Decomposition_Sigma2",
            ScenarioId::WireSweep => "WireSweep",
        }
    }

    fn fig4_leg(self) -> Option<(Fig4Set, bool)> {
        Some(match self {
            ScenarioId::Fig4aP1ClosedControl => (Fig4Set::P1Closed, false),
            ScenarioId::Fig4aP1ClosedWire => (Fig4Set::P1Closed, true),
            ScenarioId::Fig4bP2ClosedControl => (Fig4Set::P2Closed, false),
            ScenarioId::Fig4bP2ClosedWire => (Fig4Set::P2Closed, true),
            ScenarioId::Fig4cBothOpenControl => (Fig4Set::BothOpen, false),
            ScenarioId::Fig4cBothOpenWire => (Fig4Set::BothOpen, true),
            _ => return None,
        })
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{s}`")))
    }
}

/// One pair of the wire suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig4Set {
    P1Closed,
    P2Closed,
    BothOpen,
}

impl Fig4Set {
    pub fn label(self) -> &'static str {
        match self {
            Fig4Set::P1Closed => "P1Closed",
            Fig4Set::P2Closed => "P2Closed",
            Fig4Set::BothOpen => "BothOpen",
        }
    }

    fn ids(self) -> (ScenarioId, ScenarioId) {
        match self {
            Fig4Set::P1Closed => (ScenarioId::Fig4aP1ClosedControl, ScenarioId::Fig4aP1ClosedWire),
            Fig4Set::P2Closed => (ScenarioId::Fig4bP2ClosedControl, ScenarioId::Fig4bP2ClosedWire),
            Fig4Set::BothOpen => (ScenarioId::Fig4cBothOpenControl, ScenarioId::Fig4cBothOpenWire),
        }
    }

    fn illumination(self, closure: Closure) -> Illumination {
        match self {
            // Closing pinhole 1 leaves pinhole 2, which feeds channel 2'.
            Fig4Set::P1Closed => Illumination::Second(closure),
            Fig4Set::P2Closed => Illumination::First(closure),
            Fig4Set::BothOpen => Illumination::Both,
        }
    }
}

/// How a single pinhole is isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closure {
    /// Close the other hole in the pinhole mask.
    #[default]
    Mask,
    /// Shift the selector aperture onto the wanted beam.
    Selector,
}

/// Which pinholes contribute light.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Illumination {
    #[default]
    Both,
    /// Pinhole 1 (at +x) only.
    First(Closure),
    Second(Closure),
}

impl Illumination {
    pub fn setup(self) -> TrainSetup {
        let (opening, selector) = match self {
            Illumination::Both => (PinholeOpening::Both, SelectorPosition::Centered),
            Illumination::First(Closure::Mask) => (PinholeOpening::FirstOnly, SelectorPosition::Centered),
            Illumination::Second(Closure::Mask) => (PinholeOpening::SecondOnly, SelectorPosition::Centered),
            Illumination::First(Closure::Selector) => (PinholeOpening::Both, SelectorPosition::PassFirst),
            Illumination::Second(Closure::Selector) => (PinholeOpening::Both, SelectorPosition::PassSecond),
        };
        TrainSetup {
            opening,
            selector,
            ..TrainSetup::default()
        }
    }

    /// Which-way channels that receive light.
    pub fn channels(self) -> Vec<Channel> {
        match self {
            Illumination::Both => vec![Channel::First, Channel::Second],
            Illumination::First(_) => vec![Channel::First],
            Illumination::Second(_) => vec![Channel::Second],
        }
    }
}

/// Sampling and propagation settings shared by every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub grid: GridSpec,
    pub guard: GuardBand,
    pub band_floor: f64,
    pub exec: Exec,
}

impl Numerics {
    /// Square `n x n` grid (a line of `n` samples when `one_d`).
    pub fn new(geometry: &ExperimentGeometry, n: usize, pitch: f64, one_d: bool) -> Result<Self> {
        let grid = if one_d {
            GridSpec::line(n, pitch, geometry.wavelength)?
        } else {
            GridSpec::square(n, pitch, geometry.wavelength)?
        };
        let d = PropagatorConfig::default();
        Ok(Numerics {
            grid,
            guard: d.guard,
            band_floor: d.band_floor,
            exec: d.exec,
        })
    }

    /// 4096 x 4096 samples at 2.5 um.
    pub fn default_for(geometry: &ExperimentGeometry) -> Result<Self> {
        Numerics::new(geometry, 4096, 2.5e-6, false)
    }

    pub fn propagator(&self) -> Propagator {
        Propagator::new(PropagatorConfig {
            guard: self.guard,
            band_floor: self.band_floor,
            exec: self.exec,
            ..PropagatorConfig::default()
        })
    }

    fn validate(&self, geometry: &ExperimentGeometry) -> Result<()> {
        self.grid.validate()?;
        geometry.validate()?;
        if self.grid.wavelength != geometry.wavelength {
            return Err(Error::InvalidGrid(format!(
                "grid wavelength {} differs from geometry wavelength {}",
                self.grid.wavelength, geometry.wavelength
            )));
        }
        if !(0.0..1.0).contains(&self.guard.fraction) {
            return Err(Error::InvalidArgument(format!(
                "guard band fraction {} must lie in [0, 1)",
                self.guard.fraction
            )));
        }
        if !(self.band_floor > 0.0 && self.band_floor <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "band floor {} must lie in (0, 1]",
                self.band_floor
            )));
        }
        Ok(())
    }
}

/// Choices that are not physical constants of the bench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    /// Light used by the baseline runs and photon sampling.
    pub illumination: Illumination,
    /// How single-pinhole legs of the suite and decomposition are realized.
    pub closure: Closure,
    /// Sign of x of the dark fringe used for automatic wire placement.
    pub dark_fringe_side: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            illumination: Illumination::Both,
            closure: Closure::Mask,
            dark_fringe_side: 1.0,
        }
    }
}

/// Observation plane selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Sigma1,
    Sigma2,
}

impl Plane {
    pub fn z(self, geometry: &ExperimentGeometry) -> f64 {
        match self {
            Plane::Sigma1 => geometry.sigma1_z,
            Plane::Sigma2 => geometry.sigma2_z,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Plane::Sigma1 => "sigma1",
            Plane::Sigma2 => "sigma2",
        }
    }
}

impl FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma1" => Ok(Plane::Sigma1),
            "sigma2" => Ok(Plane::Sigma2),
            _ => Err(Error::InvalidArgument(format!("unknown plane `{s}`, expected sigma1 or sigma2"))),
        }
    }
}

/// Intensity recorded on one observation plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    pub plane: Plane,
    pub map: IntensityMap,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub id: ScenarioId,
    pub geometry: ExperimentGeometry,
    pub numerics: Numerics,
    /// Wire x-positions actually used (empty for wire-free runs).
    pub wire_positions: Vec<f64>,
    pub maps: Vec<PlaneMap>,
    /// x cut through y = 0 of the last recorded plane.
    pub profile: Option<Profile>,
    /// Central fringe pairs, ordered by x.
    pub visibility: Vec<VisibilityReport>,
    /// Dark fringes nearest the axis.
    pub dark_fringes: Vec<f64>,
    pub fringe_period: Option<f64>,
    pub rois: Option<(Roi, Roi)>,
    /// Share of the plane's power inside the ROIs.
    pub roi_power_fraction: Option<f64>,
    pub flux: Option<FluxReport>,
    pub crosstalk: Option<f64>,
    pub decomposition: Option<DecompositionReport>,
    pub sweep: Option<SweepReport>,
    pub diagnostics: RunDiagnostics,
    pub flags: Vec<String>,
}

impl ScenarioReport {
    fn new(id: ScenarioId, geometry: &ExperimentGeometry, numerics: &Numerics) -> Self {
        ScenarioReport {
            id,
            geometry: geometry.clone(),
            numerics: *numerics,
            wire_positions: Vec::new(),
            maps: Vec::new(),
            profile: None,
            visibility: Vec::new(),
            dark_fringes: Vec::new(),
            fringe_period: None,
            rois: None,
            roi_power_fraction: None,
            flux: None,
            crosstalk: None,
            decomposition: None,
            sweep: None,
            diagnostics: RunDiagnostics::default(),
            flags: Vec::new(),
        }
    }

    pub fn map(&self, plane: Plane) -> Option<&IntensityMap> {
        self.maps.iter().find(|m| m.plane == plane).map(|m| &m.map)
    }

    /// Visibility of the brightest central pair.
    pub fn central_visibility(&self) -> Option<&VisibilityReport> {
        self.visibility.iter().max_by(|a, b| a.i_max.total_cmp(&b.i_max))
    }

    fn push_map(&mut self, plane: Plane, field: &Field) -> Result<()> {
        let map = intensity(field);
        self.profile = Some(extract_profile(&map, (0.0, 0.0))?);
        self.maps.push(PlaneMap { plane, map });
        Ok(())
    }
}

/// One control/wire pair of the suite.
#[derive(Debug, Clone)]
pub struct Fig4Pair {
    pub set: Fig4Set,
    pub control: ScenarioReport,
    pub wire: ScenarioReport,
    pub channels: Vec<Channel>,
    pub flux: FluxReport,
    /// Numerical uncertainty of R in percent points:
    /// `radius_sensitivity + guard_term`.
    pub r_uncertainty: f64,
    /// Half-range of R when the ROI radii change by one pitch.
    pub radius_sensitivity: f64,
    /// `100 |guard loss fraction (wire) - guard loss fraction (control)|`.
    pub guard_term: f64,
    /// RMS x-width of the lit channel on the which-way plane.
    pub width_control: Option<f64>,
    pub width_wire: Option<f64>,
    /// Power blocked by the wire, percent of the first-plane power.
    pub intercepted_percent: f64,
    /// Power blocked by the wire, percent of the first-plane power inside
    /// the analytic Airy disk around the focus.
    pub intercepted_airy_percent: f64,
}

impl Fig4Pair {
    pub fn width_change_percent(&self) -> Option<f64> {
        match (self.width_control, self.width_wire) {
            (Some(c), Some(w)) if c > 0.0 => Some(100.0 * (w / c - 1.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fig4Report {
    /// Frozen ROIs from the both-open control run.
    pub rois: (Roi, Roi),
    pub wire_positions: Vec<f64>,
    /// P1 closed, P2 closed, both open.
    pub pairs: Vec<Fig4Pair>,
    /// Both-open control flux over the sum of the single-pinhole control fluxes.
    pub control_consistency: f64,
    /// Echo of `sigma2_z - sigma1_z`.
    pub plane_distance: f64,
    pub plane_distance_note: &'static str,
}

impl Fig4Report {
    pub fn pair(&self, set: Fig4Set) -> &Fig4Pair {
        self.pairs.iter().find(|p| p.set == set).expect("suite holds every set")
    }

    /// The six runs, in suite order.
    pub fn scenarios(&self) -> impl Iterator<Item = &ScenarioReport> {
        self.pairs.iter().flat_map(|p| [&p.control, &p.wire])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub positions: Vec<f64>,
    pub r_percent: Vec<f64>,
    /// Dark fringes of the first-plane pattern within the swept range.
    pub dark_fringes: Vec<f64>,
    pub phi_control: f64,
    pub rois: (Roi, Roi),
}

impl SweepReport {
    /// Position with the smallest R.
    pub fn argmin(&self) -> f64 {
        let k = (0..self.r_percent.len())
            .min_by(|&a, &b| self.r_percent[a].total_cmp(&self.r_percent[b]))
            .unwrap_or(0);
        self.positions[k]
    }
}

/// Sampling diagnostics for every hop of the bench.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub hops: Vec<(f64, f64, SamplingDiagnostics)>,
    pub lens_phase_step: f64,
    pub band_floor: f64,
}

impl CheckReport {
    /// Hops the propagator would refuse.
    pub fn refused(&self) -> Vec<&(f64, f64, SamplingDiagnostics)> {
        self.hops
            .iter()
            .filter(|h| h.2.admitted_band_fraction < self.band_floor)
            .collect()
    }
}

/// Checks geometry, numerics and every propagation hop without running.
pub fn check_numerics(geometry: &ExperimentGeometry, numerics: &Numerics) -> Result<CheckReport> {
    numerics.validate(geometry)?;
    let g = &numerics.grid;
    let r = 0.5 * geometry.pinhole_diameter;
    let x1 = geometry.pinhole1_x();
    if !disk_inside_window(g, x1, 0.0, r) || !disk_inside_window(g, -x1, 0.0, r) {
        return Err(Error::PinholeClipped);
    }
    let train = geometry.train(&TrainSetup::default());
    train.validate()?;
    let mut planes: Vec<f64> = train.stages().iter().map(|s| s.z).collect();
    planes.extend(train.observations().iter().map(|o| o.1));
    planes.sort_by(f64::total_cmp);
    planes.dedup();
    let hops = planes
        .windows(2)
        .map(|w| (w[0], w[1], check_sampling(g, w[1] - w[0])))
        .collect();
    let report = CheckReport {
        hops,
        lens_phase_step: lens_phase_step(g, geometry.focal_length),
        band_floor: numerics.band_floor,
    };
    Ok(report)
}

/// Fails early with the errors a run would hit.
fn preflight(geometry: &ExperimentGeometry, numerics: &Numerics) -> Result<()> {
    let check = check_numerics(geometry, numerics)?;
    if check.lens_phase_step > std::f64::consts::PI {
        return Err(Error::LensUndersampled {
            step: check.lens_phase_step,
        });
    }
    if let Some((_, _, d)) = check.refused().first() {
        return Err(Error::SamplingRefused {
            dz: d.dz,
            floor: numerics.band_floor,
            diagnostics: d.clone(),
        });
    }
    Ok(())
}

fn source(numerics: &Numerics) -> Result<Field> {
    create_plane_wave(numerics.grid, Complex64::new(1.0, 0.0))
}

/// Field incident on the first observation plane (before any wire there).
fn to_sigma1(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    illumination: Illumination,
) -> Result<(Field, RunDiagnostics)> {
    let train = geometry.train(&illumination.setup());
    let out = run_train(prop, &source(numerics)?, &train, geometry.sigma1_z)?;
    Ok((out.field, out.diagnostics))
}

/// Continues a first-plane field to `z`, with optional wires at the first plane.
fn from_sigma1(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    sigma1: &Field,
    illumination: Illumination,
    wires: &[f64],
    z: f64,
) -> Result<(Field, RunDiagnostics)> {
    let mut setup = illumination.setup();
    setup.wires = wires.to_vec();
    let out = run_train(prop, sigma1, &geometry.train(&setup), z)?;
    Ok((out.field, out.diagnostics))
}

fn fringe_report(
    report: &mut ScenarioReport,
    geometry: &ExperimentGeometry,
    map: &IntensityMap,
) -> Result<()> {
    let profile = extract_profile(map, (0.0, 0.0))?;
    let period = geometry.fringe_period();
    report.visibility = central_visibilities(&profile, 0.0, period, 3)?;
    report.dark_fringes = locate_fringe_minima(&profile, 0.0, 2)?;
    let mut minima = fringe_minima_in(&profile, (-3.01 * period, 3.01 * period));
    minima.retain(|x| x.is_finite());
    report.fringe_period = if minima.len() >= 2 {
        Some((minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64)
    } else {
        None
    };
    Ok(())
}

/// Wire x-positions: the configured list, or the dark fringe nearest the axis
/// on the requested side of the both-open first-plane pattern.
fn wire_positions(
    geometry: &ExperimentGeometry,
    options: &ScenarioOptions,
    both_open_sigma1: &IntensityMap,
) -> Result<Vec<f64>> {
    if !geometry.wire_positions.is_empty() {
        return Ok(geometry.wire_positions.clone());
    }
    let profile = extract_profile(both_open_sigma1, (0.0, 0.0))?;
    let side = if options.dark_fringe_side < 0.0 { -1.0 } else { 1.0 };
    let near = side * 0.5 * geometry.fringe_period();
    let minima = locate_fringe_minima(&profile, near, 1)?;
    if minima[0] * side <= 0.0 {
        return Err(Error::NotEnoughMinima { found: 0, wanted: 1 });
    }
    Ok(minima)
}

fn rois_flux(map: &IntensityMap, rois: &(Roi, Roi), channels: &[Channel]) -> f64 {
    channels
        .iter()
        .map(|c| match c {
            Channel::First => flux_in_roi(map, &rois.0),
            Channel::Second => flux_in_roi(map, &rois.1),
        })
        .sum()
}

fn roi_for(rois: &(Roi, Roi), c: Channel) -> &Roi {
    match c {
        Channel::First => &rois.0,
        Channel::Second => &rois.1,
    }
}

/// Runs a single scenario. Suite legs recompute the both-open control for
/// their ROIs and wire placement; use [`run_fig4_suite`] for all six.
pub fn run_scenario(
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
    id: ScenarioId,
) -> Result<ScenarioReport> {
    preflight(geometry, numerics)?;
    let prop = numerics.propagator();
    match id {
        ScenarioId::Sigma1Interference => sigma1_interference(&prop, geometry, numerics, options),
        ScenarioId::Sigma2Control => sigma2_control(&prop, geometry, numerics, options),
        ScenarioId::DecompositionSigma1 => decomposition(&prop, geometry, numerics, options, Plane::Sigma1),
        ScenarioId::DecompositionSigma2 => decomposition(&prop, geometry, numerics, options, Plane::Sigma2),
        ScenarioId::WireSweep => {
            let p = geometry.fringe_period();
            let sweep = sweep(&prop, geometry, numerics, 0.0, p, DEFAULT_SWEEP_STEPS)?;
            let mut report = ScenarioReport::new(id, geometry, numerics);
            report.rois = Some(sweep.rois);
            report.dark_fringes = sweep.dark_fringes.clone();
            report.sweep = Some(sweep);
            Ok(report)
        }
        _ => {
            let (set, wire) = id.fig4_leg().expect("remaining ids are suite legs");
            let mut suite = SuiteState::start(&prop, geometry, numerics, options)?;
            let pair = suite.run_pair(&prop, set)?;
            Ok(if wire { pair.wire } else { pair.control })
        }
    }
}

fn sigma1_interference(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
) -> Result<ScenarioReport> {
    let mut report = ScenarioReport::new(ScenarioId::Sigma1Interference, geometry, numerics);
    let (field, diag) = to_sigma1(prop, geometry, numerics, options.illumination)?;
    report.diagnostics = diag;
    report.push_map(Plane::Sigma1, &field)?;
    let map = report.maps[0].map.clone();
    if let Err(e) = fringe_report(&mut report, geometry, &map) {
        if options.illumination == Illumination::Both {
            return Err(e);
        }
        report.flags.push(format!("no fringes: {e}"));
    }
    Ok(report)
}

fn sigma2_control(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
) -> Result<ScenarioReport> {
    let mut report = ScenarioReport::new(ScenarioId::Sigma2Control, geometry, numerics);
    let (s1, mut diag) = to_sigma1(prop, geometry, numerics, options.illumination)?;
    let (s2, d2) = from_sigma1(prop, geometry, &s1, options.illumination, &[], geometry.sigma2_z)?;
    drop(s1);
    diag.extend(&d2);
    report.diagnostics = diag;
    report.push_map(Plane::Sigma2, &s2)?;
    drop(s2);
    if options.illumination != Illumination::Both {
        report.flags.push("single pinhole: which-way ROIs need both lobes".into());
        return Ok(report);
    }
    let map = &report.maps[0].map;
    let rois = detect_rois(map)?;
    let phi = flux_in_roi(map, &rois.0) + flux_in_roi(map, &rois.1);
    report.roi_power_fraction = Some(phi / map.total_power());
    report.flux = Some(reduction_r(phi, phi)?);
    report.rois = Some(rois);

    // Crosstalk from a run with pinhole 2 closed: channel 1' is lit.
    let single = Illumination::First(options.closure);
    let (t1, _) = to_sigma1(prop, geometry, numerics, single)?;
    let (t2, _) = from_sigma1(prop, geometry, &t1, single, &[], geometry.sigma2_z)?;
    drop(t1);
    report.crosstalk = Some(crosstalk(&intensity(&t2), &rois.0, &rois.1)?);
    Ok(report)
}

struct SuiteState<'a> {
    geometry: &'a ExperimentGeometry,
    numerics: &'a Numerics,
    options: &'a ScenarioOptions,
    wires: Vec<f64>,
    rois: (Roi, Roi),
    /// Both-open first-plane field and control run, kept so the pair need
    /// not be recomputed.
    both_control: Option<(Field, RunDiagnostics, IntensityMap, RunDiagnostics)>,
}

impl<'a> SuiteState<'a> {
    fn start(
        prop: &Propagator,
        geometry: &'a ExperimentGeometry,
        numerics: &'a Numerics,
        options: &'a ScenarioOptions,
    ) -> Result<Self> {
        let (s1, d1) = to_sigma1(prop, geometry, numerics, Illumination::Both)?;
        let wires = wire_positions(geometry, options, &intensity(&s1))?;
        let (s2, d2) = from_sigma1(prop, geometry, &s1, Illumination::Both, &[], geometry.sigma2_z)?;
        let mut diag = d1.clone();
        diag.extend(&d2);
        let map = intensity(&s2);
        drop(s2);
        let rois = detect_rois(&map)?;
        Ok(SuiteState {
            geometry,
            numerics,
            options,
            wires,
            rois,
            both_control: Some((s1, d1, map, diag)),
        })
    }

    fn run_pair(&mut self, prop: &Propagator, set: Fig4Set) -> Result<Fig4Pair> {
        let g = self.geometry;
        let illumination = set.illumination(self.options.closure);
        let cached = if set == Fig4Set::BothOpen {
            self.both_control.take()
        } else {
            None
        };
        let (s1, d1, control_map, control_diag) = match cached {
            Some(c) => c,
            None => {
                let (s1, d1) = to_sigma1(prop, g, self.numerics, illumination)?;
                let (s2, d2) = from_sigma1(prop, g, &s1, illumination, &[], g.sigma2_z)?;
                let mut diag = d1.clone();
                diag.extend(&d2);
                (s1, d1, intensity(&s2), diag)
            }
        };
        let (intercepted_percent, intercepted_airy_percent) = self.intercepted(&s1)?;
        let (w2, dw) = from_sigma1(prop, g, &s1, illumination, &self.wires, g.sigma2_z)?;
        drop(s1);
        let mut wire_diag = d1;
        wire_diag.extend(&dw);
        let wire_map = intensity(&w2);
        drop(w2);

        let channels = illumination.channels();
        let phi_c = rois_flux(&control_map, &self.rois, &channels);
        let phi_w = rois_flux(&wire_map, &self.rois, &channels);
        let flux = reduction_r(phi_c, phi_w)?;

        let pitch = self.numerics.grid.dx;
        let perturbed = |dr: f64| -> Result<f64> {
            let rois = (
                self.rois.0.with_radius(self.rois.0.radius + dr)?,
                self.rois.1.with_radius(self.rois.1.radius + dr)?,
            );
            let c = rois_flux(&control_map, &rois, &channels);
            let w = rois_flux(&wire_map, &rois, &channels);
            Ok(reduction_r(c, w)?.r_percent)
        };
        let radius_sensitivity = 0.5 * (perturbed(pitch)? - perturbed(-pitch)?).abs();
        let guard_term =
            100.0 * (wire_diag.guard_absorbed_fraction() - control_diag.guard_absorbed_fraction()).abs();

        let lit = match illumination {
            Illumination::Both => None,
            _ => Some(channels[0]),
        };
        let width = |m: &IntensityMap| lit.map(|c| channel_width_x(m, roi_for(&self.rois, c)));
        let (width_control, width_wire) = (width(&control_map), width(&wire_map));

        let (cid, wid) = set.ids();
        let mut control = ScenarioReport::new(cid, g, self.numerics);
        let mut wire = ScenarioReport::new(wid, g, self.numerics);
        wire.wire_positions = self.wires.clone();
        for (report, map, diag, phi) in [
            (&mut control, control_map, control_diag, phi_c),
            (&mut wire, wire_map, wire_diag, phi_w),
        ] {
            report.profile = Some(extract_profile(&map, (0.0, 0.0))?);
            report.rois = Some(self.rois);
            report.roi_power_fraction = Some(rois_flux(&map, &self.rois, &channels) / map.total_power());
            report.flux = Some(reduction_r(phi_c, phi)?);
            if let Some(c) = lit {
                let other = match c {
                    Channel::First => &self.rois.1,
                    Channel::Second => &self.rois.0,
                };
                report.crosstalk = Some(crosstalk(&map, roi_for(&self.rois, c), other)?);
            }
            report.diagnostics = diag;
            report.maps.push(PlaneMap {
                plane: Plane::Sigma2,
                map,
            });
        }
        if flux.is_flux_gain() {
            wire.flags.push("flux gain".into());
        }
        Ok(Fig4Pair {
            set,
            control,
            wire,
            channels,
            flux,
            r_uncertainty: radius_sensitivity + guard_term,
            radius_sensitivity,
            guard_term,
            width_control,
            width_wire,
            intercepted_percent,
            intercepted_airy_percent,
        })
    }

    fn intercepted(&self, s1: &Field) -> Result<(f64, f64)> {
        let g = self.geometry;
        let before = s1.total_power();
        let after = apply_wires(s1, &self.wires, g.wire_thickness, WireOrientation::Vertical)?.total_power();
        let blocked = (before - after).max(0.0);
        let map = intensity(s1);
        let disk = Roi::new(Channel::First, (0.0, 0.0), g.airy_first_zero())?;
        let airy = flux_in_roi(&map, &disk);
        let pct = |d: f64| if d > 0.0 { 100.0 * blocked / d } else { 0.0 };
        Ok((pct(before), pct(airy)))
    }
}

/// Runs the three control/wire pairs with one frozen ROI pair.
pub fn run_fig4_suite(
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
) -> Result<Fig4Report> {
    preflight(geometry, numerics)?;
    let prop = numerics.propagator();
    let mut suite = SuiteState::start(&prop, geometry, numerics, options)?;
    let both = suite.run_pair(&prop, Fig4Set::BothOpen)?;
    let p1 = suite.run_pair(&prop, Fig4Set::P1Closed)?;
    let p2 = suite.run_pair(&prop, Fig4Set::P2Closed)?;
    let singles = p1.flux.phi_control + p2.flux.phi_control;
    let control_consistency = if singles > 0.0 {
        both.flux.phi_control / singles
    } else {
        f64::NAN
    };
    Ok(Fig4Report {
        rois: suite.rois,
        wire_positions: suite.wires.clone(),
        pairs: vec![p1, p2, both],
        control_consistency,
        plane_distance: geometry.sigma2_z - geometry.sigma1_z,
        plane_distance_note: PLANE_DISTANCE_NOTE,
    })
}

/// Propagates each pinhole alone to `plane` and splits the two-beam
/// intensity into its single-beam and cross terms.
pub fn run_decomposition(
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
    plane: Plane,
) -> Result<ScenarioReport> {
    preflight(geometry, numerics)?;
    decomposition(&numerics.propagator(), geometry, numerics, options, plane)
}

fn decomposition(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
    plane: Plane,
) -> Result<ScenarioReport> {
    let id = match plane {
        Plane::Sigma1 => ScenarioId::DecompositionSigma1,
        Plane::Sigma2 => ScenarioId::DecompositionSigma2,
    };
    let mut report = ScenarioReport::new(id, geometry, numerics);
    let z = plane.z(geometry);
    let mut beam = |ill: Illumination| -> Result<Field> {
        let train = geometry.train(&ill.setup());
        let out = run_train(prop, &source(numerics)?, &train, z)?;
        report.diagnostics.extend(&out.diagnostics);
        Ok(out.field)
    };
    let f1 = beam(Illumination::First(options.closure))?;
    let f2 = beam(Illumination::Second(options.closure))?;
    let d = decompose(&f1, &f2)?;
    drop((f1, f2));
    report.profile = Some(extract_profile(&d.p_total, (0.0, 0.0))?);
    if plane == Plane::Sigma1 {
        let map = d.p_total.clone();
        fringe_report(&mut report, geometry, &map)?;
    }
    report.decomposition = Some(d);
    Ok(report)
}

/// R for a single wire stepped across the first plane, both pinholes open.
pub fn sweep_wire(
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    x_min: f64,
    x_max: f64,
    steps: usize,
) -> Result<SweepReport> {
    preflight(geometry, numerics)?;
    sweep(&numerics.propagator(), geometry, numerics, x_min, x_max, steps)
}

fn sweep(
    prop: &Propagator,
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    x_min: f64,
    x_max: f64,
    steps: usize,
) -> Result<SweepReport> {
    if steps < 2 || !(x_max > x_min) {
        return Err(Error::InvalidArgument(format!(
            "sweep needs x_max > x_min and at least 2 steps (got [{x_min}, {x_max}], {steps})"
        )));
    }
    let (w0, w1) = numerics.grid.x_bounds();
    let h = 0.5 * geometry.wire_thickness;
    if x_min - h < w0 || x_max + h > w1 {
        return Err(Error::InvalidArgument(format!(
            "sweep range [{x_min}, {x_max}] leaves the window [{w0}, {w1}]"
        )));
    }
    let positions: Vec<f64> = (0..steps)
        .map(|k| x_min + (x_max - x_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let ill = Illumination::Both;
    let (s1, _) = to_sigma1(prop, geometry, numerics, ill)?;
    let profile = extract_profile(&intensity(&s1), (0.0, 0.0))?;
    let dark_fringes = fringe_minima_in(&profile, (x_min, x_max));
    let (c2, _) = from_sigma1(prop, geometry, &s1, ill, &[], geometry.sigma2_z)?;
    let control = intensity(&c2);
    drop(c2);
    let rois = detect_rois(&control)?;
    let channels = ill.channels();
    let phi_control = rois_flux(&control, &rois, &channels);
    drop(control);
    let mut r_percent = Vec::with_capacity(steps);
    for &x in &positions {
        let (w2, _) = from_sigma1(prop, geometry, &s1, ill, &[x], geometry.sigma2_z)?;
        let phi = rois_flux(&intensity(&w2), &rois, &channels);
        r_percent.push(reduction_r(phi_control, phi)?.r_percent);
    }
    Ok(SweepReport {
        positions,
        r_percent,
        dark_fringes,
        phi_control,
        rois,
    })
}

/// Monte Carlo detection on one observation plane.
#[derive(Debug, Clone)]
pub struct PhotonReport {
    pub plane: Plane,
    pub events: PhotonEvents,
    pub map: IntensityMap,
    /// x-marginal histogram over the central fringes (first plane only).
    pub histogram: Option<PhotonHistogram>,
    pub visibility: Option<HistogramVisibility>,
    /// Visibility of the y = 0 intensity cut.
    pub field_visibility: Option<VisibilityReport>,
    pub rois: Option<(Roi, Roi)>,
    pub diagnostics: RunDiagnostics,
}

/// Samples `n` photons from the baseline pattern on `plane`.
pub fn run_photons(
    geometry: &ExperimentGeometry,
    numerics: &Numerics,
    options: &ScenarioOptions,
    plane: Plane,
    n: usize,
    seed: u64,
) -> Result<PhotonReport> {
    preflight(geometry, numerics)?;
    let prop = numerics.propagator();
    let train = geometry.train(&options.illumination.setup());
    let out = run_train(&prop, &source(numerics)?, &train, plane.z(geometry))?;
    let map = intensity(&out.field);
    drop(out.field);
    let rois = match (plane, options.illumination) {
        (Plane::Sigma2, Illumination::Both) => Some(detect_rois(&map)?),
        _ => None,
    };
    let roi_list: Vec<Roi> = rois.map(|r| vec![r.0, r.1]).unwrap_or_default();
    let events = sample_photons_in_rois(&map, n, seed, &roi_list)?;
    let (mut histogram, mut visibility, mut field_visibility) = (None, None, None);
    if plane == Plane::Sigma1 {
        let p = geometry.fringe_period();
        let h = PhotonHistogram::x_marginal(&map, &events, (-3.0 * p, 3.0 * p), 1)?;
        let central = (-0.25 * p, 0.25 * p);
        if options.illumination == Illumination::Both {
            visibility = Some(h.visibility(central)?);
            let profile = extract_profile(&map, (0.0, 0.0))?;
            field_visibility = Some(fringe_visibility(&profile, central)?);
        }
        histogram = Some(h);
    }
    Ok(PhotonReport {
        plane,
        events,
        map,
        histogram,
        visibility,
        field_visibility,
        rois,
        diagnostics: out.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.name().parse::<ScenarioId>().unwrap(), id);
        }
        assert!("Fig4d".parse::<ScenarioId>().is_err());
        assert_eq!(ScenarioId::Fig4aP1ClosedControl.to_string(), "Fig4a_P1Closed_Control");
    }

    #[test]
    fn closing_pinhole_one_lights_channel_two() {
        let ill = Fig4Set::P1Closed.illumination(Closure::Mask);
        assert_eq!(ill.channels(), vec![Channel::Second]);
        assert_eq!(ill.setup().opening, PinholeOpening::SecondOnly);
        let ill = Fig4Set::P2Closed.illumination(Closure::Selector);
        assert_eq!(ill.setup().selector, SelectorPosition::PassFirst);
        assert_eq!(ill.setup().opening, PinholeOpening::Both);
    }

    #[test]
    fn control_legs_have_no_wires() {
        for set in [Fig4Set::P1Closed, Fig4Set::P2Closed, Fig4Set::BothOpen] {
            assert!(set.illumination(Closure::Mask).setup().wires.is_empty());
        }
    }

    #[test]
    fn default_check_admits_every_hop() {
        let g = ExperimentGeometry::default();
        let n = Numerics::default_for(&g).unwrap();
        let c = check_numerics(&g, &n).unwrap();
        assert_eq!(c.hops.len(), 4);
        assert!(c.refused().is_empty());
        assert!(c.lens_phase_step < std::f64::consts::PI);
    }

    #[test]
    fn wavelength_mismatch_rejected() {
        let g = ExperimentGeometry::default();
        let mut n = Numerics::default_for(&g).unwrap();
        n.grid.wavelength = 500e-9;
        assert!(matches!(check_numerics(&g, &n), Err(Error::InvalidGrid(_))));
    }
}
