//! Flat `key = value` experiment configuration.
//!
//! `#` starts a comment; lengths carry an `_m` suffix and are in meters;
//! lists are comma separated. Missing keys keep their defaults and unknown
//! keys are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::elements::ExperimentGeometry;
use crate::error::{Error, Result};
use crate::scenarios::{Closure, Illumination, Numerics, ScenarioOptions};

use super::fmt::format_float;
use super::pgm::DEFAULT_PREVIEW_GAMMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DimensionMode {
    OneD,
    #[default]
    TwoD,
}

/// Light path of the baseline runs: both pinholes, one pinhole isolated by
/// the selector aperture (`p1`, `p2`), or one closed in the mask
/// (`mask_p1`, `mask_p2`). The selector variants also make the suite's
/// single-pinhole legs use the selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectorMode {
    #[default]
    Both,
    P1,
    P2,
    MaskP1,
    MaskP2,
}

impl SelectorMode {
    fn name(self) -> &'static str {
        match self {
            SelectorMode::Both => "both",
            SelectorMode::P1 => "p1",
            SelectorMode::P2 => "p2",
            SelectorMode::MaskP1 => "mask_p1",
            SelectorMode::MaskP2 => "mask_p2",
        }
    }

    pub fn illumination(self) -> Illumination {
        match self {
            SelectorMode::Both => Illumination::Both,
            SelectorMode::P1 => Illumination::First(Closure::Selector),
            SelectorMode::P2 => Illumination::Second(Closure::Selector),
            SelectorMode::MaskP1 => Illumination::First(Closure::Mask),
            SelectorMode::MaskP2 => Illumination::Second(Closure::Mask),
        }
    }

    pub fn closure(self) -> Closure {
        match self {
            SelectorMode::P1 | SelectorMode::P2 => Closure::Selector,
            _ => Closure::Mask,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Empty `wire_positions` means the wire goes on the dark fringe found
    /// automatically.
    pub geometry: ExperimentGeometry,
    pub grid_n: usize,
    pub grid_dx: f64,
    pub dimension: DimensionMode,
    pub guard_band_fraction: f64,
    pub band_floor: f64,
    pub selector_mode: SelectorMode,
    pub seed: u64,
    pub photons_n: usize,
    pub output_dir: PathBuf,
    pub preview_gamma: f64,
    /// `+1` or `-1`: side of the automatically placed wire.
    pub dark_fringe_side: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: ExperimentGeometry::default(),
            grid_n: 4096,
            grid_dx: 2.5e-6,
            dimension: DimensionMode::TwoD,
            guard_band_fraction: 0.1,
            band_floor: 1e-3,
            selector_mode: SelectorMode::Both,
            seed: 1,
            photons_n: 1_000_000,
            output_dir: PathBuf::from("out"),
            preview_gamma: DEFAULT_PREVIEW_GAMMA,
            dark_fringe_side: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn numerics(&self) -> Result<Numerics> {
        let mut n = Numerics::new(
            &self.geometry,
            self.grid_n,
            self.grid_dx,
            self.dimension == DimensionMode::OneD,
        )?;
        n.guard.fraction = self.guard_band_fraction;
        n.band_floor = self.band_floor;
        Ok(n)
    }

    pub fn options(&self) -> ScenarioOptions {
        ScenarioOptions {
            illumination: self.selector_mode.illumination(),
            closure: self.selector_mode.closure(),
            dark_fringe_side: self.dark_fringe_side,
        }
    }

    /// SHA-256 of the resolved configuration text, hex encoded.
    pub fn content_hash(&self) -> String {
        Sha256::digest(write_config(self).as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

const KEYS: [&str; 23] = [
    "wavelength_m",
    "focal_length_m",
    "pinhole_diameter_m",
    "pinhole_separation_m",
    "selector_z_m",
    "selector_diameter_m",
    "as_z_m",
    "as_diameter_m",
    "sigma1_z_m",
    "sigma2_z_m",
    "wire_thickness_m",
    "wire_positions_m",
    "grid_n",
    "grid_dx_m",
    "dimension_mode",
    "guard_band_fraction",
    "band_floor",
    "selector_mode",
    "seed",
    "photons_n",
    "output_dir",
    "preview_gamma",
    "dark_fringe_side",
];

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(line, key, format!("`{v}` is not a finite number")))
}

fn parse_length(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = parse_f64(line, key, v)?;
    if x <= 0.0 {
        return Err(err(line, key, format!("{v} must be > 0")));
    }
    Ok(x)
}

fn parse_count(line: usize, key: &str, v: &str, min: u64) -> Result<u64> {
    let x: u64 = v
        .parse()
        .map_err(|_| err(line, key, format!("`{v}` is not a non-negative integer")))?;
    if x < min {
        return Err(err(line, key, format!("{x} must be at least {min}")));
    }
    Ok(x)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let (key, v) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(line, key, "unknown key"));
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(err(line, key, format!("already set on line {first}")));
        }
        let g = &mut c.geometry;
        match key {
            "wavelength_m" => g.wavelength = parse_length(line, key, v)?,
            "focal_length_m" => g.focal_length = parse_length(line, key, v)?,
            "pinhole_diameter_m" => g.pinhole_diameter = parse_length(line, key, v)?,
            "pinhole_separation_m" => g.pinhole_separation = parse_length(line, key, v)?,
            "selector_z_m" => g.selector_z = parse_length(line, key, v)?,
            "selector_diameter_m" => g.selector_diameter = parse_length(line, key, v)?,
            "as_z_m" => g.as_z = parse_length(line, key, v)?,
            "as_diameter_m" => g.as_diameter = parse_length(line, key, v)?,
            "sigma1_z_m" => g.sigma1_z = parse_length(line, key, v)?,
            "sigma2_z_m" => g.sigma2_z = parse_length(line, key, v)?,
            "wire_thickness_m" => g.wire_thickness = parse_length(line, key, v)?,
            "wire_positions_m" => {
                g.wire_positions = if v == "auto_dark_fringe" {
                    Vec::new()
                } else {
                    if v.is_empty() {
                        return Err(err(line, key, "expected a list of positions or auto_dark_fringe"));
                    }
                    v.split(',')
                        .map(|p| parse_f64(line, key, p.trim()))
                        .collect::<Result<_>>()?
                }
            }
            "grid_n" => c.grid_n = parse_count(line, key, v, 2)? as usize,
            "grid_dx_m" => c.grid_dx = parse_length(line, key, v)?,
            "dimension_mode" => {
                c.dimension = match v {
                    "1d" => DimensionMode::OneD,
                    "2d" => DimensionMode::TwoD,
                    _ => return Err(err(line, key, format!("`{v}` is not 1d or 2d"))),
                }
            }
            "guard_band_fraction" => {
                let x = parse_f64(line, key, v)?;
                if !(0.0..1.0).contains(&x) {
                    return Err(err(line, key, format!("{v} must lie in [0, 1)")));
                }
                c.guard_band_fraction = x;
            }
            "band_floor" => {
                let x = parse_f64(line, key, v)?;
                if !(x > 0.0 && x <= 1.0) {
                    return Err(err(line, key, format!("{v} must lie in (0, 1]")));
                }
                c.band_floor = x;
            }
            "selector_mode" => {
                c.selector_mode = [
                    SelectorMode::Both,
                    SelectorMode::P1,
                    SelectorMode::P2,
                    SelectorMode::MaskP1,
                    SelectorMode::MaskP2,
                ]
                .into_iter()
                .find(|m| m.name() == v)
                .ok_or_else(|| err(line, key, format!("`{v}` is not one of both, p1, p2, mask_p1, mask_p2")))?
            }
            "seed" => c.seed = parse_count(line, key, v, 0)?,
            "photons_n" => c.photons_n = parse_count(line, key, v, 1)? as usize,
            "output_dir" => {
                if v.is_empty() {
                    return Err(err(line, key, "empty path"));
                }
                c.output_dir = PathBuf::from(v);
            }
            "preview_gamma" => c.preview_gamma = parse_length(line, key, v)?,
            "dark_fringe_side" => {
                c.dark_fringe_side = match v {
                    "+" | "positive" => 1.0,
                    "-" | "negative" => -1.0,
                    _ => return Err(err(line, key, format!("`{v}` is not positive or negative"))),
                }
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    let line_of = |key: &str| seen.get(key).copied().unwrap_or(0);
    c.geometry.validate().map_err(|e| {
        let key = match &e {
            Error::OverlappingWires { .. } => "wire_positions_m",
            Error::InvalidGeometry(m) if m.contains("sigma") => "sigma2_z_m",
            Error::InvalidGeometry(m) if m.contains("separation") => "pinhole_separation_m",
            _ => "geometry",
        };
        err(line_of(key), key, e.to_string())
    })?;
    c.numerics()
        .map_err(|e| err(line_of("grid_n"), "grid_n", e.to_string()))?;
    Ok(c)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Fully resolved configuration text; `parse_config` restores it exactly.
pub fn write_config(c: &ExperimentConfig) -> String {
    let g = &c.geometry;
    let wires = if g.wire_positions.is_empty() {
        "auto_dark_fringe".to_string()
    } else {
        g.wire_positions
            .iter()
            .map(|x| format_float(*x))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let values = [
        format_float(g.wavelength),
        format_float(g.focal_length),
        format_float(g.pinhole_diameter),
        format_float(g.pinhole_separation),
        format_float(g.selector_z),
        format_float(g.selector_diameter),
        format_float(g.as_z),
        format_float(g.as_diameter),
        format_float(g.sigma1_z),
        format_float(g.sigma2_z),
        format_float(g.wire_thickness),
        wires,
        c.grid_n.to_string(),
        format_float(c.grid_dx),
        match c.dimension {
            DimensionMode::OneD => "1d".into(),
            DimensionMode::TwoD => "2d".into(),
        },
        format_float(c.guard_band_fraction),
        format_float(c.band_floor),
        c.selector_mode.name().into(),
        c.seed.to_string(),
        c.photons_n.to_string(),
        c.output_dir.display().to_string(),
        format_float(c.preview_gamma),
        if c.dark_fringe_side < 0.0 { "negative" } else { "positive" }.into(),
    ];
    KEYS.iter()
        .zip(values)
        .fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
}
