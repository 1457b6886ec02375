use std::path::PathBuf;

use crate::propagation::SamplingDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the simulator can report.
///
/// Variants fall into three families, see [`Error::kind`]: bad configuration,
/// numerical refusal (the requested computation cannot be done faithfully on
/// the chosen grid), and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error(
        "grid too coarse for a {dz} m hop: admitted band fraction {:.3e} is below the floor {floor:.3e}",
        diagnostics.admitted_band_fraction
    )]
    SamplingRefused {
        dz: f64,
        floor: f64,
        diagnostics: SamplingDiagnostics,
    },

    #[error("lens phase undersampled: step of {step:.3} rad per sample at the window edge (limit pi)")]
    LensUndersampled { step: f64 },

    #[error("aperture lies entirely outside the grid window")]
    ApertureOutsideWindow,

    #[error("pinholes overlap: separation {separation} m <= diameter {diameter} m")]
    OverlappingPinholes { separation: f64, diameter: f64 },

    #[error("pinhole clipped by the grid window")]
    PinholeClipped,

    #[error("wires overlap near x = {position} m")]
    OverlappingWires { position: f64 },

    #[error("fields live on different grids or planes")]
    GridMismatch,

    #[error("no maximum/minimum pair found in the fringe window")]
    NoExtremumPair,

    #[error("found {found} fringe minima, {wanted} requested")]
    NotEnoughMinima { found: usize, wanted: usize },

    #[error("y band [{0}, {1}] contains no grid rows")]
    EmptyBand(f64, f64),

    #[error("ROI detection failed: {0}")]
    RoiDetection(String),

    #[error("ROIs overlap")]
    OverlappingRois,

    #[error("control flux must be positive, got {0}")]
    NonPositiveControlFlux(f64),

    #[error("intensity map has zero total power")]
    ZeroPower,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("malformed grid file {path}: {message}")]
    GridFormat { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidGeometry(_)
            | Error::InvalidElement(_)
            | Error::Config { .. }
            | Error::ApertureOutsideWindow
            | Error::OverlappingPinholes { .. }
            | Error::PinholeClipped
            | Error::OverlappingWires { .. }
            | Error::InvalidArgument(_) => ErrorKind::Config,
            Error::Io { .. } | Error::GridFormat { .. } => ErrorKind::Io,
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
