//! Configuration files and output artifacts.

pub mod config;
pub mod fmt;
pub mod grid_file;
pub mod pgm;
pub mod reports;

pub use config::{parse_config, read_config, write_config, DimensionMode, ExperimentConfig, SelectorMode};
pub use fmt::format_float;
pub use grid_file::{read_grid, write_grid, write_signed_grid};
pub use pgm::{write_preview, DEFAULT_PREVIEW_GAMMA};
pub use reports::{write_histogram_csv, write_metrics_csv, write_profile_csv, write_sweep_csv, MetricsRow, RunManifest};
