//! Reported quantities: fringe visibility and extrema, which-way ROIs and
//! their flux, wire-induced reduction, channel crosstalk, interference cross
//! terms, and Monte Carlo photon statistics.

mod decompose;
mod flux;
mod photons;
mod profile;
mod roi;

pub use decompose::{decompose, DecompositionReport, SignedMap};
pub use flux::{reduction_r, FluxReport};
pub use photons::{
    sample_photons, sample_photons_in_rois, sample_photons_with, visibility_standard_error,
    HistogramVisibility, PhotonEvents, PhotonHistogram, RNG_ALGORITHM,
};
pub use profile::{
    central_visibilities, extract_profile, fringe_minima_in, fringe_visibility, locate_fringe_minima, Profile,
    VisibilityReport,
};
pub use roi::{
    channel_width_x, crosstalk, detect_rois, first_radial_minimum, flux_in_roi, radial_profile,
    Channel, Roi,
};

/// Vertex of the parabola through three equally spaced samples, as
/// `(offset in samples from the middle one, value)`.
pub(crate) fn parabolic_vertex(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return (0.0, b);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (delta, b - 0.25 * (a - c) * delta)
}
