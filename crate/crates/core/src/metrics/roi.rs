use std::fmt;

use crate::error::{Error, Result};
use crate::field::IntensityMap;

use super::parabolic_vertex;

/// Which-way output channel. Pinhole 1 sits at +x and, after the beams
/// cross at the focus, lands in channel 1' at -x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    First,
    Second,
}

impl Channel {
    /// Sign of x on the which-way plane.
    pub fn side(self) -> f64 {
        match self {
            Channel::First => -1.0,
            Channel::Second => 1.0,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::First => write!(f, "1'"),
            Channel::Second => write!(f, "2'"),
        }
    }
}

/// Circular region of interest around one beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    pub label: Channel,
    pub center: (f64, f64),
    pub radius: f64,
}

impl Roi {
    pub fn new(label: Channel, center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ROI radius {radius} must be > 0")));
        }
        Ok(Roi {
            label,
            center,
            radius,
        })
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Roi::new(self.label, self.center, radius)
    }

    pub fn contains(&self, x: f64, y: f64, one_d: bool) -> bool {
        let dx = x - self.center.0;
        if one_d {
            return dx.abs() <= self.radius;
        }
        let dy = y - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }

    pub fn overlaps(&self, other: &Roi) -> bool {
        let d = ((self.center.0 - other.center.0).powi(2) + (self.center.1 - other.center.1).powi(2)).sqrt();
        d < self.radius + other.radius
    }
}

fn for_each_sample(map: &IntensityMap, mut f: impl FnMut(f64, f64, f64)) {
    let g = map.grid();
    for j in 0..g.ny {
        let y = g.y(j);
        for (i, v) in map.row(j).iter().enumerate() {
            f(g.x(i), y, *v);
        }
    }
}

/// Azimuthally averaged intensity about `center` out to `max_radius`, as
/// `(radius, mean)` pairs for non-empty bins of width `bin_width`.
pub fn radial_profile(
    map: &IntensityMap,
    center: (f64, f64),
    max_radius: f64,
    bin_width: f64,
) -> Vec<(f64, f64)> {
    let nbins = (max_radius / bin_width).ceil().max(1.0) as usize;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    let one_d = map.grid().is_1d();
    for_each_sample(map, |x, y, v| {
        let r = if one_d {
            (x - center.0).abs()
        } else {
            ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt()
        };
        if r < max_radius {
            let k = ((r / bin_width) as usize).min(nbins - 1);
            sum[k] += v;
            count[k] += 1;
        }
    });
    (0..nbins)
        .filter(|&k| count[k] > 0)
        .map(|k| ((k as f64 + 0.5) * bin_width, sum[k] / count[k] as f64))
        .collect()
}

/// First local minimum of a radial profile that is below half its peak and
/// not undercut within the next `lookahead` bins.
pub fn first_radial_minimum(profile: &[(f64, f64)], lookahead: usize) -> Option<f64> {
    let peak = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let n = profile.len();
    for i in 1..n.saturating_sub(1) {
        let v = profile[i].1;
        if v >= profile[i - 1].1 || v >= 0.5 * peak {
            continue;
        }
        let end = (i + lookahead).min(n - 1);
        if profile[i + 1..=end].iter().all(|p| p.1 >= v) {
            let (a, b, c) = (profile[i - 1], profile[i], profile[i + 1]);
            let h = b.0 - a.0;
            let uniform = ((c.0 - b.0) - h).abs() < 1e-9 * h;
            let r = if uniform && c.1 > v {
                b.0 + parabolic_vertex(a.1, b.1, c.1).0 * h
            } else {
                b.0
            };
            return Some(r);
        }
    }
    None
}

fn radial_bins(map: &IntensityMap) -> (f64, usize) {
    let g = map.grid();
    if g.is_1d() {
        (g.dx, 2)
    } else {
        (0.25 * g.dx.min(g.dy), 8)
    }
}

/// Finds the two which-way lobes: one centroid per half plane, radius at the
/// first minimum of the radial profile. Returns `(channel 1', channel 2')`.
pub fn detect_rois(control: &IntensityMap) -> Result<(Roi, Roi)> {
    let one_d = control.grid().is_1d();
    let mut rois = Vec::with_capacity(2);
    for channel in [Channel::First, Channel::Second] {
        let side = channel.side();
        let (mut w, mut wx, mut wy) = (0.0, 0.0, 0.0);
        for_each_sample(control, |x, y, v| {
            if x * side > 0.0 {
                w += v;
                wx += v * x;
                wy += v * y;
            }
        });
        if !(w > 0.0) {
            return Err(Error::RoiDetection(format!("no light in the half plane of channel {channel}")));
        }
        let center = (wx / w, if one_d { 0.0 } else { wy / w });
        let (bin, lookahead) = radial_bins(control);
        let profile = radial_profile(control, center, center.0.abs(), bin);
        let radius = first_radial_minimum(&profile, lookahead).ok_or_else(|| {
            Error::RoiDetection(format!(
                "no radial minimum for channel {channel} before the other lobe; lobes not separated"
            ))
        })?;
        rois.push(Roi::new(channel, center, radius)?);
    }
    Ok((rois[0], rois[1]))
}

/// Integrated intensity over samples whose centers lie inside the ROI.
pub fn flux_in_roi(map: &IntensityMap, roi: &Roi) -> f64 {
    let one_d = map.grid().is_1d();
    let mut acc = 0.0;
    for_each_sample(map, |x, y, v| {
        if roi.contains(x, y, one_d) {
            acc += v;
        }
    });
    acc * map.grid().cell_area()
}

fn peak_in_roi(map: &IntensityMap, roi: &Roi) -> f64 {
    let one_d = map.grid().is_1d();
    let mut peak = 0.0f64;
    for_each_sample(map, |x, y, v| {
        if roi.contains(x, y, one_d) {
            peak = peak.max(v);
        }
    });
    peak
}

/// Peak intensity leaking into `other_roi`, relative to the peak in `source_roi`.
pub fn crosstalk(map: &IntensityMap, source_roi: &Roi, other_roi: &Roi) -> Result<f64> {
    if source_roi.overlaps(other_roi) {
        return Err(Error::OverlappingRois);
    }
    let source = peak_in_roi(map, source_roi);
    if !(source > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok(peak_in_roi(map, other_roi) / source)
}

/// RMS width along x of the light in the ROI's half plane.
pub fn channel_width_x(map: &IntensityMap, roi: &Roi) -> f64 {
    let side = roi.label.side();
    let (mut w, mut wx) = (0.0, 0.0);
    for_each_sample(map, |x, _, v| {
        if x * side > 0.0 {
            w += v;
            wx += v * x;
        }
    });
    if w <= 0.0 {
        return 0.0;
    }
    let mean = wx / w;
    let mut acc = 0.0;
    for_each_sample(map, |x, _, v| {
        if x * side > 0.0 {
            acc += v * (x - mean).powi(2);
        }
    });
    (acc / w).sqrt()
}
