use crate::error::{Error, Result};
use crate::field::IntensityMap;

use super::parabolic_vertex;

/// 1D intensity cut along x.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
    pub intensity: Vec<f64>,
    pub description: String,
}

impl Profile {
    pub fn new(x: Vec<f64>, intensity: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        if x.len() != intensity.len() {
            return Err(Error::InvalidArgument("profile axes differ in length".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("profile coordinates must increase".into()));
        }
        if intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("profile intensities must be finite and >= 0".into()));
        }
        Ok(Profile {
            x,
            intensity,
            description: description.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn pitch(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
        }
    }

    /// Sub-sample extremum at interior index `i`.
    fn refine(&self, i: usize) -> (f64, f64) {
        let p = &self.intensity;
        let (d, v) = parabolic_vertex(p[i - 1], p[i], p[i + 1]);
        (self.x[i] + d * self.pitch(), v)
    }

    fn is_local_max(&self, i: usize) -> bool {
        let p = &self.intensity;
        i > 0 && i + 1 < p.len() && p[i] > p[i - 1] && p[i] >= p[i + 1]
    }

    fn is_local_min(&self, i: usize) -> bool {
        let p = &self.intensity;
        i > 0 && i + 1 < p.len() && p[i] < p[i - 1] && p[i] <= p[i + 1]
    }
}

/// Averages the map over all rows with `y` in `[band.0, band.1]`.
pub fn extract_profile(map: &IntensityMap, band: (f64, f64)) -> Result<Profile> {
    let g = map.grid();
    let (lo, hi) = (band.0.min(band.1), band.0.max(band.1));
    let tol = 1e-9 * if g.is_1d() { g.dx } else { g.dy };
    let rows: Vec<usize> = (0..g.ny)
        .filter(|&j| g.y(j) >= lo - tol && g.y(j) <= hi + tol)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyBand(lo, hi));
    }
    let mut acc = vec![0.0; g.nx];
    for &j in &rows {
        for (a, v) in acc.iter_mut().zip(map.row(j)) {
            *a += v;
        }
    }
    let k = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    let x = (0..g.nx).map(|i| g.x(i)).collect();
    let description = if rows.len() == 1 {
        format!("row {} (y = {} m)", rows[0], g.y(rows[0]))
    } else {
        format!("mean of rows {}..={} (y in [{lo}, {hi}] m)", rows[0], rows[rows.len() - 1])
    };
    Profile::new(x, acc, description)
}

/// Contrast of one adjacent bright/dark fringe pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    pub v: f64,
    pub i_max: f64,
    pub i_min: f64,
    pub x_max: f64,
    pub x_min: f64,
    pub max_index: usize,
    pub min_index: usize,
    pub fringe_period_estimate: f64,
}

/// `V = (I_max - I_min) / (I_max + I_min)` for the brightest local maximum in
/// `window` and the next local minimum beside it (to the right, else left).
pub fn fringe_visibility(profile: &Profile, window: (f64, f64)) -> Result<VisibilityReport> {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    let in_window: Vec<usize> = (0..profile.len())
        .filter(|&i| profile.x[i] >= lo && profile.x[i] <= hi)
        .collect();
    let maxima: Vec<usize> = in_window
        .iter()
        .copied()
        .filter(|&i| profile.is_local_max(i))
        .collect();
    let imax = *maxima
        .iter()
        .max_by(|&&a, &&b| {
            profile.intensity[a]
                .total_cmp(&profile.intensity[b])
                .then(b.cmp(&a))
        })
        .ok_or(Error::NoExtremumPair)?;
    let imin = adjacent_minimum(profile, imax).ok_or(Error::NoExtremumPair)?;
    let mut report = visibility_at(profile, imax, imin);
    let refined: Vec<f64> = maxima.iter().map(|&i| profile.refine(i).0).collect();
    report.fringe_period_estimate = if refined.len() >= 2 {
        (refined[refined.len() - 1] - refined[0]) / (refined.len() - 1) as f64
    } else {
        2.0 * (report.x_max - report.x_min).abs()
    };
    Ok(report)
}

fn adjacent_minimum(profile: &Profile, imax: usize) -> Option<usize> {
    let n = profile.len();
    let right = (imax + 1..n.saturating_sub(1)).find(|&j| profile.is_local_min(j));
    right.or_else(|| (1..imax).rev().find(|&j| profile.is_local_min(j)))
}

/// Visibility from a fixed pair of discrete extrema, refined sub-sample.
pub(crate) fn visibility_at(profile: &Profile, imax: usize, imin: usize) -> VisibilityReport {
    let (x_max, i_max) = profile.refine(imax);
    let (x_min, i_min) = profile.refine(imin);
    let i_max = i_max.max(0.0);
    let i_min = i_min.clamp(0.0, i_max);
    let v = if i_max + i_min > 0.0 {
        (i_max - i_min) / (i_max + i_min)
    } else {
        0.0
    };
    VisibilityReport {
        v,
        i_max,
        i_min,
        x_max,
        x_min,
        max_index: imax,
        min_index: imin,
        fringe_period_estimate: 2.0 * (x_max - x_min).abs(),
    }
}

/// Visibility of the `count` bright fringes nearest `center`, each paired
/// with its adjacent dark fringe.
pub fn central_visibilities(
    profile: &Profile,
    center: f64,
    period: f64,
    count: usize,
) -> Result<Vec<VisibilityReport>> {
    let mut maxima: Vec<(f64, usize)> = (0..profile.len())
        .filter(|&i| profile.is_local_max(i))
        .map(|i| ((profile.x[i] - center).abs(), i))
        .collect();
    maxima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::with_capacity(count);
    for &(_, i) in maxima.iter().take(count) {
        let x = profile.x[i];
        out.push(fringe_visibility(profile, (x - 0.25 * period, x + 0.25 * period))?);
    }
    if out.len() < count {
        return Err(Error::NoExtremumPair);
    }
    out.sort_by(|a, b| a.x_max.total_cmp(&b.x_max));
    Ok(out)
}

/// The `count` local minima nearest `near`, sub-sample refined, ordered by distance.
pub fn locate_fringe_minima(profile: &Profile, near: f64, count: usize) -> Result<Vec<f64>> {
    let mut minima: Vec<f64> = (0..profile.len())
        .filter(|&i| profile.is_local_min(i))
        .map(|i| profile.refine(i).0)
        .collect();
    if minima.len() < count {
        return Err(Error::NotEnoughMinima {
            found: minima.len(),
            wanted: count,
        });
    }
    minima.sort_by(|a, b| (a - near).abs().total_cmp(&(b - near).abs()).then(a.total_cmp(b)));
    minima.truncate(count);
    Ok(minima)
}

/// All local minima with refined position inside `range`, in increasing x.
pub fn fringe_minima_in(profile: &Profile, range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    (0..profile.len())
        .filter(|&i| profile.is_local_min(i))
        .map(|i| profile.refine(i).0)
        .filter(|x| *x >= lo && *x <= hi)
        .collect()
}
