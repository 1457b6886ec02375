use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::field::IntensityMap;
use crate::par::{map_range, Exec};

use super::profile::{fringe_visibility, visibility_at, Profile};
use super::roi::{Channel, Roi};

/// Generator used for photon sampling, as written to run manifests.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = event block index, 65536 events per block";

const BLOCK: usize = 1 << 16;

/// Detected photon positions drawn from a normalized intensity map.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonEvents {
    pub seed: u64,
    pub n: usize,
    /// `(x, y)` in metres; `y` is 0 for 1D grids.
    pub events: Vec<(f64, f64)>,
    pub roi_counts: Vec<(Channel, usize)>,
}

/// Draws `n` events by inverting the cumulative cell weights and placing each
/// event uniformly within its cell.
///
/// Events are generated in blocks of 65536, each from its own stream of the
/// seeded generator, so the result does not depend on the thread count.
pub fn sample_photons(map: &IntensityMap, n: usize, seed: u64) -> Result<PhotonEvents> {
    sample_photons_with(map, n, seed, Exec::default())
}

pub fn sample_photons_with(map: &IntensityMap, n: usize, seed: u64, exec: Exec) -> Result<PhotonEvents> {
    if n == 0 {
        return Err(Error::InvalidArgument("photon count must be at least 1".into()));
    }
    let cdf: Vec<f64> = map
        .values()
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let total = cdf.last().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let g = *map.grid();
    let last = cdf.len() - 1;
    let blocks = n.div_ceil(BLOCK);
    let chunks = map_range(exec, blocks, |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BLOCK.min(n - b * BLOCK);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(last);
            let (i, j) = (k % g.nx, k / g.nx);
            let x = g.x(i) + (rng.random::<f64>() - 0.5) * g.dx;
            let y = if g.is_1d() {
                0.0
            } else {
                g.y(j) + (rng.random::<f64>() - 0.5) * g.dy
            };
            out.push((x, y));
        }
        out
    });
    Ok(PhotonEvents {
        seed,
        n,
        events: chunks.into_iter().flatten().collect(),
        roi_counts: Vec::new(),
    })
}

/// As [`sample_photons`], also counting the events that land in each ROI.
pub fn sample_photons_in_rois(
    map: &IntensityMap,
    n: usize,
    seed: u64,
    rois: &[Roi],
) -> Result<PhotonEvents> {
    let mut ev = sample_photons(map, n, seed)?;
    let one_d = map.grid().is_1d();
    ev.roi_counts = rois
        .iter()
        .map(|r| {
            let c = ev.events.iter().filter(|&&(x, y)| r.contains(x, y, one_d)).count();
            (r.label, c)
        })
        .collect();
    Ok(ev)
}

/// Histogram of event x coordinates over whole grid columns, together with
/// the counts expected from the map itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonHistogram {
    pub n: usize,
    pub centers: Vec<f64>,
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub expected: Vec<f64>,
}

impl PhotonHistogram {
    /// Bins `events` into groups of `cells_per_bin` grid columns covering
    /// `window`. Events outside the binned columns are not counted.
    pub fn x_marginal(
        map: &IntensityMap,
        events: &PhotonEvents,
        window: (f64, f64),
        cells_per_bin: usize,
    ) -> Result<Self> {
        if cells_per_bin == 0 {
            return Err(Error::InvalidArgument("bins must span at least one cell".into()));
        }
        let g = map.grid();
        let lo = g.x_index(window.0.min(window.1)).unwrap_or(0);
        let hi = g.x_index(window.0.max(window.1)).unwrap_or(g.nx - 1);
        let bins = (hi + 1 - lo) / cells_per_bin;
        if bins < 3 {
            return Err(Error::InvalidArgument("histogram window holds fewer than 3 bins".into()));
        }
        let left = g.x(lo) - 0.5 * g.dx;
        let edges: Vec<f64> = (0..=bins)
            .map(|b| left + (b * cells_per_bin) as f64 * g.dx)
            .collect();
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();

        let mut column = vec![0.0; g.nx];
        for j in 0..g.ny {
            for (c, v) in column.iter_mut().zip(map.row(j)) {
                *c += v;
            }
        }
        let total: f64 = column.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroPower);
        }
        let scale = events.n as f64 / total;
        let expected = (0..bins)
            .map(|b| {
                let s = lo + b * cells_per_bin;
                column[s..s + cells_per_bin].iter().sum::<f64>() * scale
            })
            .collect();

        let mut counts = vec![0.0; bins];
        let width = cells_per_bin as f64 * g.dx;
        for &(x, _) in &events.events {
            let t = ((x - left) / width).floor();
            if t >= 0.0 && (t as usize) < bins {
                counts[t as usize] += 1.0;
            }
        }
        Ok(PhotonHistogram {
            n: events.n,
            centers,
            edges,
            counts,
            expected,
        })
    }

    /// Fringe visibility of the sampled histogram, measured at the extrema
    /// the expected histogram has inside `window`.
    pub fn visibility(&self, window: (f64, f64)) -> Result<HistogramVisibility> {
        let expected = Profile::new(self.centers.clone(), self.expected.clone(), "expected counts")?;
        let reference = fringe_visibility(&expected, window)?;
        let sampled = Profile::new(self.centers.clone(), self.counts.clone(), "sampled counts")?;
        let (imax, imin) = (reference.max_index, reference.min_index);
        Ok(HistogramVisibility {
            sampled: visibility_at(&sampled, imax, imin).v,
            expected: reference.v,
            standard_error: visibility_standard_error(&self.expected, imax, imin),
            max_index: imax,
            min_index: imin,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramVisibility {
    pub sampled: f64,
    pub expected: f64,
    /// Shot-noise standard error of `sampled`.
    pub standard_error: f64,
    pub max_index: usize,
    pub min_index: usize,
}

/// Poisson standard error of the two-extremum visibility of `counts` at the
/// given interior bins. The visibility depends on the three bins around each
/// extremum; each is treated as independent with variance equal to its
/// count and the gradient is taken by central differences.
pub fn visibility_standard_error(counts: &[f64], imax: usize, imin: usize) -> f64 {
    let x: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
    let v = |c: &[f64]| {
        let p = Profile {
            x: x.clone(),
            intensity: c.to_vec(),
            description: String::new(),
        };
        visibility_at(&p, imax, imin).v
    };
    let mut bins: Vec<usize> = [imax, imin]
        .iter()
        .flat_map(|&i| [i - 1, i, i + 1])
        .collect();
    bins.sort_unstable();
    bins.dedup();
    let mut work = counts.to_vec();
    let mut var = 0.0;
    for k in bins {
        let h = 1e-4 * counts[k].max(1.0);
        work[k] = counts[k] + h;
        let up = v(&work);
        work[k] = (counts[k] - h).max(0.0);
        let down = v(&work);
        let span = counts[k] + h - work[k];
        work[k] = counts[k];
        let grad = (up - down) / span;
        var += grad * grad * counts[k].max(0.0);
    }
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn map(n: usize, f: impl Fn(usize, usize) -> f64) -> IntensityMap {
        let g = GridSpec::square(n, 1.0, 1.0).unwrap();
        let v = (0..n * n).map(|k| f(k % n, k / n)).collect();
        IntensityMap::new(g, 0.0, v).unwrap()
    }

    #[test]
    fn single_cell_receives_everything() {
        let m = map(8, |i, j| if (i, j) == (5, 2) { 3.0 } else { 0.0 });
        let ev = sample_photons(&m, 1000, 7).unwrap();
        assert_eq!(ev.events.len(), 1000);
        let g = m.grid();
        for &(x, y) in &ev.events {
            assert!((x - g.x(5)).abs() <= 0.5 && (y - g.y(2)).abs() <= 0.5);
        }
    }

    #[test]
    fn zero_map_and_zero_count_rejected() {
        let m = map(4, |_, _| 0.0);
        assert!(matches!(sample_photons(&m, 10, 1), Err(Error::ZeroPower)));
        let m = map(4, |_, _| 1.0);
        assert!(sample_photons(&m, 0, 1).is_err());
    }

    #[test]
    fn same_seed_same_events_any_exec() {
        let m = map(16, |i, j| (i * j) as f64 + 1.0);
        let n = 2 * BLOCK + 17;
        let a = sample_photons_with(&m, n, 42, Exec::Sequential).unwrap();
        let b = sample_photons_with(&m, n, 42, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let c = sample_photons(&m, n, 43).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn events_stay_inside_window() {
        let m = map(8, |_, _| 1.0);
        let ev = sample_photons(&m, 5000, 3).unwrap();
        let g = m.grid();
        let (x0, x1) = g.x_bounds();
        let (y0, y1) = g.y_bounds();
        assert!(ev
            .events
            .iter()
            .all(|&(x, y)| x >= x0 && x <= x1 && y >= y0 && y <= y1));
    }

    #[test]
    fn roi_counts_bounded_by_n() {
        let m = map(32, |_, _| 1.0);
        let rois = [
            Roi::new(Channel::First, (-8.0, 0.0), 4.0).unwrap(),
            Roi::new(Channel::Second, (8.0, 0.0), 4.0).unwrap(),
        ];
        let ev = sample_photons_in_rois(&m, 20_000, 5, &rois).unwrap();
        let total: usize = ev.roi_counts.iter().map(|c| c.1).sum();
        assert!(total <= ev.n);
        assert!(ev.roi_counts.iter().all(|c| c.1 > 0));
    }

    #[test]
    fn standard_error_of_linear_combination() {
        // Symmetric neighbours put each vertex on its centre bin, where the
        // refined value has zero slope in the neighbours.
        let mut c = vec![150.0; 9];
        c[1..4].copy_from_slice(&[300.0, 400.0, 300.0]);
        c[5..8].copy_from_slice(&[200.0, 100.0, 200.0]);
        let (m, n) = (400.0f64, 100.0f64);
        let dm = 2.0 * n / (m + n).powi(2);
        let dn = -2.0 * m / (m + n).powi(2);
        let want = (dm * dm * m + dn * dn * n).sqrt();
        let got = visibility_standard_error(&c, 2, 6);
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn histogram_expected_counts_sum_to_window_share() {
        let m = map(16, |i, _| 1.0 + (i % 4) as f64);
        let ev = sample_photons(&m, 10_000, 9).unwrap();
        let h = PhotonHistogram::x_marginal(&m, &ev, (-8.0, 7.0), 1).unwrap();
        assert_eq!(h.counts.len(), 16);
        assert!((h.expected.iter().sum::<f64>() - 10_000.0).abs() < 1e-6);
        assert_eq!(h.counts.iter().sum::<f64>(), 10_000.0);
    }
}
