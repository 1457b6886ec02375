//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{PhotonHistogram, Profile};
use crate::scenarios::{CheckReport, Fig4Pair, ScenarioReport, SweepReport};

use super::config::{write_config, ExperimentConfig};
use super::fmt::format_float;

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRow {
    pub scenario: String,
    pub v: Option<f64>,
    pub i_max: Option<f64>,
    pub i_min: Option<f64>,
    pub phi_control: Option<f64>,
    pub phi_observed: Option<f64>,
    pub r_percent: Option<f64>,
    pub crosstalk: Option<f64>,
    pub gamma_l1_fraction: Option<f64>,
    /// `key=value` notes.
    pub flags: Vec<String>,
}

pub const METRICS_HEADER: [&str; 10] = [
    "scenario",
    "V",
    "I_max",
    "I_min",
    "phi_C",
    "phi_obs",
    "R_percent",
    "crosstalk",
    "gamma_l1_fraction",
    "flags",
];

fn flag(key: &str, v: f64) -> String {
    format!("{key}={}", format_float(v))
}

impl MetricsRow {
    pub fn from_report(r: &ScenarioReport) -> Self {
        let vis = r.central_visibility();
        let mut flags = r.flags.clone();
        for (k, x) in r.dark_fringes.iter().enumerate() {
            flags.push(flag(&format!("dark_fringe_{k}_m"), *x));
        }
        if let Some(p) = r.fringe_period {
            flags.push(flag("fringe_period_m", p));
        }
        if let Some((a, b)) = &r.rois {
            for roi in [a, b] {
                let name = roi.label.to_string().replace('\'', "p");
                flags.push(flag(&format!("roi_{name}_x_m"), roi.center.0));
                flags.push(flag(&format!("roi_{name}_radius_m"), roi.radius));
            }
        }
        if let Some(f) = r.roi_power_fraction {
            flags.push(flag("roi_power_fraction", f));
        }
        if !r.wire_positions.is_empty() {
            let xs: Vec<String> = r.wire_positions.iter().map(|x| format_float(*x)).collect();
            flags.push(format!("wire_x_m={}", xs.join(" ")));
        }
        flags.push(flag("guard_loss_fraction", r.diagnostics.guard_absorbed_fraction()));
        MetricsRow {
            scenario: r.id.to_string(),
            v: vis.map(|v| v.v),
            i_max: vis.map(|v| v.i_max),
            i_min: vis.map(|v| v.i_min),
            phi_control: r.flux.map(|f| f.phi_control),
            phi_observed: r.flux.map(|f| f.phi_observed),
            r_percent: r.flux.map(|f| f.r_percent),
            crosstalk: r.crosstalk,
            gamma_l1_fraction: r.decomposition.as_ref().map(|d| d.gamma_l1_fraction),
            flags,
        }
    }

    /// Summary row for one control/wire pair of the suite.
    pub fn from_pair(p: &Fig4Pair) -> Self {
        let prefix = match p.set {
            crate::scenarios::Fig4Set::P1Closed => "Fig4a",
            crate::scenarios::Fig4Set::P2Closed => "Fig4b",
            crate::scenarios::Fig4Set::BothOpen => "Fig4c",
        };
        let mut flags = vec![
            flag("r_uncertainty", p.r_uncertainty),
            flag("radius_sensitivity", p.radius_sensitivity),
            flag("guard_term", p.guard_term),
            flag("intercepted_percent", p.intercepted_percent),
            flag("intercepted_airy_percent", p.intercepted_airy_percent),
        ];
        if let Some(w) = p.width_change_percent() {
            flags.push(flag("width_change_percent", w));
        }
        if p.flux.is_flux_gain() {
            flags.push("flux_gain".into());
        }
        MetricsRow {
            scenario: format!("{prefix}_{}_Pair", p.set.label()),
            phi_control: Some(p.flux.phi_control),
            phi_observed: Some(p.flux.phi_observed),
            r_percent: Some(p.flux.r_percent),
            flags,
            ..MetricsRow::default()
        }
    }

    fn record(&self) -> Vec<String> {
        let o = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        vec![
            self.scenario.clone(),
            o(self.v),
            o(self.i_max),
            o(self.i_min),
            o(self.phi_control),
            o(self.phi_observed),
            o(self.r_percent),
            o(self.crosstalk),
            o(self.gamma_l1_fraction),
            self.flags.join(";"),
        ]
    }
}

fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |e: csv::Error| {
        let msg = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => Error::io(path, std::io::Error::other(msg)),
        }
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    write_table(path, &METRICS_HEADER, rows.iter().map(MetricsRow::record))
}

pub fn write_profile_csv(profile: &Profile, path: &Path) -> Result<()> {
    write_table(
        path,
        &["x_m", "intensity"],
        profile
            .x
            .iter()
            .zip(&profile.intensity)
            .map(|(x, v)| [format_float(*x), format_float(*v)]),
    )
}

pub fn write_sweep_csv(sweep: &SweepReport, path: &Path) -> Result<()> {
    write_table(
        path,
        &["x_m", "R_percent"],
        sweep
            .positions
            .iter()
            .zip(&sweep.r_percent)
            .map(|(x, r)| [format_float(*x), format_float(*r)]),
    )
}

pub fn write_histogram_csv(h: &PhotonHistogram, path: &Path) -> Result<()> {
    write_table(
        path,
        &["x_center_m", "counts", "expected"],
        h.centers
            .iter()
            .zip(&h.counts)
            .zip(&h.expected)
            .map(|((x, c), e)| [format_float(*x), format_float(*c), format_float(*e)]),
    )
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    /// Command-line arguments beyond the configuration, as `(name, value)`.
    pub arguments: Vec<(String, String)>,
    pub scenarios: Vec<String>,
    pub config: ExperimentConfig,
    pub rng_algorithm: String,
    pub sampling: Option<CheckReport>,
    /// `(scenario, guard loss fraction, band loss fraction)`.
    pub losses: Vec<(String, f64, f64)>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, timestamp: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments: Vec::new(),
            scenarios: Vec::new(),
            config: config.clone(),
            rng_algorithm: crate::metrics::RNG_ALGORITHM.to_string(),
            sampling: None,
            losses: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
            timestamp: timestamp.to_string(),
        }
    }

    pub fn record_losses(&mut self, r: &ScenarioReport) {
        self.losses.push((
            r.id.to_string(),
            r.diagnostics.guard_absorbed_fraction(),
            r.diagnostics.band_removed_fraction(),
        ));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "whichway run manifest");
        let _ = writeln!(s, "tool_version: {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "timestamp: {}", self.timestamp);
        let _ = writeln!(s, "command: {}", self.command);
        for (k, v) in &self.arguments {
            let _ = writeln!(s, "argument: {k} = {v}");
        }
        let _ = writeln!(s, "scenarios: {}", self.scenarios.join(", "));
        let _ = writeln!(s, "seed: {}", self.config.seed);
        let _ = writeln!(s, "rng: {}", self.rng_algorithm);
        let _ = writeln!(s, "config_sha256: {}", self.config.content_hash());
        let _ = writeln!(s, "preview_gamma: {}", format_float(self.config.preview_gamma));
        if let Some(c) = &self.sampling {
            let _ = writeln!(s, "lens_phase_step_rad: {}", format_float(c.lens_phase_step));
            for (z0, z1, d) in &c.hops {
                let _ = writeln!(
                    s,
                    "hop: {} -> {} m; admitted_band_fraction {}; band fx_max {} fy_max {} 1/m; beam_halfwidth_supported {} m; warnings {:?}",
                    format_float(*z0),
                    format_float(*z1),
                    format_float(d.admitted_band_fraction),
                    format_float(d.band.fx_max),
                    format_float(d.band.fy_max),
                    format_float(d.max_beam_halfwidth_supported),
                    d.warnings
                );
            }
        }
        for (id, guard, band) in &self.losses {
            let _ = writeln!(
                s,
                "losses: {id}; guard_absorbed_fraction {}; band_removed_fraction {}",
                format_float(*guard),
                format_float(*band)
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        for f in &self.files {
            let _ = writeln!(s, "file: {f}");
        }
        let _ = writeln!(s, "config:");
        for line in write_config(&self.config).lines() {
            let _ = writeln!(s, "  {line}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("metrics.csv");
        let rows = [MetricsRow {
            scenario: "X".into(),
            v: Some(0.5),
            r_percent: Some(2.0),
            flags: vec!["a=1".into(), "b=2.5e-06".into()],
            ..MetricsRow::default()
        }];
        write_metrics_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "scenario,V,I_max,I_min,phi_C,phi_obs,R_percent,crosstalk,gamma_l1_fraction,flags\nX,0.5,,,,,2.0,,,a=1;b=2.5e-06\n"
        );
    }

    #[test]
    fn profile_csv_uses_shortest_floats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("profile.csv");
        let prof = Profile::new(vec![-2.5e-6, 0.0], vec![0.1, 3.0], "t").unwrap();
        write_profile_csv(&prof, &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "x_m,intensity\n-2.5e-06,0.1\n0.0,3.0\n"
        );
    }

    #[test]
    fn manifest_has_one_timestamp_line_and_config() {
        let c = ExperimentConfig::default();
        let m = RunManifest::new("check", &c, "2000-01-01T00:00:00Z");
        let text = m.render();
        assert_eq!(text.lines().filter(|l| l.starts_with("timestamp:")).count(), 1);
        assert!(text.contains(&format!("config_sha256: {}", c.content_hash())));
        assert!(text.contains("  wire_thickness_m = 1e-05"));
        let other = RunManifest::new("check", &c, "2001-01-01T00:00:00Z").render();
        let strip = |t: &str| t.lines().filter(|l| !l.starts_with("timestamp:")).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(&text), strip(&other));
    }
}
