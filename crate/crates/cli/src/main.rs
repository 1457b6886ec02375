use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use whichway::io::reports::{write_histogram_csv, MetricsRow, RunManifest};
use whichway::io::{
    read_config, write_grid, write_metrics_csv, write_preview, write_profile_csv,
    write_signed_grid, write_sweep_csv, ExperimentConfig,
};
use whichway::scenarios::{
    check_numerics, run_decomposition, run_fig4_suite, run_photons, run_scenario, sweep_wire,
    Plane, ScenarioId, ScenarioReport, DEFAULT_SWEEP_STEPS, PLANE_DISTANCE_NOTE,
};
use whichway::{Error, ErrorKind, IntensityMap, Result};

#[derive(Parser)]
#[command(name = "whichway", version, about = "Which-way double-pinhole wave-optics simulator")]
struct Cli {
    /// Configuration file (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interference pattern at the focal plane and which-way lobes downstream.
    Baseline,
    /// The six control/wire runs with frozen ROIs.
    Fig4,
    /// Single-beam and cross terms on one observation plane.
    Decompose {
        #[arg(long, value_enum, default_value = "sigma2")]
        plane: PlaneArg,
    },
    /// Flux reduction for a single wire stepped across the focal plane.
    Sweep {
        /// First wire position in meters [default: 0].
        #[arg(long, allow_hyphen_values = true)]
        min: Option<f64>,
        /// Last wire position in meters [default: one fringe period].
        #[arg(long, allow_hyphen_values = true)]
        max: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SWEEP_STEPS)]
        steps: usize,
    },
    /// Monte Carlo photon detection.
    Photons {
        /// Number of photons [default: photons_n from the configuration].
        #[arg(long)]
        n: Option<usize>,
        /// RNG seed [default: seed from the configuration].
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "sigma1")]
        plane: PlaneArg,
    },
    /// Print sampling diagnostics for every propagation hop; writes nothing.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    Sigma1,
    Sigma2,
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Plane {
        match p {
            PlaneArg::Sigma1 => Plane::Sigma1,
            PlaneArg::Sigma2 => Plane::Sigma2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Io => 1,
            })
        }
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Collects output files and the manifest for one command.
struct Output {
    dir: PathBuf,
    manifest: RunManifest,
    rows: Vec<MetricsRow>,
}

impl Output {
    fn new(command: &str, config: &ExperimentConfig) -> Result<Self> {
        let dir = config.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let mut manifest = RunManifest::new(command, config, &timestamp());
        manifest.sampling = Some(check_numerics(&config.geometry, &config.numerics()?)?);
        Ok(Output {
            dir,
            manifest,
            rows: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.files.push(name.to_string());
        self.dir.join(name)
    }

    fn map(&mut self, stem: &str, map: &IntensityMap) -> Result<()> {
        let p = self.path(&format!("{stem}.afgrid"));
        write_grid(map, &p)?;
        let p = self.path(&format!("{stem}.pgm"));
        write_preview(map, &p, self.manifest.config.preview_gamma)
    }

    fn scenario(&mut self, r: &ScenarioReport) -> Result<()> {
        self.manifest.scenarios.push(r.id.to_string());
        self.manifest.record_losses(r);
        for m in &r.maps {
            self.map(&format!("{}_{}", r.id, m.plane.label()), &m.map)?;
        }
        if let Some(p) = &r.profile {
            let path = self.path(&format!("profile_{}.csv", r.id));
            write_profile_csv(p, &path)?;
        }
        self.rows.push(MetricsRow::from_report(r));
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        if !self.rows.is_empty() {
            let p = self.path("metrics.csv");
            write_metrics_csv(&self.rows, &p)?;
        }
        let p = self.dir.join("manifest.txt");
        self.manifest.write(&p)?;
        println!("wrote {} files to {}", self.manifest.files.len() + 1, self.dir.display());
        Ok(())
    }
}

fn um(x: f64) -> String {
    format!("{:.3} um", x * 1e6)
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => read_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    match cli.command {
        Command::Check => check(&config),
        Command::Baseline => baseline(&config),
        Command::Fig4 => fig4(&config),
        Command::Decompose { plane } => decompose(&config, plane.into()),
        Command::Sweep { min, max, steps } => {
            let min = min.unwrap_or(0.0);
            let max = max.unwrap_or(config.geometry.fringe_period());
            sweep(&config, min, max, steps)
        }
        Command::Photons { n, seed, plane } => {
            if let Some(n) = n {
                config.photons_n = n;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            photons(&config, plane.into())
        }
    }
}

fn check(config: &ExperimentConfig) -> Result<()> {
    let numerics = config.numerics()?;
    let report = check_numerics(&config.geometry, &numerics)?;
    let g = numerics.grid;
    println!(
        "grid {} x {} at {} x {} m, window {} m, wavelength {} m",
        g.nx,
        g.ny,
        g.dx,
        g.dy,
        g.width(),
        g.wavelength
    );
    println!("lens edge phase step: {:.4} rad (limit pi)", report.lens_phase_step);
    for (z0, z1, d) in &report.hops {
        println!(
            "hop {z0:.4} -> {z1:.4} m: admitted band {:.4}, fx_max {:.4e} 1/m, reach {:.4e} m, warnings {:?}",
            d.admitted_band_fraction, d.band.fx_max, d.max_beam_halfwidth_supported, d.warnings
        );
    }
    if report.lens_phase_step > std::f64::consts::PI {
        return Err(Error::LensUndersampled {
            step: report.lens_phase_step,
        });
    }
    if let Some((_, _, d)) = report.refused().first() {
        return Err(Error::SamplingRefused {
            dz: d.dz,
            floor: report.band_floor,
            diagnostics: d.clone(),
        });
    }
    println!("all hops admitted");
    Ok(())
}

fn baseline(config: &ExperimentConfig) -> Result<()> {
    let numerics = config.numerics()?;
    let options = config.options();
    let mut out = Output::new("baseline", config)?;
    for id in [ScenarioId::Sigma1Interference, ScenarioId::Sigma2Control] {
        let r = run_scenario(&config.geometry, &numerics, &options, id)?;
        for v in &r.visibility {
            println!("{id}: fringe at {} V = {:.4}", um(v.x_max), v.v);
        }
        for x in &r.dark_fringes {
            println!("{id}: dark fringe at {}", um(*x));
        }
        if let Some((a, b)) = &r.rois {
            for roi in [a, b] {
                println!(
                    "{id}: channel {} at x = {:.4} mm, radius {:.4} mm",
                    roi.label,
                    roi.center.0 * 1e3,
                    roi.radius * 1e3
                );
            }
        }
        if let Some(c) = r.crosstalk {
            println!("{id}: crosstalk {c:.3e}");
        }
        out.scenario(&r)?;
    }
    out.finish()
}

fn fig4(config: &ExperimentConfig) -> Result<()> {
    let numerics = config.numerics()?;
    let suite = run_fig4_suite(&config.geometry, &numerics, &config.options())?;
    let mut out = Output::new("fig4", config)?;
    for r in suite.scenarios() {
        out.scenario(r)?;
    }
    for p in &suite.pairs {
        out.rows.push(MetricsRow::from_pair(p));
        let width = p
            .width_change_percent()
            .map(|w| format!(", width change {w:+.2}%"))
            .unwrap_or_default();
        println!(
            "{}: R = {:.3} +- {:.3}% (wire intercepts {:.3}% of the focal-plane power{width})",
            p.set.label(),
            p.flux.r_percent,
            p.r_uncertainty,
            p.intercepted_percent
        );
    }
    println!("control consistency {:.5}", suite.control_consistency);
    out.manifest.notes.push(format!(
        "wire x positions: {:?} m",
        suite.wire_positions
    ));
    out.manifest.notes.push(format!(
        "plane distance sigma2_z - sigma1_z = {} m; {PLANE_DISTANCE_NOTE}",
        suite.plane_distance
    ));
    out.finish()
}

fn decompose(config: &ExperimentConfig, plane: Plane) -> Result<()> {
    let numerics = config.numerics()?;
    let r = run_decomposition(&config.geometry, &numerics, &config.options(), plane)?;
    let mut out = Output::new("decompose", config)?;
    out.manifest.arguments.push(("plane".into(), plane.label().into()));
    out.scenario(&r)?;
    let d = r.decomposition.as_ref().expect("decomposition report");
    let stem = r.id.to_string();
    out.map(&format!("{stem}_p_total"), &d.p_total)?;
    out.map(&format!("{stem}_i1"), &d.i1)?;
    out.map(&format!("{stem}_i2"), &d.i2)?;
    let p = out.path(&format!("{stem}_gamma.afgrid"));
    write_signed_grid(&d.gamma, &p)?;
    println!("{stem}: gamma_l1_fraction = {:.4e}", d.gamma_l1_fraction);
    if let Some(v) = r.central_visibility() {
        println!("{stem}: central V = {:.4}", v.v);
    }
    out.finish()
}

fn sweep(config: &ExperimentConfig, min: f64, max: f64, steps: usize) -> Result<()> {
    let numerics = config.numerics()?;
    let s = sweep_wire(&config.geometry, &numerics, min, max, steps)?;
    let mut out = Output::new("sweep", config)?;
    out.manifest.arguments.extend([
        ("min".into(), min.to_string()),
        ("max".into(), max.to_string()),
        ("steps".into(), steps.to_string()),
    ]);
    out.manifest.scenarios.push(ScenarioId::WireSweep.to_string());
    for (x, r) in s.positions.iter().zip(&s.r_percent) {
        println!("wire at {}: R = {r:.4}%", um(*x));
    }
    for x in &s.dark_fringes {
        println!("dark fringe at {}", um(*x));
    }
    let p = out.path("sweep.csv");
    write_sweep_csv(&s, &p)?;
    out.finish()
}

fn photons(config: &ExperimentConfig, plane: Plane) -> Result<()> {
    let numerics = config.numerics()?;
    let r = run_photons(
        &config.geometry,
        &numerics,
        &config.options(),
        plane,
        config.photons_n,
        config.seed,
    )?;
    let mut out = Output::new("photons", config)?;
    out.manifest.arguments.push(("plane".into(), plane.label().into()));
    let name = format!("Photons_{}", plane.label());
    let mut row = MetricsRow {
        scenario: name.clone(),
        ..MetricsRow::default()
    };
    row.flags.push(format!("n={}", r.events.n));
    row.flags.push(format!("seed={}", r.events.seed));
    if let Some(h) = &r.histogram {
        let p = out.path(&format!("histogram_{}.csv", plane.label()));
        write_histogram_csv(h, &p)?;
    }
    if let Some(v) = &r.visibility {
        row.v = Some(v.sampled);
        row.flags.push(format!("expected_V={}", whichway::io::format_float(v.expected)));
        row.flags.push(format!("standard_error={}", whichway::io::format_float(v.standard_error)));
        println!(
            "{name}: sampled V = {:.5}, expected {:.5}, standard error {:.2e}",
            v.sampled, v.expected, v.standard_error
        );
    }
    if let Some(v) = &r.field_visibility {
        row.flags.push(format!("field_V={}", whichway::io::format_float(v.v)));
    }
    for (c, k) in &r.events.roi_counts {
        println!("{name}: channel {c}: {k} photons");
        row.flags.push(format!("channel_{}_count={k}", c.to_string().replace('\'', "p")));
    }
    out.rows.push(row);
    out.finish()
}
