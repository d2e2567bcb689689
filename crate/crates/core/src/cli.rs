//! Run configuration files and the `polariton-gate` subcommands.
//!
//! A run file is one JSON object. The [`ExperimentConfig`] keys sit at the top
//! level next to optional run sections (`pulse_length_L`, `gamma_q`,
//! `initial_condition`, ...). Any other key is an error.
//!
//! Every command renders its artifacts in memory, writes them to `--out`
//! and then writes `manifest.json` listing each file with its SHA-256.
//! With `--check` nothing is written; the fresh output is compared against
//! the existing manifest instead.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::dispersion::EitMedium;
use crate::error::{Error, ErrorClass, Result};
use crate::gate::{self, GateReport, SweepAxis, SweepOptions};
use crate::output;
use crate::params::{self, ExperimentConfig};
use crate::scattering::{self, FdSettings, InitialCondition, PairCoupling, TwoParticleWave};
use crate::site_dynamics::{self, DriveProfile, Envelope, InitialState, IntegrationSpec};

pub const MANIFEST_NAME: &str = "manifest.json";

/// How long the dephasing acts on a snapshot taken at time t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingWindow {
    /// The whole elapsed time t.
    #[default]
    Always,
    /// At most the interaction time T = L / (2 v_gr).
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r_points: usize,
    pub xi_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSection {
    pub courant: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub drive: DriveProfile,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    /// dt |Omega0|; ignored when `dt` is given.
    #[serde(default)]
    pub step_phase: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub transient_window: Option<f64>,
    #[serde(default)]
    pub eta_ladder: Option<Vec<f64>>,
}

pub const DEFAULT_STEP_PHASE: f64 = 0.02;
pub const DEFAULT_ETA_LADDER: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Optional sections of a run file.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSections {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_length_L: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_q: Option<f64>,
    #[serde(default)]
    pub dephasing_window: DephasingWindow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

const SECTION_KEYS: [&str; 8] = [
    "pulse_length_L",
    "gamma_q",
    "dephasing_window",
    "initial_condition",
    "grid",
    "fd",
    "snapshot_times",
    "verify",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub sections: RunSections,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let Value::Object(mut all) = value else {
            return Err(Error::InvalidConfig(
                "run file must be a JSON object".into(),
            ));
        };
        let mut sections = Map::new();
        for key in SECTION_KEYS {
            if let Some(v) = all.remove(key) {
                sections.insert(key.to_string(), v);
            }
        }
        let experiment: ExperimentConfig = serde_json::from_value(Value::Object(all))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        experiment.validate()?;
        let sections: RunSections = serde_json::from_value(Value::Object(sections))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if let Some(ic) = &sections.initial_condition {
            ic.validate()?;
        }
        if let Some(g) = sections.gamma_q {
            if !(g >= 0.0) {
                return Err(Error::NegativeRate(g));
            }
        }
        Ok(Self {
            experiment,
            sections,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.experiment).expect("serializable");
        if let (Value::Object(m), Value::Object(s)) = (
            &mut v,
            serde_json::to_value(&self.sections).expect("serializable"),
        ) {
            m.extend(s);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Characteristics,
    Fd,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Recompute and compare with the manifest in --out instead of writing.
    #[arg(long)]
    pub check: bool,
    /// Reserved; every computation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Closed-form conditional phase and interaction time.
    Phase {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "gamma-q")]
        gamma_q: Option<f64>,
    },
    /// Evolve the two-particle wave function and write snapshots.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "characteristics")]
        solver: SolverKind,
        /// Comma-separated snapshot times (s).
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        #[arg(long = "gamma-q")]
        gamma_q: Option<f64>,
        #[arg(long)]
        courant: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "xi-points")]
        xi_points: Option<usize>,
        #[arg(long = "r-points")]
        r_points: Option<usize>,
    },
    /// Sweep one parameter and locate the pi crossing.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        axis: String,
        /// LO:HI
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long = "gamma-q")]
        gamma_q: Option<f64>,
    },
    /// Integrate the site equations and compare with the adiabatic solutions.
    VerifyAdiabatic {
        #[command(flatten)]
        common: CommonArgs,
        /// Drive profile JSON overriding the config's `verify.drive`.
        #[arg(long)]
        drive: Option<PathBuf>,
    },
    /// Verify the files in DIR against its manifest.
    Check {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "polariton-gate",
    version,
    about = "Dark-state polariton collisions and conditional phase gates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub out_dir: String,
    pub artifacts: Vec<Artifact>,
    pub wall_clock_seconds: f64,
    pub tool_version: String,
}

/// Rendered result of one command, not yet on disk.
#[derive(Debug)]
pub struct Outcome {
    pub command: String,
    pub config: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn resolved_config(cfg: &RunConfig, extra: Vec<(&str, Value)>) -> Result<Value> {
    let medium = EitMedium::from_config(&cfg.experiment)?;
    let mut derived = Map::new();
    derived.insert("density_n".into(), Value::from(cfg.experiment.density()));
    derived.insert(
        "medium".into(),
        serde_json::to_value(&medium).expect("serializable"),
    );
    if let Ok(d) = params::detunings(&cfg.experiment, 1e-3 * cfg.experiment.control_rabi_Omega0) {
        derived.insert(
            "detunings".into(),
            serde_json::to_value(&d).expect("serializable"),
        );
        derived.insert("on_resonance".into(), Value::from(d.on_resonance()));
    }
    for (k, v) in extra {
        derived.insert(k.into(), v);
    }
    let mut v = cfg.to_value();
    if let Value::Object(m) = &mut v {
        m.insert("derived".into(), Value::Object(derived));
    }
    Ok(output::round_json(v))
}

fn warn_off_resonance(cfg: &ExperimentConfig) {
    if let Ok(d) = params::detunings(cfg, 1e-3 * cfg.control_rabi_Omega0) {
        for a in d.advisories() {
            log::warn!("{a}");
        }
    }
}

pub fn cmd_phase(cfg: &RunConfig, gamma_q: Option<f64>) -> Result<Outcome> {
    warn_off_resonance(&cfg.experiment);
    let gamma_q = gamma_q.or(cfg.sections.gamma_q);
    let report = GateReport::from_config(&cfg.experiment, cfg.sections.pulse_length_L, gamma_q)?;
    let json = output::to_json_string(&report);
    Ok(Outcome {
        command: "phase".into(),
        config: resolved_config(cfg, vec![])?,
        files: vec![("report.json".into(), json.clone().into_bytes())],
        stdout: json,
    })
}

#[derive(Debug, Clone, Default)]
pub struct EvolveOptions {
    pub solver: Option<SolverKind>,
    pub snapshots: Option<Vec<f64>>,
    pub gamma_q: Option<f64>,
    pub courant: Option<f64>,
    pub epsilon: Option<f64>,
    pub xi_points: Option<usize>,
    pub r_points: Option<usize>,
}

/// Snapshot times: explicit list, else the config's, else five equidistant
/// times from 0 to the full crossing.
pub fn snapshot_times(
    cfg: &RunConfig,
    ic: &InitialCondition,
    v_gr: f64,
    explicit: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let times = match explicit.or(cfg.sections.snapshot_times.as_deref()) {
        Some(t) => t.to_vec(),
        None => {
            let end = ic.crossing_time(v_gr);
            (0..5).map(|i| end * i as f64 / 4.0).collect()
        }
    };
    if times.is_empty()
        || times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
        || times.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::InvalidConfig(
            "snapshot times must be non-negative and strictly increasing".into(),
        ));
    }
    Ok(times)
}

pub fn cmd_evolve(cfg: &RunConfig, opts: &EvolveOptions) -> Result<Outcome> {
    warn_off_resonance(&cfg.experiment);
    let ic = cfg
        .sections
        .initial_condition
        .clone()
        .ok_or(Error::MissingField("initial_condition"))?;
    let medium = EitMedium::from_config(&cfg.experiment)?;
    let coupling = PairCoupling::from_medium(&medium);
    let grid = cfg.sections.grid;
    let (grid_r, grid_xi) = ic.grids(
        opts.r_points.or(grid.map(|g| g.r_points)).unwrap_or(64),
        opts.xi_points.or(grid.map(|g| g.xi_points)).unwrap_or(2048),
    )?;
    let solver = opts.solver.unwrap_or(SolverKind::Characteristics);
    let times = snapshot_times(cfg, &ic, medium.v_gr, opts.snapshots.as_deref())?;
    let gamma_q = opts.gamma_q.or(cfg.sections.gamma_q);
    let mut report = GateReport::new(
        &cfg.experiment,
        &medium,
        cfg.sections.pulse_length_L,
        gamma_q,
    )?;

    let mut fd = FdSettings::with_default_epsilon(grid_xi.step, ic.envelope_width());
    let section = cfg.sections.fd.unwrap_or_default();
    if let Some(c) = opts.courant.or(section.courant) {
        fd.courant = c;
    }
    if let Some(e) = opts.epsilon.or(section.epsilon) {
        fd.epsilon = e;
    }

    let w0 = ic.sample(grid_r, grid_xi)?;
    let mut current = w0.clone();
    let mut snapshots: Vec<TwoParticleWave> = Vec::with_capacity(times.len());
    for &t in &times {
        let w = match solver {
            SolverKind::Characteristics => {
                scattering::evolve_characteristics_exact(&ic, grid_r, grid_xi, &coupling, t)?
            }
            SolverKind::Fd => {
                current = scattering::evolve_fd(&current, &coupling, t, &fd)?;
                current.clone()
            }
        };
        snapshots.push(w);
    }

    let last = snapshots.last().expect("at least one snapshot");
    match scattering::extract_phase(&w0, last, medium.v_gr, last.t) {
        Ok(m) => report = report.with_measurement(&m),
        Err(e @ (Error::NotTransmitted { .. } | Error::InsufficientOverlap { .. })) => {
            log::warn!("no phase measurement: {e}");
        }
        Err(e) => return Err(e),
    }

    let mut files = Vec::new();
    for (i, w) in snapshots.iter().enumerate() {
        let w = match gamma_q {
            Some(g) => {
                let elapsed = match cfg.sections.dephasing_window {
                    DephasingWindow::Always => w.t,
                    DephasingWindow::Interaction => w.t.min(report.interaction_time_T),
                };
                scattering::apply_dephasing(w, &medium, g, elapsed)?
            }
            None => w.clone(),
        };
        let mut buf = Vec::new();
        output::write_snapshot(&mut buf, &w).map_err(io_err(Path::new("<snapshot>")))?;
        files.push((format!("snapshot_{i:03}.csv"), buf));
    }
    let json = output::to_json_string(&report);
    files.push(("report.json".into(), json.clone().into_bytes()));

    let extra = vec![
        (
            "solver",
            serde_json::to_value(solver).expect("serializable"),
        ),
        ("snapshot_times", Value::from(times.clone())),
        (
            "grid_r",
            serde_json::to_value(grid_r).expect("serializable"),
        ),
        (
            "grid_xi",
            serde_json::to_value(grid_xi).expect("serializable"),
        ),
        ("fd", serde_json::to_value(fd).expect("serializable")),
        (
            "coupling",
            serde_json::to_value(coupling).expect("serializable"),
        ),
    ];
    Ok(Outcome {
        command: "evolve".into(),
        config: resolved_config(cfg, extra)?,
        files,
        stdout: json,
    })
}

/// Parses `LO:HI`.
pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidSweep(format!("range `{s}` is not LO:HI"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    samples: usize,
    gamma_q: Option<f64>,
) -> Result<Outcome> {
    let opts = SweepOptions {
        pulse_length: cfg.sections.pulse_length_L,
        gamma_q: gamma_q.or(cfg.sections.gamma_q),
    };
    let table = gate::sweep(&cfg.experiment, axis, lo, hi, samples, &opts)?;
    let mut buf = Vec::new();
    output::write_sweep(&mut buf, &table).map_err(io_err(Path::new("<sweep>")))?;
    let stdout = match &table.crossing {
        Some(c) => format!("delta_phi = pi at {axis} = {}\n", output::fmt_num(c.value)),
        None => format!(
            "no pi crossing for {axis} in [{}, {}]\n",
            output::fmt_num(lo),
            output::fmt_num(hi)
        ),
    };
    let extra = vec![
        ("axis", Value::from(axis.name())),
        ("range", Value::from(vec![lo, hi])),
        ("samples", Value::from(samples)),
    ];
    Ok(Outcome {
        command: "sweep".into(),
        config: resolved_config(cfg, extra)?,
        files: vec![("sweep.csv".into(), buf)],
        stdout,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub residuals: site_dynamics::ResidualReport,
    pub weak_probe_ok: bool,
    pub max_population_fraction: f64,
    pub energy_drift: f64,
    pub steps_dt: f64,
    pub eta_scaling: Option<site_dynamics::EtaScaling>,
    /// Exponent of the q residual in eta, from the ladder.
    pub eta_exponent: Option<f64>,
}

fn default_window(drive: &DriveProfile, rabi: f64) -> (f64, f64) {
    let gaussians: Vec<(f64, f64)> = [drive.plus, drive.minus]
        .iter()
        .filter_map(|e| match *e {
            Envelope::Gaussian { center, width, .. } => {
                Some((center - 8.0 * width, center + 8.0 * width))
            }
            _ => None,
        })
        .collect();
    if gaussians.is_empty() {
        (0.0, 200.0 / rabi)
    } else {
        (
            gaussians.iter().map(|g| g.0).fold(f64::INFINITY, f64::min),
            gaussians
                .iter()
                .map(|g| g.1)
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

pub fn cmd_verify_adiabatic(
    cfg: &RunConfig,
    drive_override: Option<DriveProfile>,
) -> Result<Outcome> {
    warn_off_resonance(&cfg.experiment);
    let section = cfg.sections.verify.clone();
    let drive = drive_override
        .or(section.as_ref().map(|s| s.drive))
        .ok_or(Error::MissingField("verify.drive"))?;
    let section = section.unwrap_or(VerifySection {
        drive,
        t_start: None,
        t_end: None,
        step_phase: None,
        dt: None,
        initial: InitialState::default(),
        record_every: None,
        transient_window: None,
        eta_ladder: None,
    });
    let rabi = cfg.experiment.control_rabi_Omega0.abs();
    let (w0, w1) = default_window(&drive, rabi);
    let t_start = section.t_start.unwrap_or(w0);
    let t_end = section.t_end.unwrap_or(w1);
    let step_phase = section.step_phase.unwrap_or(DEFAULT_STEP_PHASE);
    let dt = section.dt.unwrap_or(step_phase / rabi);
    let steps = ((t_end - t_start) / dt).ceil().max(1.0) as usize;
    let spec = IntegrationSpec {
        t_start,
        t_end,
        dt,
        initial: section.initial,
        record_every: section.record_every.unwrap_or((steps / 2000).max(1)),
    };
    let traj = site_dynamics::integrate_site(&cfg.experiment, &drive, &spec)?;
    let residuals = site_dynamics::adiabatic_residual(
        &traj,
        &drive,
        &cfg.experiment,
        section.transient_window,
    )?;
    let series = site_dynamics::residual_series(&traj, &drive, &cfg.experiment);

    let gaussian_amp = [drive.plus, drive.minus].iter().find_map(|e| match *e {
        Envelope::Gaussian { amplitude, .. } => Some(amplitude),
        _ => None,
    });
    let ladder = section
        .eta_ladder
        .clone()
        .or(gaussian_amp.map(|_| DEFAULT_ETA_LADDER.to_vec()));
    let eta_scaling = match ladder {
        Some(etas) => Some(site_dynamics::eta_scaling(
            &cfg.experiment,
            gaussian_amp.unwrap_or(Complex64::new(0.05, 0.0)),
            &etas,
            step_phase,
        )?),
        None => None,
    };
    let summary = VerifySummary {
        residuals,
        weak_probe_ok: traj.weak_probe_ok(),
        max_population_fraction: traj.max_population_fraction,
        energy_drift: traj.energy_drift,
        steps_dt: traj.dt,
        eta_exponent: eta_scaling.as_ref().map(|s| s.q_exponent),
        eta_scaling,
    };
    let mut csv = Vec::new();
    output::write_trajectory(&mut csv, &traj.samples, &series)
        .map_err(io_err(Path::new("<trajectory>")))?;
    let json = output::to_json_string(&summary);
    let extra = vec![
        ("drive", serde_json::to_value(drive).expect("serializable")),
        (
            "integration",
            serde_json::to_value(spec).expect("serializable"),
        ),
    ];
    Ok(Outcome {
        command: "verify-adiabatic".into(),
        config: resolved_config(cfg, extra)?,
        files: vec![
            ("trajectory.csv".into(), csv),
            ("summary.json".into(), json.clone().into_bytes()),
        ],
        stdout: json,
    })
}

/// Writes the outcome's files and then the manifest.
pub fn write_outcome(out_dir: &Path, outcome: &Outcome, seconds: f64) -> Result<RunManifest> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut artifacts = Vec::with_capacity(outcome.files.len());
    for (name, bytes) in &outcome.files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        artifacts.push(Artifact {
            path: name.clone(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        command: outcome.command.clone(),
        config: outcome.config.clone(),
        out_dir: out_dir.display().to_string(),
        artifacts,
        wall_clock_seconds: seconds,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = out_dir.join(MANIFEST_NAME);
    fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("serializable"),
    )
    .map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(out_dir: &Path) -> Result<RunManifest> {
    let path = out_dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

/// Compares the files on disk with the manifest hashes.
pub fn check_directory(out_dir: &Path) -> Result<RunManifest> {
    let manifest = read_manifest(out_dir)?;
    for a in &manifest.artifacts {
        let path = out_dir.join(&a.path);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(Error::ManifestMismatch(format!(
                "{} differs from the manifest",
                a.path
            )));
        }
    }
    Ok(manifest)
}

/// Compares a fresh outcome with the manifest already in `out_dir`.
pub fn check_outcome(out_dir: &Path, outcome: &Outcome) -> Result<RunManifest> {
    let manifest = read_manifest(out_dir)?;
    if manifest.command != outcome.command {
        return Err(Error::ManifestMismatch(format!(
            "manifest is for `{}`, rerun was `{}`",
            manifest.command, outcome.command
        )));
    }
    if manifest.artifacts.len() != outcome.files.len() {
        return Err(Error::ManifestMismatch("artifact count differs".into()));
    }
    for (a, (name, bytes)) in manifest.artifacts.iter().zip(&outcome.files) {
        if &a.path != name || a.sha256 != sha256_hex(bytes) {
            return Err(Error::ManifestMismatch(format!(
                "{name} differs from the manifest"
            )));
        }
    }
    Ok(manifest)
}

fn load_drive(path: &Path) -> Result<DriveProfile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Runs one parsed command. Returns the text for standard output.
pub fn run(command: &Command) -> Result<String> {
    let start = Instant::now();
    let (common, outcome) = match command {
        Command::Check { out } => {
            let m = check_directory(out)?;
            return Ok(format!(
                "ok: {} artifacts match {}\n",
                m.artifacts.len(),
                out.join(MANIFEST_NAME).display()
            ));
        }
        Command::Phase { common, gamma_q } => {
            let cfg = RunConfig::load(&common.config)?;
            (common, cmd_phase(&cfg, *gamma_q)?)
        }
        Command::Evolve {
            common,
            solver,
            snapshots,
            gamma_q,
            courant,
            epsilon,
            xi_points,
            r_points,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            let opts = EvolveOptions {
                solver: Some(*solver),
                snapshots: snapshots.clone(),
                gamma_q: *gamma_q,
                courant: *courant,
                epsilon: *epsilon,
                xi_points: *xi_points,
                r_points: *r_points,
            };
            (common, cmd_evolve(&cfg, &opts)?)
        }
        Command::Sweep {
            common,
            axis,
            range,
            samples,
            gamma_q,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            let axis: SweepAxis = axis.parse()?;
            let (lo, hi) = parse_range(range)?;
            (common, cmd_sweep(&cfg, axis, lo, hi, *samples, *gamma_q)?)
        }
        Command::VerifyAdiabatic { common, drive } => {
            let cfg = RunConfig::load(&common.config)?;
            let drive = drive.as_deref().map(load_drive).transpose()?;
            (common, cmd_verify_adiabatic(&cfg, drive)?)
        }
    };
    if common.check {
        let m = check_outcome(&common.out, &outcome)?;
        return Ok(format!(
            "ok: {} artifacts reproduce {}\n",
            m.artifacts.len(),
            common.out.join(MANIFEST_NAME).display()
        ));
    }
    write_outcome(&common.out, &outcome, start.elapsed().as_secs_f64())?;
    Ok(outcome.stdout)
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

/// Machine-readable error line for standard error.
pub fn error_json(e: &Error) -> String {
    let class = match e.class() {
        ErrorClass::Config => "config",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    };
    serde_json::json!({"error": e.kind(), "class": class, "message": e.to_string()}).to_string()
}

/// Entry point shared by the binary and the tests: parses `args`, runs the
/// command, prints its output and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(e.class())
        }
    }
}
