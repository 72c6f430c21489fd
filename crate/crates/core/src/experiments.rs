//! Experiment registry and CSV output.
//!
//! Every experiment maps an effective [`ExperimentConfig`] to a [`Table`].
//! Parameter points are evaluated in parallel and assembled in enumeration
//! order, so the output does not depend on the thread count.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::classifier::{
    decide_theta, pattern_scan, random_phi_pairs, random_theta_pairs, theta_pair_grid, zero_crossings, Engine,
    PatternScan, PatternSetup, PatternSpace, Quadrature, SimulationSetup,
};
use crate::collision::{
    simulate_with, CollisionMode, CollisionSchedule, NoiseParams, ReservoirSpec, SimulationOptions, StatisticsMode,
    TrajectoryRecord, MAX_RESERVOIRS,
};
use crate::config::{ExperimentConfig, Params};
use crate::error::{Error, Result};
use crate::linalg::Physicality;
use crate::master::{closed_form_steady_state, steady_sz};
use crate::qfi::{self, phi_grid, qfi_scan_decide, theta_grid, Parameter, QfiScan};
use crate::states::{pure_state, BlochParams};
use crate::trainer::{cost_surface, train, TrainConfig, TrainTrace};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    Fig2a,
    Fig2b,
    Fig2e,
    Fig2f,
    Fig2g,
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
    Fig4e,
    Fig4f,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 17] = [
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig2e,
        Self::Fig2f,
        Self::Fig2g,
        Self::Fig3,
        Self::Fig4a,
        Self::Fig4b,
        Self::Fig4c,
        Self::Fig4d,
        Self::Fig4e,
        Self::Fig4f,
        Self::Fig5,
        Self::Fig6,
        Self::Fig7,
        Self::Fig8,
        Self::Custom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2e => "fig2e",
            Self::Fig2f => "fig2f",
            Self::Fig2g => "fig2g",
            Self::Fig3 => "fig3",
            Self::Fig4a => "fig4a",
            Self::Fig4b => "fig4b",
            Self::Fig4c => "fig4c",
            Self::Fig4d => "fig4d",
            Self::Fig4e => "fig4e",
            Self::Fig4f => "fig4f",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
            Self::Custom => "custom",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::Fig2a => "probe homogenizing to an excited reservoir (theta = 0)",
            Self::Fig2b => "probe homogenizing to a ground reservoir (theta = pi)",
            Self::Fig2e => "equilibration under amplitude noise for several mean collision numbers",
            Self::Fig2f => "steady sz against the polar angle of a single reservoir",
            Self::Fig2g => "steady sy against the azimuth of a single reservoir",
            Self::Fig3 => "steady sz of two pole reservoirs against the coupling imbalance",
            Self::Fig4a => "theta-pair grid of steady sz and its decision boundary",
            Self::Fig4b => "theta-pair grid under noise for several mean collision numbers",
            Self::Fig4c => "random theta pairs labelled by simulation and closed form",
            Self::Fig4d => "steady Bloch vector against the coupling imbalance, theta = 2pi/3",
            Self::Fig4e => "steady Bloch vector against the coupling imbalance, theta = pi/3",
            Self::Fig4f => "random phi pairs labelled by simulation and closed form",
            Self::Fig5 => "theta QFI scans and the resulting labels",
            Self::Fig6 => "phi QFI scans",
            Self::Fig7 => "gradient-descent traces for three learning rates",
            Self::Fig8 => "cost surface over the couplings with a descent path",
            Self::Custom => "single trajectory with user-defined reservoirs",
        }
    }

    /// Registry defaults. Overrides are only accepted for these keys (and,
    /// for `custom`, the `reservoir.N.*` keys).
    pub fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::Fig2a => FIG2A,
            Self::Fig2b => FIG2B,
            Self::Fig2e => FIG2E,
            Self::Fig2f => FIG2F,
            Self::Fig2g => FIG2G,
            Self::Fig3 => FIG3,
            Self::Fig4a => FIG4A,
            Self::Fig4b => FIG4B,
            Self::Fig4c => FIG4C,
            Self::Fig4d => FIG4D,
            Self::Fig4e => FIG4E,
            Self::Fig4f => FIG4F,
            Self::Fig5 => FIG5,
            Self::Fig6 => FIG6,
            Self::Fig7 => FIG7,
            Self::Fig8 => FIG8,
            Self::Custom => CUSTOM,
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`; see `collisim list`")))
    }
}

type Defaults = &'static [(&'static str, &'static str)];

const FIG2A: Defaults = &[
    ("reservoir.1.theta", "0"),
    ("reservoir.1.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG2B: Defaults = &[
    ("reservoir.1.theta", "pi"),
    ("reservoir.1.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG2E: Defaults = &[
    ("reservoir.1.theta", "0"),
    ("reservoir.1.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "10000, 12000, 16000"),
    ("schedule.mode", "stochastic"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "2e-5"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG2F: Defaults = &[
    ("reservoir.1.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("grid.points", "37"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG2G: Defaults = &[
    ("sweep.theta", "pi/3, 2pi/3"),
    ("reservoir.1.coupling", "0.01"),
    ("grid.points", "37"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG3: Defaults = &[
    ("reservoir.1.theta", "0"),
    ("reservoir.1.phi", "0"),
    ("reservoir.2.theta", "pi"),
    ("reservoir.2.phi", "0"),
    ("coupling.total", "0.01"),
    ("reference.j1", "0.00737"),
    ("reference.j2", "0.00263"),
    ("grid.points", "21"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "2e-5"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4A: Defaults = &[
    ("engine", "simulate"),
    ("reservoir.1.phi", "0"),
    ("reservoir.2.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("grid.points", "19"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4B: Defaults = &[
    ("reservoir.1.phi", "0"),
    ("reservoir.2.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("grid.points", "19"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "10000, 12000, 18000"),
    ("schedule.mode", "stochastic"),
    ("schedule.total_time", "134952.76653171389"),
    ("noise.gamma_theta", "9.09e-6"),
    ("noise.gamma_phi", "7.41e-6"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4C: Defaults = &[
    ("engine", "simulate"),
    ("pattern.count", "32"),
    ("reservoir.1.phi", "0"),
    ("reservoir.2.phi", "0"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4D: Defaults = &[
    ("reservoir.1.theta", "2pi/3"),
    ("reservoir.1.phi", "pi/2"),
    ("reservoir.2.theta", "2pi/3"),
    ("reservoir.2.phi", "3pi/2"),
    ("coupling.total", "0.01"),
    ("grid.points", "21"),
    ("probe.theta", "0"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "3.25"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "112500"),
    ("noise.gamma_theta", "9.09e-6"),
    ("noise.gamma_phi", "7.41e-6"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4E: Defaults = &[
    ("reservoir.1.theta", "pi/3"),
    ("reservoir.1.phi", "pi/2"),
    ("reservoir.2.theta", "pi/3"),
    ("reservoir.2.phi", "3pi/2"),
    ("coupling.total", "0.01"),
    ("grid.points", "21"),
    ("probe.theta", "0"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "3.25"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "112500"),
    ("noise.gamma_theta", "9.09e-6"),
    ("noise.gamma_phi", "7.41e-6"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG4F: Defaults = &[
    ("engine", "simulate"),
    ("pattern.count", "32"),
    ("classifier.quadrature", "y"),
    ("reservoir.1.theta", "pi/3"),
    ("reservoir.2.theta", "pi/3"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("probe.theta", "0"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "3.25"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "112500"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

const FIG5: Defaults = &[
    ("model.r", "0.2"),
    ("schedule.tau", "3"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("reservoir.1.phi", "0"),
    ("reservoir.2.phi", "0"),
    ("grid.points", "181"),
    ("case2.theta2", "11pi/12"),
    ("case3.theta1", "pi/12"),
];

const FIG6: Defaults = &[
    ("model.r", "0.2"),
    ("schedule.tau", "3"),
    ("reservoir.1.coupling", "0.01"),
    ("reservoir.2.coupling", "0.01"),
    ("reservoir.1.theta", "pi/6"),
    ("reservoir.2.theta", "pi/6"),
    ("grid.points", "361"),
    ("case2.phi2", "0"),
    ("case3.phi1", "pi"),
];

const FIG7: Defaults = &[
    ("train.eta", "2.6e-5, 1.3e-5, 5.2e-5"),
    ("train.target", "0.42"),
    ("train.sz1", "0.94"),
    ("train.sz2", "-0.10"),
    ("train.j1", "0.002"),
    ("train.j2", "0.05"),
    ("train.max_iters", "50000"),
    ("train.cost_tol", "1e-12"),
];

const FIG8: Defaults = &[
    ("train.eta", "2.6e-5"),
    ("train.target", "0.42"),
    ("train.sz1", "0.94"),
    ("train.sz2", "-0.10"),
    ("train.j1", "0.002"),
    ("train.j2", "0.05"),
    ("train.max_iters", "50000"),
    ("train.cost_tol", "1e-12"),
    ("surface.points", "61"),
    ("surface.j_max", "0.06"),
    ("path.stride", "100"),
];

const CUSTOM: Defaults = &[
    ("collision.mode", "simultaneous"),
    ("probe.theta", "pi/2"),
    ("probe.phi", "0"),
    ("schedule.tau", "3"),
    ("schedule.tau0", "0"),
    ("schedule.k_mean", "18000"),
    ("schedule.mode", "regular"),
    ("schedule.total_time", "50000"),
    ("noise.gamma_theta", "0"),
    ("noise.gamma_phi", "0"),
    ("steady.window", "1000"),
    ("steady.tol", "0.01"),
];

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Decimal notation with 17 significant digits; `nan`, `inf`, `-inf`
/// for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.0000000000000000".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let prec = (16 - exp).max(0) as usize;
    format!("{v:.prec$}")
}

/// Output of one experiment: named columns, rows, and `key = value`
/// notes that go into the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<(String, String)>,
    /// Worst probe physicality seen by any simulated trajectory.
    pub physicality: Option<Physicality>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    fn note(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.notes.push((key.into(), value.to_string()));
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn track(&mut self, tr: &TrajectoryRecord) {
        let merged = self.physicality.unwrap_or_else(Physicality::ideal).merge(tr.physicality);
        self.physicality = Some(merged);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|c| match c {
                Cell::Float(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }

    pub fn note_value(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Hex SHA-256 of the canonical effective config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Full CSV text: metadata comments, header row, data rows.
pub fn render_csv(cfg: &ExperimentConfig, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# collisim {VERSION}");
    let _ = writeln!(out, "# experiment = {}", cfg.experiment);
    let _ = writeln!(out, "# seed = {}", cfg.seed);
    let _ = writeln!(out, "# config_hash = {}", config_hash(cfg));
    for (k, v) in &cfg.params.0 {
        let _ = writeln!(out, "# config.{k} = {v}");
    }
    for (k, v) in &table.notes {
        let _ = writeln!(out, "# note.{k} = {v}");
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `text` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    let p = &cfg.params;
    let seed = cfg.seed;
    match cfg.experiment {
        ExperimentId::Fig2a | ExperimentId::Fig2b | ExperimentId::Custom => trajectory(p, seed, cfg.experiment),
        ExperimentId::Fig2e => noisy_trajectories(p, seed),
        ExperimentId::Fig2f => theta_sweep(p, seed),
        ExperimentId::Fig2g => phi_sweep(p, seed),
        ExperimentId::Fig3 => pole_imbalance(p, seed),
        ExperimentId::Fig4a => theta_grid_map(p, seed),
        ExperimentId::Fig4b => noisy_theta_grid(p, seed),
        ExperimentId::Fig4c => theta_pattern(p, seed),
        ExperimentId::Fig4d | ExperimentId::Fig4e => coherent_imbalance(p, seed),
        ExperimentId::Fig4f => phi_pattern(p, seed),
        ExperimentId::Fig5 => theta_qfi(p),
        ExperimentId::Fig6 => phi_qfi(p),
        ExperimentId::Fig7 => training(p),
        ExperimentId::Fig8 => surface(p),
    }
}

/// Decorrelated per-point seed.
fn point_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn schedule(p: &Params, k_mean: f64, seed: u64) -> Result<CollisionSchedule> {
    let tau = p.f64("schedule.tau")?;
    match p.parse::<StatisticsMode>("schedule.mode")? {
        StatisticsMode::Regular => {
            if !(k_mean >= 1.0) {
                return Err(Error::Config(format!("schedule.k_mean must be >= 1, got {k_mean}")));
            }
            CollisionSchedule::regular(tau, p.f64("schedule.tau0")?, k_mean.round() as usize, seed)
        }
        mode => CollisionSchedule::from_budget(k_mean, tau, p.f64("schedule.total_time")?, mode, seed),
    }
}

fn setup(p: &Params, k_mean: f64, seed: u64) -> Result<SimulationSetup> {
    let mode = if p.contains("collision.mode") { p.parse("collision.mode")? } else { CollisionMode::default() };
    Ok(SimulationSetup {
        schedule: schedule(p, k_mean, seed)?,
        noise: NoiseParams::new(p.f64("noise.gamma_theta")?, p.f64("noise.gamma_phi")?)?,
        probe: BlochParams::new(p.f64("probe.theta")?, p.f64("probe.phi")?)?,
        options: SimulationOptions { window: p.usize("steady.window")?, tol: p.f64("steady.tol")?, mode },
    })
}

fn single_setup(p: &Params, seed: u64) -> Result<SimulationSetup> {
    setup(p, p.f64("schedule.k_mean")?, seed)
}

fn run_sim(specs: &[ReservoirSpec], sim: &SimulationSetup) -> Result<TrajectoryRecord> {
    simulate_with(&pure_state(sim.probe), specs, &sim.schedule, sim.noise, &sim.options)
}

/// Closed-form Bloch vector, all `NaN` outside the validity domain.
fn closed_form_bloch(specs: &[ReservoirSpec], r: f64, tau: f64) -> Result<[f64; 3]> {
    match closed_form_steady_state(specs, r, tau) {
        Ok(ss) => Ok(ss.bloch),
        Err(Error::OutsideValidity(_)) => Ok([f64::NAN; 3]),
        Err(e) => Err(e),
    }
}

fn reservoir(p: &Params, i: usize) -> Result<ReservoirSpec> {
    ReservoirSpec::new(
        p.f64(&format!("reservoir.{i}.theta"))?,
        p.f64(&format!("reservoir.{i}.phi"))?,
        p.f64(&format!("reservoir.{i}.coupling"))?,
    )
}

/// Reservoirs `1..=N` of a custom config; indices must be contiguous.
fn custom_reservoirs(p: &Params) -> Result<Vec<ReservoirSpec>> {
    let mut specs = Vec::new();
    for i in 1..=MAX_RESERVOIRS {
        let key = |f: &str| format!("reservoir.{i}.{f}");
        let present = ["theta", "phi", "coupling"].iter().any(|f| p.contains(&key(f)));
        if !present {
            if (i + 1..=MAX_RESERVOIRS).any(|k| p.0.keys().any(|x| x.starts_with(&format!("reservoir.{k}.")))) {
                return Err(Error::Config(format!(
                    "reservoir {i} is missing; indices must start at 1 and be contiguous"
                )));
            }
            break;
        }
        let phi = if p.contains(&key("phi")) { p.f64(&key("phi"))? } else { 0.0 };
        specs.push(ReservoirSpec::new(p.f64(&key("theta"))?, phi, p.f64(&key("coupling"))?)?);
    }
    if specs.is_empty() {
        return Err(Error::Config(
            "custom run needs at least one reservoir (reservoir.1.theta, reservoir.1.coupling)".into(),
        ));
    }
    Ok(specs)
}

fn trajectory(p: &Params, seed: u64, id: ExperimentId) -> Result<Table> {
    let specs = if id == ExperimentId::Custom { custom_reservoirs(p)? } else { vec![reservoir(p, 1)?] };
    let sim = single_setup(p, seed)?;
    let tr = run_sim(&specs, &sim)?;
    let mut t = Table::new(&["slot", "collided", "sx", "sy", "sz"]);
    t.track(&tr);
    for (k, (b, &hit)) in tr.bloch.iter().zip(&tr.collided).enumerate() {
        t.push(vec![(k + 1).into(), hit.into(), b[0].into(), b[1].into(), b[2].into()]);
    }
    let cf = closed_form_bloch(&specs, sim.schedule.rate(), sim.schedule.tau)?;
    t.note("steady_sx", format_float(tr.steady[0]));
    t.note("steady_sy", format_float(tr.steady[1]));
    t.note("steady_sz", format_float(tr.steady[2]));
    t.note("closed_form_sz", format_float(cf[2]));
    t.note("collisions", tr.collisions());
    t.note("converged", tr.converged);
    Ok(t)
}

fn noisy_trajectories(p: &Params, seed: u64) -> Result<Table> {
    let specs = vec![reservoir(p, 1)?];
    let ks = p.list("schedule.k_mean")?;
    let runs = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let sim = setup(p, k, point_seed(seed, i))?;
            Ok((k, sim.schedule.p, run_sim(&specs, &sim)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["k_mean", "p", "slot", "collided", "sz"]);
    for (k, prob, tr) in &runs {
        t.track(tr);
        t.note(format!("steady_sz.{k}"), format_float(tr.steady[2]));
        t.note(format!("converged.{k}"), tr.converged);
        for (n, (b, &hit)) in tr.bloch.iter().zip(&tr.collided).enumerate() {
            t.push(vec![(*k).into(), (*prob).into(), (n + 1).into(), hit.into(), b[2].into()]);
        }
    }
    Ok(t)
}

fn theta_sweep(p: &Params, seed: u64) -> Result<Table> {
    let sim = single_setup(p, seed)?;
    let (phi, j) = (p.f64("reservoir.1.phi")?, p.f64("reservoir.1.coupling")?);
    let thetas = theta_grid(p.usize("grid.points")?);
    let out = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &th)| {
            let specs = [ReservoirSpec::new(th, phi, j)?];
            let mut s = sim;
            s.schedule.seed = point_seed(seed, i);
            Ok((run_sim(&specs, &s)?, steady_sz(&specs)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["theta", "sx", "sy", "sz", "sz_closed_form", "converged"]);
    for (&th, (tr, cf)) in thetas.iter().zip(&out) {
        t.track(tr);
        let b = tr.steady;
        t.push(vec![th.into(), b[0].into(), b[1].into(), b[2].into(), (*cf).into(), tr.converged.into()]);
    }
    Ok(t)
}

fn phi_sweep(p: &Params, seed: u64) -> Result<Table> {
    let sim = single_setup(p, seed)?;
    let j = p.f64("reservoir.1.coupling")?;
    let phis = phi_grid(p.usize("grid.points")?);
    let points: Vec<(f64, f64)> =
        p.list("sweep.theta")?.into_iter().flat_map(|th| phis.iter().map(move |&ph| (th, ph))).collect();
    let (r, tau) = (sim.schedule.rate(), sim.schedule.tau);
    let out = points
        .par_iter()
        .enumerate()
        .map(|(i, &(th, ph))| {
            let specs = [ReservoirSpec::new(th, ph, j)?];
            let mut s = sim;
            s.schedule.seed = point_seed(seed, i);
            Ok((run_sim(&specs, &s)?, closed_form_bloch(&specs, r, tau)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["theta", "phi", "sx", "sy", "sz", "sy_closed_form", "converged"]);
    for (&(th, ph), (tr, cf)) in points.iter().zip(&out) {
        t.track(tr);
        let b = tr.steady;
        t.push(vec![th.into(), ph.into(), b[0].into(), b[1].into(), b[2].into(), cf[1].into(), tr.converged.into()]);
    }
    Ok(t)
}

/// `J₁ = J/2 + δJ`, `J₂ = J/2 − δJ` for `δJ` on `n` points of `[−J/2, J/2]`.
fn imbalance_grid(total: f64, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n < 2 {
        return Err(Error::Config("grid.points must be >= 2".into()));
    }
    Ok((0..n)
        .map(|k| {
            let dj = -total / 2.0 + total * k as f64 / (n - 1) as f64;
            (dj, (total / 2.0 + dj).max(0.0), (total / 2.0 - dj).max(0.0))
        })
        .collect())
}

fn pair_specs(p: &Params, j1: f64, j2: f64) -> Result<Vec<ReservoirSpec>> {
    Ok(vec![
        ReservoirSpec::new(p.f64("reservoir.1.theta")?, p.f64("reservoir.1.phi")?, j1)?,
        ReservoirSpec::new(p.f64("reservoir.2.theta")?, p.f64("reservoir.2.phi")?, j2)?,
    ])
}

/// Closed-form `⟨σ_z⟩` of two pole reservoirs for candidate readings of
/// the misprinted couplings behind the `−0.492` point.
pub const NEGATIVE_POINT_CANDIDATES: [(f64, f64); 2] = [(0.0036, 0.0063), (0.00369, 0.00631)];

fn pole_imbalance(p: &Params, seed: u64) -> Result<Table> {
    let sim = single_setup(p, seed)?;
    let grid = imbalance_grid(p.f64("coupling.total")?, p.usize("grid.points")?)?;
    let run_point = |j1: f64, j2: f64, s: &SimulationSetup| -> Result<(TrajectoryRecord, f64)> {
        let specs = pair_specs(p, j1, j2)?;
        Ok((run_sim(&specs, s)?, steady_sz(&specs)?))
    };
    let out = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(_, j1, j2))| {
            let mut s = sim;
            s.schedule.seed = point_seed(seed, i);
            run_point(j1, j2, &s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["delta_j", "j1", "j2", "sz", "sz_closed_form", "converged"]);
    for (&(dj, j1, j2), (tr, cf)) in grid.iter().zip(&out) {
        t.track(tr);
        t.push(vec![dj.into(), j1.into(), j2.into(), tr.steady[2].into(), (*cf).into(), tr.converged.into()]);
    }
    let (rj1, rj2) = (p.f64("reference.j1")?, p.f64("reference.j2")?);
    let (tr, cf) = run_point(rj1, rj2, &sim)?;
    t.track(&tr);
    t.note("reference.sz_closed_form", format_float(cf));
    t.note("reference.sz", format_float(tr.steady[2]));
    t.note("reference.converged", tr.converged);
    for (k, &(a, b)) in NEGATIVE_POINT_CANDIDATES.iter().enumerate() {
        let z = steady_sz(&pair_specs(p, a, b)?)?;
        t.note(
            format!("residual.{}", k + 1),
            format!("J1={a} J2={b} sz_closed_form={} (paper-inconsistent input, paper -0.492)", format_float(z)),
        );
    }
    Ok(t)
}

fn engine(p: &Params, sim: SimulationSetup) -> Result<Engine> {
    match p.str("engine")? {
        "simulate" => Ok(Engine::Simulate(sim)),
        "closed_form" => Ok(Engine::ClosedForm),
        other => Err(Error::Config(format!("engine must be `simulate` or `closed_form`, got `{other}`"))),
    }
}

fn theta_pattern_setup(p: &Params, points: Vec<(f64, f64)>, sim: &SimulationSetup) -> Result<PatternSetup> {
    Ok(PatternSetup {
        space: PatternSpace::Theta,
        points,
        couplings: (p.f64("reservoir.1.coupling")?, p.f64("reservoir.2.coupling")?),
        fixed: (p.f64("reservoir.1.phi")?, p.f64("reservoir.2.phi")?),
        r: sim.schedule.rate(),
        tau: sim.schedule.tau,
        quadrature: Quadrature::Y,
    })
}

/// Largest distance of the grid's zero crossings from `θ₁ + θ₂ = π`,
/// measured along the second angle.
pub fn boundary_offset(axis: &[f64], sz: &[f64]) -> f64 {
    zero_crossings(axis, sz).iter().map(|&(a, b)| (b - (PI - a)).abs()).fold(0.0, f64::max)
}

fn theta_grid_map(p: &Params, seed: u64) -> Result<Table> {
    let sim = single_setup(p, seed)?;
    let n = p.usize("grid.points")?;
    let setup = theta_pattern_setup(p, theta_pair_grid(n), &sim)?;
    let scan = pattern_scan(&setup, &engine(p, sim)?)?;
    let mut t = Table::new(&[
        "theta1",
        "theta2",
        "theta_sum",
        "sz",
        "sz_closed_form",
        "label",
        "label_closed_form",
        "converged",
    ]);
    track_scan(&mut t, &scan);
    for row in &scan.rows {
        let cf = steady_sz(&setup.specs((row.a, row.b))?)?;
        t.push(vec![
            row.a.into(),
            row.b.into(),
            (row.a + row.b).into(),
            row.bloch[2].into(),
            cf.into(),
            row.decision.label.as_str().into(),
            row.reference.as_str().into(),
            row.converged.unwrap_or(true).into(),
        ]);
    }
    let sz: Vec<f64> = scan.rows.iter().map(|r| r.bloch[2]).collect();
    t.note("boundary_offset", format_float(boundary_offset(&theta_grid(n), &sz)));
    t.note("grid_step", format_float(PI / (n.max(2) - 1) as f64));
    note_agreement(&mut t, &scan);
    Ok(t)
}

fn noisy_theta_grid(p: &Params, seed: u64) -> Result<Table> {
    let n = p.usize("grid.points")?;
    let pairs = theta_pair_grid(n);
    let couplings = (p.f64("reservoir.1.coupling")?, p.f64("reservoir.2.coupling")?);
    let fixed = (p.f64("reservoir.1.phi")?, p.f64("reservoir.2.phi")?);
    let ks = p.list("schedule.k_mean")?;
    let mut points = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        let sim = setup(p, k, point_seed(seed, ki))?;
        points.extend(pairs.iter().map(|&pt| (k, pt, sim)));
    }
    let out = points
        .par_iter()
        .enumerate()
        .map(|(i, (_, (a, b), sim))| {
            let specs = [ReservoirSpec::new(*a, fixed.0, couplings.0)?, ReservoirSpec::new(*b, fixed.1, couplings.1)?];
            let mut s = *sim;
            s.schedule.seed = point_seed(seed, i);
            run_sim(&specs, &s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["k_mean", "p", "theta1", "theta2", "theta_sum", "sz", "label", "converged"]);
    for ((k, (a, b), sim), tr) in points.iter().zip(&out) {
        t.track(tr);
        t.push(vec![
            (*k).into(),
            sim.schedule.p.into(),
            (*a).into(),
            (*b).into(),
            (a + b).into(),
            tr.steady[2].into(),
            decide_theta(tr.steady[2]).label.as_str().into(),
            tr.converged.into(),
        ]);
    }
    Ok(t)
}

fn track_scan(t: &mut Table, scan: &PatternScan) {
    for p in scan.rows.iter().filter_map(|r| r.physicality) {
        t.physicality = Some(t.physicality.unwrap_or_else(Physicality::ideal).merge(p));
    }
}

fn note_agreement(t: &mut Table, scan: &PatternScan) {
    let (hits, total) = scan.agreement_beyond(PATTERN_MARGIN);
    t.note("agreement", format_float(scan.agreement()));
    t.note("agreement_beyond_margin", format!("{hits}/{total}"));
}

/// Boundary distance beyond which simulated and closed-form labels must agree.
pub const PATTERN_MARGIN: f64 = 0.05;

/// Pattern setup for the random θ pairs of an effective config.
pub fn theta_pattern_for(p: &Params, seed: u64) -> Result<(PatternSetup, SimulationSetup)> {
    let sim = single_setup(p, seed)?;
    let pts = random_theta_pairs(p.usize("pattern.count")?, seed);
    Ok((theta_pattern_setup(p, pts, &sim)?, sim))
}

/// Pattern setup for the random φ pairs of an effective config.
pub fn phi_pattern_for(p: &Params, seed: u64) -> Result<(PatternSetup, SimulationSetup)> {
    let sim = single_setup(p, seed)?;
    let setup = PatternSetup {
        space: PatternSpace::Phi,
        points: random_phi_pairs(p.usize("pattern.count")?, seed),
        couplings: (p.f64("reservoir.1.coupling")?, p.f64("reservoir.2.coupling")?),
        fixed: (p.f64("reservoir.1.theta")?, p.f64("reservoir.2.theta")?),
        r: sim.schedule.rate(),
        tau: sim.schedule.tau,
        quadrature: p.parse("classifier.quadrature")?,
    };
    Ok((setup, sim))
}

fn theta_pattern(p: &Params, seed: u64) -> Result<Table> {
    let (setup, sim) = theta_pattern_for(p, seed)?;
    let scan = pattern_scan(&setup, &engine(p, sim)?)?;
    let mut t = Table::new(&[
        "theta1",
        "theta2",
        "sz",
        "sz_closed_form",
        "label",
        "label_closed_form",
        "boundary_distance",
        "converged",
    ]);
    track_scan(&mut t, &scan);
    for row in &scan.rows {
        let cf = steady_sz(&setup.specs((row.a, row.b))?)?;
        t.push(vec![
            row.a.into(),
            row.b.into(),
            row.bloch[2].into(),
            cf.into(),
            row.decision.label.as_str().into(),
            row.reference.as_str().into(),
            row.boundary_distance.into(),
            row.converged.unwrap_or(true).into(),
        ]);
    }
    note_agreement(&mut t, &scan);
    Ok(t)
}

fn phi_pattern(p: &Params, seed: u64) -> Result<Table> {
    let (setup, sim) = phi_pattern_for(p, seed)?;
    let scan = pattern_scan(&setup, &engine(p, sim)?)?;
    let mut t = Table::new(&[
        "phi1",
        "phi2",
        "sx",
        "sy",
        "sz",
        "sy_closed_form",
        "sz_closed_form",
        "label",
        "label_closed_form",
        "boundary_distance",
        "converged",
    ]);
    track_scan(&mut t, &scan);
    for row in &scan.rows {
        let cf = closed_form_bloch(&setup.specs((row.a, row.b))?, setup.r, setup.tau)?;
        let b = row.bloch;
        t.push(vec![
            row.a.into(),
            row.b.into(),
            b[0].into(),
            b[1].into(),
            b[2].into(),
            cf[1].into(),
            cf[2].into(),
            row.decision.label.as_str().into(),
            row.reference.as_str().into(),
            row.boundary_distance.into(),
            row.converged.unwrap_or(true).into(),
        ]);
    }
    note_agreement(&mut t, &scan);
    Ok(t)
}

fn coherent_imbalance(p: &Params, seed: u64) -> Result<Table> {
    let sim = single_setup(p, seed)?;
    let grid = imbalance_grid(p.f64("coupling.total")?, p.usize("grid.points")?)?;
    let (r, tau) = (sim.schedule.rate(), sim.schedule.tau);
    let out = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(_, j1, j2))| {
            let specs = pair_specs(p, j1, j2)?;
            let mut s = sim;
            s.schedule.seed = point_seed(seed, i);
            Ok((run_sim(&specs, &s)?, closed_form_bloch(&specs, r, tau)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "delta_j",
        "j1",
        "j2",
        "sx",
        "sy",
        "sz",
        "sx_closed_form",
        "sy_closed_form",
        "sz_closed_form",
        "converged",
    ]);
    for (&(dj, j1, j2), (tr, cf)) in grid.iter().zip(&out) {
        t.track(tr);
        let b = tr.steady;
        t.push(vec![
            dj.into(),
            j1.into(),
            j2.into(),
            b[0].into(),
            b[1].into(),
            b[2].into(),
            cf[0].into(),
            cf[1].into(),
            cf[2].into(),
            tr.converged.into(),
        ]);
    }
    Ok(t)
}

/// The three θ scans: `(θ₁, θ₂) = (δ, π − δ)`, `(δ, θ₂*)`, `(θ₁*, δ)`.
pub fn theta_qfi_scans(p: &Params) -> Result<Vec<QfiScan>> {
    let (r, tau) = (p.f64("model.r")?, p.f64("schedule.tau")?);
    let (j1, j2) = (p.f64("reservoir.1.coupling")?, p.f64("reservoir.2.coupling")?);
    let (f1, f2) = (p.f64("reservoir.1.phi")?, p.f64("reservoir.2.phi")?);
    let (t2, t1) = (p.f64("case2.theta2")?, p.f64("case3.theta1")?);
    let pair = move |a: f64, b: f64| Ok(vec![ReservoirSpec::new(a, f1, j1)?, ReservoirSpec::new(b, f2, j2)?]);
    let grid = theta_grid(p.usize("grid.points")?);
    Ok(vec![
        qfi_scan_decide(|d| pair(d, PI - d), &grid, Parameter::Theta, r, tau)?,
        qfi_scan_decide(|d| pair(d, t2), &grid, Parameter::Theta, r, tau)?,
        qfi_scan_decide(|d| pair(t1, d), &grid, Parameter::Theta, r, tau)?,
    ])
}

fn theta_qfi(p: &Params) -> Result<Table> {
    let scans = theta_qfi_scans(p)?;
    let (t2, t1) = (p.f64("case2.theta2")?, p.f64("case3.theta1")?);
    let mut t = Table::new(&["case", "delta_theta", "theta1", "theta2", "qfi"]);
    for (c, scan) in scans.iter().enumerate() {
        for (&d, q) in scan.trial.iter().zip(&scan.qfi) {
            let (a, b) = match c {
                0 => (d, PI - d),
                1 => (d, t2),
                _ => (t1, d),
            };
            t.push(vec![(c + 1).into(), d.into(), a.into(), b.into(), q.unwrap_or(f64::NAN).into()]);
        }
        t.note(format!("case{}.argmax", c + 1), format_float(scan.argmax));
        t.note(format!("case{}.label", c + 1), scan.label);
    }
    let (single_closed, single_general, xi) = qfi_discrepancy(p)?;
    t.note("xi", format_float(xi));
    t.note("single_reservoir_qfi_theta.published", format_float(single_closed));
    t.note("single_reservoir_qfi_theta.general", format_float(single_general));
    Ok(t)
}

/// Single reservoir at `θ = π/2`: the published closed form `1 + 3ξ²`
/// against the general evaluator, which gives `1 + 4ξ²`. Returns
/// `(published, general, ξ)` with `ξ = τrJ/2`.
pub fn qfi_discrepancy(p: &Params) -> Result<(f64, f64, f64)> {
    let (r, tau, j) = (p.f64("model.r")?, p.f64("schedule.tau")?, p.f64("reservoir.1.coupling")?);
    let xi = tau * r * j / 2.0;
    let published = qfi::qfi_theta_analytic_single(FRAC_PI_2, xi)?.value;
    let specs = [ReservoirSpec::new(FRAC_PI_2, 0.0, j)?];
    let rho = closed_form_steady_state(&specs, r, tau)?.rho;
    let general = qfi::qfi(&rho, &qfi::dtheta_rho(&specs, r, tau)?)?.value;
    Ok((published, general, xi))
}

/// The three φ scans: `(φ₁, φ₂) = (δ, 2π − δ)`, `(δ, φ₂*)`, `(φ₁*, δ)`.
pub fn phi_qfi_scans(p: &Params) -> Result<Vec<QfiScan>> {
    let (r, tau) = (p.f64("model.r")?, p.f64("schedule.tau")?);
    let (j1, j2) = (p.f64("reservoir.1.coupling")?, p.f64("reservoir.2.coupling")?);
    let (t1, t2) = (p.f64("reservoir.1.theta")?, p.f64("reservoir.2.theta")?);
    let (f2, f1) = (p.f64("case2.phi2")?, p.f64("case3.phi1")?);
    let pair = move |a: f64, b: f64| Ok(vec![ReservoirSpec::new(t1, a, j1)?, ReservoirSpec::new(t2, b, j2)?]);
    let grid = phi_grid(p.usize("grid.points")?);
    Ok(vec![
        qfi_scan_decide(|d| pair(d, std::f64::consts::TAU - d), &grid, Parameter::Phi, r, tau)?,
        qfi_scan_decide(|d| pair(d, f2), &grid, Parameter::Phi, r, tau)?,
        qfi_scan_decide(|d| pair(f1, d), &grid, Parameter::Phi, r, tau)?,
    ])
}

fn phi_qfi(p: &Params) -> Result<Table> {
    let scans = phi_qfi_scans(p)?;
    let (f2, f1) = (p.f64("case2.phi2")?, p.f64("case3.phi1")?);
    let mut t = Table::new(&["case", "delta_phi", "phi1", "phi2", "qfi"]);
    for (c, scan) in scans.iter().enumerate() {
        for (&d, q) in scan.trial.iter().zip(&scan.qfi) {
            let (a, b) = match c {
                0 => (d, (std::f64::consts::TAU - d).rem_euclid(std::f64::consts::TAU)),
                1 => (d, f2),
                _ => (f1, d),
            };
            t.push(vec![(c + 1).into(), d.into(), a.into(), b.into(), q.unwrap_or(f64::NAN).into()]);
        }
        t.note(format!("case{}.argmax", c + 1), format_float(scan.argmax));
    }
    Ok(t)
}

fn train_config(p: &Params, eta: f64) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::new(
        eta,
        p.f64("train.target")?,
        (p.f64("train.sz1")?, p.f64("train.sz2")?),
        (p.f64("train.j1")?, p.f64("train.j2")?),
    );
    cfg.max_iters = p.usize("train.max_iters")?;
    cfg.cost_tol = p.f64("train.cost_tol")?;
    Ok(cfg)
}

/// One trace per learning rate in `train.eta`.
pub fn training_traces(p: &Params) -> Result<Vec<TrainTrace>> {
    p.list("train.eta")?.par_iter().map(|&eta| train(&train_config(p, eta)?)).collect()
}

fn training(p: &Params) -> Result<Table> {
    let traces = training_traces(p)?;
    let mut t = Table::new(&["eta", "iter", "J1", "J2", "A", "cost"]);
    for (k, tr) in traces.iter().enumerate() {
        let origin = if k == 0 {
            "paper"
        } else if k == 1 {
            "half of the paper rate"
        } else {
            "double the paper rate"
        };
        t.note(format!("eta.{}", k + 1), format!("{} ({origin})", format_float(tr.eta)));
        t.note(format!("converged.{}", k + 1), tr.converged);
        t.note(format!("iterations.{}", k + 1), tr.rows.len() - 1);
        for row in &tr.rows {
            t.push(vec![
                tr.eta.into(),
                row.iter.into(),
                row.j1.into(),
                row.j2.into(),
                row.actual.into(),
                row.cost.into(),
            ]);
        }
    }
    Ok(t)
}

fn surface(p: &Params) -> Result<Table> {
    let n = p.usize("surface.points")?;
    let jmax = p.f64("surface.j_max")?;
    if n < 2 || !(jmax > 0.0) {
        return Err(Error::Config("surface.points must be >= 2 and surface.j_max > 0".into()));
    }
    let axis: Vec<f64> = (0..n).map(|k| jmax * k as f64 / (n - 1) as f64).collect();
    let sz = (p.f64("train.sz1")?, p.f64("train.sz2")?);
    let target = p.f64("train.target")?;
    let grid = cost_surface(&axis, &axis, sz, target);
    let mut t = Table::new(&["kind", "J1", "J2", "cost"]);
    for (i, row) in grid.iter().enumerate() {
        for (k, &c) in row.iter().enumerate() {
            t.push(vec!["surface".into(), axis[i].into(), axis[k].into(), c.into()]);
        }
    }
    let eta = p.f64("train.eta")?;
    let trace = train(&train_config(p, eta)?)?;
    let stride = p.usize("path.stride")?.max(1);
    let last = trace.rows.len() - 1;
    for row in trace.rows.iter().filter(|r| r.iter % stride == 0 || r.iter == last) {
        t.push(vec!["path".into(), row.j1.into(), row.j2.into(), row.cost.into()]);
    }
    t.note("path.converged", trace.converged);
    Ok(t)
}
