//! Experiment configuration: a TOML file with one section per subsystem,
//! merged over built-in defaults, with CLI flags taking precedence.
//!
//! Angles are degrees and displacements are millimeters at this boundary
//! (key names carry unit suffixes); everything is converted to radians/SI
//! on the way in.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::protocol::TargetBell;
use crate::source::SourceConfig;
use crate::station::StationConfig;

/// The experiments the runner knows how to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SweepPumpPhase,
    SweepCrystal,
    Compensate,
    Tomography,
    Bbm92Run,
    Table1,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SweepPumpPhase => "sweep-pump-phase",
            ExperimentKind::SweepCrystal => "sweep-crystal",
            ExperimentKind::Compensate => "compensate",
            ExperimentKind::Tomography => "tomography",
            ExperimentKind::Bbm92Run => "bbm92-run",
            ExperimentKind::Table1 => "table1",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sweep-pump-phase" => Ok(ExperimentKind::SweepPumpPhase),
            "sweep-crystal" => Ok(ExperimentKind::SweepCrystal),
            "compensate" => Ok(ExperimentKind::Compensate),
            "tomography" => Ok(ExperimentKind::Tomography),
            "bbm92-run" => Ok(ExperimentKind::Bbm92Run),
            "table1" => Ok(ExperimentKind::Table1),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment `{other}` (expected sweep-pump-phase, sweep-crystal, \
                 compensate, tomography, bbm92-run or table1)"
            ))),
        }
    }
}

/// Session-level settings (everything except the source and stations).
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSettings {
    pub coincidence_window_s: f64,
    pub qber_sample_fraction: f64,
    pub qber_abort_threshold: f64,
    pub target: TargetBell,
    pub sifted_cap: Option<usize>,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            coincidence_window_s: 1e-6,
            qber_sample_fraction: 0.1,
            qber_abort_threshold: crate::metrics::QBER_SECURITY_THRESHOLD,
            target: TargetBell::PhiPlus,
            sifted_cap: None,
        }
    }
}

/// Sweep grid; units are degrees for the pump sweep and millimeters for the
/// crystal sweep. `None` fields fall back to per-experiment defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepSettings {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    pub sifted_pairs_per_point: usize,
}

/// Feedback-compensation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensateSettings {
    pub coarse_step_deg: f64,
    pub sifted_pairs_per_probe: usize,
    pub rotator_step_arcsec: f64,
}

impl Default for CompensateSettings {
    fn default() -> Self {
        Self {
            coarse_step_deg: 3.0,
            sifted_pairs_per_probe: 10_000,
            rotator_step_arcsec: 25.0,
        }
    }
}

/// Tomography-experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographySettings {
    pub shots_per_setting: u64,
    /// Reconstruct from an existing counts CSV instead of synthesizing.
    pub counts_path: Option<PathBuf>,
    /// "auto" targets the source's ideal pure state.
    pub target: TomographyTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomographyTarget {
    Auto,
    PhiPlus,
    PhiMinus,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            shots_per_setting: 100_000,
            counts_path: None,
            target: TomographyTarget::Auto,
        }
    }
}

/// State-table settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSettings {
    pub sifted_pairs_per_row: usize,
    pub shots_per_setting: u64,
}

impl Default for TableSettings {
    fn default() -> Self {
        Self {
            sifted_pairs_per_row: 200_000,
            shots_per_setting: 100_000,
        }
    }
}

/// A fully resolved experiment invocation.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub compensation: bool,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub source: SourceConfig,
    pub station_a: StationConfig,
    pub station_b: StationConfig,
    pub session: SessionSettings,
    pub sweep: SweepSettings,
    pub compensate: CompensateSettings,
    pub tomography: TomographySettings,
    pub table: TableSettings,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            compensation: false,
            out: None,
            seed: 42,
            source: SourceConfig::default(),
            station_a: StationConfig::alice(),
            station_b: StationConfig::bob(),
            session: SessionSettings::default(),
            sweep: SweepSettings {
                sifted_pairs_per_point: 10_000,
                ..SweepSettings::default()
            },
            compensate: CompensateSettings::default(),
            tomography: TomographySettings::default(),
            table: TableSettings::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw TOML layer

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    experiment: Option<RawExperiment>,
    source: Option<RawSource>,
    station_a: Option<RawStation>,
    station_b: Option<RawStation>,
    session: Option<RawSession>,
    sweep: Option<RawSweep>,
    compensate: Option<RawCompensate>,
    tomography: Option<RawTomography>,
    table: Option<RawTable>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Option<String>,
    compensation: Option<toml::Value>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    theta_h_p_deg: Option<f64>,
    delta_x_mm: Option<f64>,
    phi0_rad: Option<f64>,
    kappa_rad_per_mm: Option<f64>,
    noise_p: Option<f64>,
    pair_rate_hz: Option<f64>,
    duration_s: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStation {
    gp_theta_deg: Option<f64>,
    basis_bias: Option<f64>,
    detectors: Option<[String; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    coincidence_window_s: Option<f64>,
    qber_sample_fraction: Option<f64>,
    qber_abort_threshold: Option<f64>,
    target: Option<String>,
    sifted_pairs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    sifted_pairs_per_point: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompensate {
    coarse_step_deg: Option<f64>,
    sifted_pairs_per_probe: Option<usize>,
    rotator_step_arcsec: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTomography {
    shots_per_setting: Option<u64>,
    counts_path: Option<PathBuf>,
    target: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    sifted_pairs_per_row: Option<usize>,
    shots_per_setting: Option<u64>,
}

fn parse_on_off(value: &toml::Value) -> Result<bool> {
    match value {
        toml::Value::Boolean(b) => Ok(*b),
        toml::Value::String(s) => match s.as_str() {
            "on" => Ok(true),
            "off" => Ok(false),
            other => Err(Error::InvalidConfig(format!(
                "compensation must be on/off, got `{other}`"
            ))),
        },
        other => Err(Error::InvalidConfig(format!(
            "compensation must be on/off, got `{other}`"
        ))),
    }
}

fn parse_target(s: &str) -> Result<TargetBell> {
    match s {
        "phi-plus" => Ok(TargetBell::PhiPlus),
        "phi-minus" => Ok(TargetBell::PhiMinus),
        other => Err(Error::InvalidConfig(format!(
            "target must be phi-plus or phi-minus, got `{other}`"
        ))),
    }
}

/// CLI-side overrides that win over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub compensation: Option<bool>,
}

/// Parses a TOML config file and resolves it against defaults and CLI
/// overrides into a runnable plan.
pub fn load_plan(path: &Path, overrides: &CliOverrides) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path)?;
    plan_from_str(&text, overrides)
}

/// Same as [`load_plan`] but from in-memory TOML text.
pub fn plan_from_str(text: &str, overrides: &CliOverrides) -> Result<ExperimentPlan> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;

    let kind = match overrides.experiment {
        Some(kind) => kind,
        None => {
            let name = raw
                .experiment
                .as_ref()
                .and_then(|e| e.name.as_deref())
                .ok_or_else(|| {
                    Error::InvalidConfig(
                        "no experiment given on the command line or in [experiment].name".into(),
                    )
                })?;
            name.parse()?
        }
    };

    let mut plan = ExperimentPlan::new(kind);

    if let Some(experiment) = &raw.experiment {
        if let Some(value) = &experiment.compensation {
            plan.compensation = parse_on_off(value)?;
        }
        if let Some(out) = &experiment.out {
            plan.out = Some(out.clone());
        }
        if let Some(seed) = experiment.seed {
            plan.seed = seed;
        }
    }

    if let Some(source) = &raw.source {
        if let Some(v) = source.theta_h_p_deg {
            plan.source.theta_h_p = v.to_radians();
        }
        if let Some(v) = source.delta_x_mm {
            plan.source.delta_x_mm = v;
        }
        if let Some(v) = source.phi0_rad {
            plan.source.phi0 = v;
        }
        if let Some(v) = source.kappa_rad_per_mm {
            plan.source.kappa_rad_per_mm = v;
        }
        if let Some(v) = source.noise_p {
            plan.source.noise_p = v;
        }
        if let Some(v) = source.pair_rate_hz {
            plan.source.pair_rate_hz = v;
        }
        if let Some(v) = source.duration_s {
            plan.source.duration_s = v;
        }
        if let Some(v) = source.seed {
            plan.source.seed = v;
        }
    }

    for (raw_station, station) in [
        (&raw.station_a, &mut plan.station_a),
        (&raw.station_b, &mut plan.station_b),
    ] {
        if let Some(raw_station) = raw_station {
            if let Some(v) = raw_station.gp_theta_deg {
                station.gp_theta = Some(v.to_radians());
            }
            if let Some(v) = raw_station.basis_bias {
                station.basis_bias = v;
            }
            if let Some(v) = &raw_station.detectors {
                station.detector_ids = v.clone();
            }
        }
    }

    if let Some(session) = &raw.session {
        if let Some(v) = session.coincidence_window_s {
            plan.session.coincidence_window_s = v;
        }
        if let Some(v) = session.qber_sample_fraction {
            plan.session.qber_sample_fraction = v;
        }
        if let Some(v) = session.qber_abort_threshold {
            plan.session.qber_abort_threshold = v;
        }
        if let Some(v) = &session.target {
            plan.session.target = parse_target(v)?;
        }
        plan.session.sifted_cap = session.sifted_pairs.or(plan.session.sifted_cap);
    }

    if let Some(sweep) = &raw.sweep {
        plan.sweep.start = sweep.start.or(plan.sweep.start);
        plan.sweep.stop = sweep.stop.or(plan.sweep.stop);
        plan.sweep.step = sweep.step.or(plan.sweep.step);
        if let Some(v) = sweep.sifted_pairs_per_point {
            plan.sweep.sifted_pairs_per_point = v;
        }
    }

    if let Some(compensate) = &raw.compensate {
        if let Some(v) = compensate.coarse_step_deg {
            plan.compensate.coarse_step_deg = v;
        }
        if let Some(v) = compensate.sifted_pairs_per_probe {
            plan.compensate.sifted_pairs_per_probe = v;
        }
        if let Some(v) = compensate.rotator_step_arcsec {
            plan.compensate.rotator_step_arcsec = v;
        }
    }

    if let Some(tomography) = &raw.tomography {
        if let Some(v) = tomography.shots_per_setting {
            plan.tomography.shots_per_setting = v;
        }
        if let Some(v) = &tomography.counts_path {
            plan.tomography.counts_path = Some(v.clone());
        }
        if let Some(v) = &tomography.target {
            plan.tomography.target = match v.as_str() {
                "auto" => TomographyTarget::Auto,
                "phi-plus" => TomographyTarget::PhiPlus,
                "phi-minus" => TomographyTarget::PhiMinus,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "tomography target must be auto, phi-plus or phi-minus, got `{other}`"
                    )))
                }
            };
        }
    }

    if let Some(table) = &raw.table {
        if let Some(v) = table.sifted_pairs_per_row {
            plan.table.sifted_pairs_per_row = v;
        }
        if let Some(v) = table.shots_per_setting {
            plan.table.shots_per_setting = v;
        }
    }

    // CLI flags win.
    if let Some(seed) = overrides.seed {
        plan.seed = seed;
    }
    if let Some(out) = &overrides.out {
        plan.out = Some(out.clone());
    }
    if let Some(compensation) = overrides.compensation {
        plan.compensation = compensation;
    }

    plan.source.validate()?;
    plan.station_a.validate()?;
    plan.station_b.validate()?;
    Ok(plan)
}
