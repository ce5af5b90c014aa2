//! Experiment runner: QBER sweeps over the pump angle and the crystal
//! displacement, the five-configuration state table, active feedback
//! compensation, tomography runs, and single BBM92 sessions — all seeded,
//! deterministic, and emitted as plot-ready CSV/JSON.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::biphoton::{phi_minus, phi_plus, TwoQubitKet};
use crate::compensator::{scan_minimize, ProbeOutcome, RotatorModel, ScanOutcome};
use crate::config::{ExperimentKind, ExperimentPlan, TomographyTarget};
use crate::error::{Error, Result};
use crate::jones::qhq;
use crate::metrics::{compensation_angle, qber_analytic};
use crate::protocol::{run_session, SessionConfig, SessionReport, TargetBell};
use crate::seeding::derive_seed;
use crate::source::SourceConfig;
use crate::tomography::{
    read_counts_csv, synthesize_counts, tomography_report, TomographyResult,
};

/// One row of the pump-angle sweep.
#[derive(Debug, Clone, Serialize)]
pub struct PumpSweepRow {
    pub theta_deg: f64,
    pub qber: f64,
    pub qber_analytic: f64,
    pub aborted: bool,
}

/// One row of the crystal-displacement sweep.
#[derive(Debug, Clone, Serialize)]
pub struct CrystalSweepRow {
    pub delta_x_mm: f64,
    pub qber: f64,
    pub aborted: bool,
}

/// Source duration that comfortably over-provisions raw pairs so the sifted
/// yield exceeds the requested cap.
fn duration_for_sifted(sifted: usize, pair_rate_hz: f64) -> f64 {
    (2.0 * sifted as f64 * 1.08 + 500.0) / pair_rate_hz
}

/// Relative phase (plus-branch representation) of the pure state that
/// reaches the stations for a given source and optional receiver element.
/// The source contributes φ_un + 4θ_P + π; a receiver element at θ_AB adds
/// another π − 4θ_AB.
fn station_phase(phi_un: f64, theta_h_p: f64, theta_ab: Option<f64>) -> f64 {
    let from_source = phi_un + 4.0 * theta_h_p + std::f64::consts::PI;
    match theta_ab {
        None => from_source.rem_euclid(std::f64::consts::TAU),
        Some(theta) => {
            (from_source + std::f64::consts::PI - 4.0 * theta).rem_euclid(std::f64::consts::TAU)
        }
    }
}

fn characterization_session(
    plan: &ExperimentPlan,
    source: SourceConfig,
    theta_ab: Option<f64>,
    target: TargetBell,
    sifted: usize,
    seed: u64,
) -> SessionConfig {
    let mut station_b = plan.station_b.clone();
    station_b.gp_theta = theta_ab;
    SessionConfig {
        source,
        station_a: plan.station_a.clone(),
        station_b,
        coincidence_window_s: plan.session.coincidence_window_s,
        // Characterization runs disclose everything measured.
        qber_sample_fraction: 1.0,
        qber_abort_threshold: plan.session.qber_abort_threshold,
        target,
        seed,
        sifted_cap: Some(sifted),
    }
}

/// Pump-angle sweep: one session per grid point. With compensation on, the
/// receiver angle is set per point so the total relative phase cancels.
pub fn sweep_pump_phase(plan: &ExperimentPlan) -> Result<Vec<PumpSweepRow>> {
    let start = plan.sweep.start.unwrap_or(0.0);
    let stop = plan.sweep.stop.unwrap_or(100.0);
    let step = plan.sweep.step.unwrap_or(2.0);
    let grid = sweep_grid(start, stop, step)?;
    let sifted = plan.sweep.sifted_pairs_per_point;

    grid.into_par_iter()
        .enumerate()
        .map(|(idx, theta_deg)| {
            let point_seed = derive_seed(plan.seed, idx as u64);
            let mut source = plan.source.clone();
            source.theta_h_p = theta_deg.to_radians();
            source.duration_s = duration_for_sifted(sifted, source.pair_rate_hz);
            source.seed = derive_seed(point_seed, 1);
            let phi_un = source.unknown_phase()?;

            let theta_ab = if plan.compensation {
                Some(compensation_angle(phi_un, source.theta_h_p))
            } else {
                plan.station_b.gp_theta
            };
            let phase = station_phase(phi_un, source.theta_h_p, theta_ab);
            let target = if plan.compensation {
                TargetBell::PhiPlus
            } else {
                TargetBell::nearest_for_phase(phase)
            };

            let config =
                characterization_session(plan, source, theta_ab, target, sifted, point_seed);
            let report = run_session(&config)?;
            Ok(PumpSweepRow {
                theta_deg,
                qber: report.qber_total,
                qber_analytic: qber_analytic(phase),
                aborted: report.aborted,
            })
        })
        .collect()
}

/// Crystal-displacement sweep with the pump angle held fixed.
pub fn sweep_crystal(plan: &ExperimentPlan) -> Result<Vec<CrystalSweepRow>> {
    let start = plan.sweep.start.unwrap_or(0.0);
    let stop = plan.sweep.stop.unwrap_or(2.0);
    let step = plan.sweep.step.unwrap_or(0.25);
    let grid = sweep_grid(start, stop, step)?;
    let sifted = plan.sweep.sifted_pairs_per_point;

    grid.into_par_iter()
        .enumerate()
        .map(|(idx, delta_x_mm)| {
            let point_seed = derive_seed(plan.seed, 0x4000_0000 ^ idx as u64);
            let mut source = plan.source.clone();
            source.delta_x_mm = delta_x_mm;
            source.duration_s = duration_for_sifted(sifted, source.pair_rate_hz);
            source.seed = derive_seed(point_seed, 1);
            let phi_un = source.unknown_phase()?;

            let theta_ab = if plan.compensation {
                Some(compensation_angle(phi_un, source.theta_h_p))
            } else {
                plan.station_b.gp_theta
            };
            let phase = station_phase(phi_un, source.theta_h_p, theta_ab);
            let target = if plan.compensation {
                TargetBell::PhiPlus
            } else {
                TargetBell::nearest_for_phase(phase)
            };

            let config =
                characterization_session(plan, source, theta_ab, target, sifted, point_seed);
            let report = run_session(&config)?;
            Ok(CrystalSweepRow {
                delta_x_mm,
                qber: report.qber_total,
                aborted: report.aborted,
            })
        })
        .collect()
}

fn sweep_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sweep step must be positive, got {step}"
        )));
    }
    if stop < start {
        return Err(Error::InvalidConfig(format!(
            "sweep stop {stop} below start {start}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

/// Human-readable label for a phase-shifted Bell state.
pub fn label_for_phase(phi: f64) -> String {
    let tau = std::f64::consts::TAU;
    let phi = phi.rem_euclid(tau);
    let candidates = [
        (0.0, "(HH + VV)/√2"),
        (std::f64::consts::FRAC_PI_2, "(HH + iVV)/√2"),
        (std::f64::consts::PI, "(HH - VV)/√2"),
        (3.0 * std::f64::consts::FRAC_PI_2, "(HH - iVV)/√2"),
        (tau, "(HH + VV)/√2"),
    ];
    for (value, label) in candidates {
        if (phi - value).abs() < 1e-6 {
            return label.to_owned();
        }
    }
    format!("(HH + e^(i{phi:.3})VV)/√2")
}

/// Values for the pump-driven and crystal-driven realization of one table
/// configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaseValues {
    pub pump: f64,
    pub crystal: f64,
}

/// One row of the five-configuration summary table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub theta_h_p_deg: f64,
    pub delta_x_mm: f64,
    pub initial_state: String,
    pub initial_fidelity: CaseValues,
    pub qber_uncompensated: CaseValues,
    pub compensation_angle_deg: f64,
    pub compensated_state: String,
    pub compensated_fidelity: CaseValues,
    pub qber_compensated: CaseValues,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub rows: Vec<TableRow>,
}

/// The five reference configurations: the same state cycle reached either by
/// the pump angle (with the crystal centered) or by the crystal displacement
/// (with the pump angle at zero).
pub const TABLE_CONFIGURATIONS: [(f64, f64); 5] = [
    (0.0, 0.0),
    (22.5, 0.5),
    (45.0, 1.0),
    (67.5, 1.5),
    (90.0, 2.0),
];

struct CaseOutcome {
    initial_fidelity: f64,
    qber_uncompensated: f64,
    compensated_fidelity: f64,
    qber_compensated: f64,
    initial_phase: f64,
    compensation_angle: f64,
}

fn run_table_case(
    plan: &ExperimentPlan,
    theta_p_deg: f64,
    delta_x_mm: f64,
    case_seed: u64,
) -> Result<CaseOutcome> {
    use rand::SeedableRng;

    let mut source = plan.source.clone();
    source.theta_h_p = theta_p_deg.to_radians();
    source.delta_x_mm = delta_x_mm;
    source.duration_s = duration_for_sifted(plan.table.sifted_pairs_per_row, source.pair_rate_hz);
    source.seed = derive_seed(case_seed, 1);

    let phi_un = source.unknown_phase()?;
    let ideal_initial = source.emitted_ket()?.canonicalized();
    let initial_phase = station_phase(phi_un, source.theta_h_p, None);
    let emitted = source.emitted_state()?;

    // Tomography of the uncompensated state against its ideal form.
    let mut tomo_rng = rand_chacha::ChaCha12Rng::seed_from_u64(derive_seed(case_seed, 2));
    let counts = synthesize_counts(&emitted, plan.table.shots_per_setting, &mut tomo_rng)?;
    let initial_report = tomography_report(&counts, &ideal_initial)?;

    // Uncompensated session, judged against the nearest Bell branch.
    let target = TargetBell::nearest_for_phase(initial_phase);
    let uncompensated = characterization_session(
        plan,
        source.clone(),
        None,
        target,
        plan.table.sifted_pairs_per_row,
        derive_seed(case_seed, 3),
    );
    let uncompensated_report = run_session(&uncompensated)?;

    // Compensated run: receiver angle from the phase chain.
    let theta_ab = compensation_angle(phi_un, source.theta_h_p);
    let mut comp_source = source.clone();
    comp_source.seed = derive_seed(case_seed, 4);
    let compensated = characterization_session(
        plan,
        comp_source,
        Some(theta_ab),
        TargetBell::PhiPlus,
        plan.table.sifted_pairs_per_row,
        derive_seed(case_seed, 5),
    );
    let compensated_report = run_session(&compensated)?;

    // Tomography of the compensated state against Φ⁺.
    let compensated_state = emitted.transformed(&crate::jones::JonesMatrix::identity(), &qhq(theta_ab));
    let mut tomo_rng = rand_chacha::ChaCha12Rng::seed_from_u64(derive_seed(case_seed, 6));
    let comp_counts =
        synthesize_counts(&compensated_state, plan.table.shots_per_setting, &mut tomo_rng)?;
    let compensated_report_tomo = tomography_report(&comp_counts, &phi_plus())?;

    Ok(CaseOutcome {
        initial_fidelity: initial_report.fidelity_to_target,
        qber_uncompensated: uncompensated_report.qber_total,
        compensated_fidelity: compensated_report_tomo.fidelity_to_target,
        qber_compensated: compensated_report.qber_total,
        initial_phase,
        compensation_angle: theta_ab,
    })
}

/// Runs all five table configurations, each in its pump-driven and
/// crystal-driven realization.
pub fn table1(plan: &ExperimentPlan) -> Result<TableSummary> {
    let mut rows = Vec::with_capacity(TABLE_CONFIGURATIONS.len());
    for (row_idx, &(theta_p_deg, delta_x_mm)) in TABLE_CONFIGURATIONS.iter().enumerate() {
        let pump_case = run_table_case(
            plan,
            theta_p_deg,
            0.0,
            derive_seed(plan.seed, 0x7A00 + 2 * row_idx as u64),
        )?;
        let crystal_case = run_table_case(
            plan,
            0.0,
            delta_x_mm,
            derive_seed(plan.seed, 0x7A01 + 2 * row_idx as u64),
        )?;

        rows.push(TableRow {
            theta_h_p_deg: theta_p_deg,
            delta_x_mm,
            initial_state: label_for_phase(pump_case.initial_phase),
            initial_fidelity: CaseValues {
                pump: pump_case.initial_fidelity,
                crystal: crystal_case.initial_fidelity,
            },
            qber_uncompensated: CaseValues {
                pump: pump_case.qber_uncompensated,
                crystal: crystal_case.qber_uncompensated,
            },
            compensation_angle_deg: pump_case.compensation_angle.to_degrees(),
            compensated_state: label_for_phase(0.0),
            compensated_fidelity: CaseValues {
                pump: pump_case.compensated_fidelity,
                crystal: crystal_case.compensated_fidelity,
            },
            qber_compensated: CaseValues {
                pump: pump_case.qber_compensated,
                crystal: crystal_case.qber_compensated,
            },
        });
    }
    Ok(TableSummary { rows })
}

/// Outcome of the feedback-compensation experiment.
#[derive(Debug, Clone)]
pub struct CompensateOutcome {
    pub scan: ScanOutcome,
    pub probes_run: usize,
}

/// Active compensation on the configured source: scans the receiver angle to
/// minimize the measured QBER, with each probe an independent seeded session
/// against a Φ⁺ target.
pub fn compensate(plan: &ExperimentPlan) -> Result<CompensateOutcome> {
    let rotator = RotatorModel::new(
        plan.compensate.rotator_step_arcsec.to_radians() / 3600.0,
    )?;
    let sifted = plan.compensate.sifted_pairs_per_probe;
    let mut probe_index = 0u64;
    let mut probe = |theta_applied: f64| -> Result<ProbeOutcome> {
        probe_index += 1;
        let mut source = plan.source.clone();
        source.duration_s = duration_for_sifted(sifted, source.pair_rate_hz);
        source.seed = derive_seed(plan.seed, 0x9000 + 2 * probe_index);
        let config = characterization_session(
            plan,
            source,
            Some(theta_applied),
            TargetBell::PhiPlus,
            sifted,
            derive_seed(plan.seed, 0x9001 + 2 * probe_index),
        );
        let report = run_session(&config)?;
        Ok(ProbeOutcome {
            qber: report.qber_total,
            aborted: report.aborted,
        })
    };

    let scan = scan_minimize(
        &rotator,
        plan.compensate.coarse_step_deg.to_radians(),
        &mut probe,
    )?;
    Ok(CompensateOutcome {
        scan,
        probes_run: probe_index as usize,
    })
}

/// Tomography experiment: counts either synthesized from the configured
/// source or ingested from a CSV, then reconstructed and compared to the
/// requested target.
pub fn tomography_experiment(plan: &ExperimentPlan) -> Result<TomographyResult> {
    use rand::SeedableRng;

    let counts = match &plan.tomography.counts_path {
        Some(path) => read_counts_csv(path)?,
        None => {
            let state = plan.source.emitted_state()?;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(derive_seed(plan.seed, 0xBEEF));
            synthesize_counts(&state, plan.tomography.shots_per_setting, &mut rng)?
        }
    };
    let target: TwoQubitKet = match plan.tomography.target {
        TomographyTarget::Auto => plan.source.emitted_ket()?.canonicalized(),
        TomographyTarget::PhiPlus => phi_plus(),
        TomographyTarget::PhiMinus => phi_minus(),
    };
    tomography_report(&counts, &target)
}

/// Single BBM92 session straight from the plan.
pub fn bbm92_run(plan: &ExperimentPlan) -> Result<SessionReport> {
    let config = SessionConfig {
        source: plan.source.clone(),
        station_a: plan.station_a.clone(),
        station_b: plan.station_b.clone(),
        coincidence_window_s: plan.session.coincidence_window_s,
        qber_sample_fraction: plan.session.qber_sample_fraction,
        qber_abort_threshold: plan.session.qber_abort_threshold,
        target: plan.session.target,
        seed: plan.seed,
        sifted_cap: plan.session.sifted_cap,
    };
    run_session(&config)
}

// ---------------------------------------------------------------------------
// Output files

fn format_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Writes pump-sweep rows with columns `theta_deg,qber,qber_analytic,aborted`.
pub fn write_pump_sweep_csv(path: &Path, rows: &[PumpSweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["theta_deg", "qber", "qber_analytic", "aborted"])?;
    for row in rows {
        writer.write_record([
            format!("{:.4}", row.theta_deg),
            format!("{:.6}", row.qber),
            format!("{:.6}", row.qber_analytic),
            format_bool(row.aborted).to_owned(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes crystal-sweep rows with columns `delta_x_mm,qber,aborted`.
pub fn write_crystal_sweep_csv(path: &Path, rows: &[CrystalSweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["delta_x_mm", "qber", "aborted"])?;
    for row in rows {
        writer.write_record([
            format!("{:.4}", row.delta_x_mm),
            format!("{:.6}", row.qber),
            format_bool(row.aborted).to_owned(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the controller trace with columns
/// `iteration,theta_deg_requested,theta_deg_applied,qber,decision`.
pub fn write_trace_csv(path: &Path, trace: &[crate::compensator::TraceRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "iteration",
        "theta_deg_requested",
        "theta_deg_applied",
        "qber",
        "decision",
    ])?;
    for row in trace {
        writer.write_record([
            row.iteration.to_string(),
            format!("{:.6}", row.theta_deg_requested),
            format!("{:.6}", row.theta_deg_applied),
            format!("{:.6}", row.qber),
            row.decision.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// What an experiment run produced, for exit-code handling and the summary
/// line.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub sessions_total: usize,
    pub sessions_aborted: usize,
    pub output_path: PathBuf,
    pub summary: String,
}

impl RunOutcome {
    /// True when every session of the run aborted.
    pub fn aborted_only(&self) -> bool {
        self.sessions_total > 0 && self.sessions_aborted == self.sessions_total
    }
}

/// Executes the plan and writes its output file.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<RunOutcome> {
    let default_name = match plan.kind {
        ExperimentKind::SweepPumpPhase => "sweep_pump_phase.csv",
        ExperimentKind::SweepCrystal => "sweep_crystal.csv",
        ExperimentKind::Compensate => "compensation_trace.csv",
        ExperimentKind::Tomography => "tomography.json",
        ExperimentKind::Bbm92Run => "session_report.json",
        ExperimentKind::Table1 => "table1.json",
    };
    let out = plan
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name));

    match plan.kind {
        ExperimentKind::SweepPumpPhase => {
            let rows = sweep_pump_phase(plan)?;
            write_pump_sweep_csv(&out, &rows)?;
            let aborted = rows.iter().filter(|r| r.aborted).count();
            Ok(RunOutcome {
                sessions_total: rows.len(),
                sessions_aborted: aborted,
                summary: format!(
                    "pump sweep: {} points, {} aborted, qber range {:.4}..{:.4}",
                    rows.len(),
                    aborted,
                    rows.iter().map(|r| r.qber).fold(f64::INFINITY, f64::min),
                    rows.iter().map(|r| r.qber).fold(0.0, f64::max),
                ),
                output_path: out,
            })
        }
        ExperimentKind::SweepCrystal => {
            let rows = sweep_crystal(plan)?;
            write_crystal_sweep_csv(&out, &rows)?;
            let aborted = rows.iter().filter(|r| r.aborted).count();
            Ok(RunOutcome {
                sessions_total: rows.len(),
                sessions_aborted: aborted,
                summary: format!(
                    "crystal sweep: {} points, {} aborted, qber range {:.4}..{:.4}",
                    rows.len(),
                    aborted,
                    rows.iter().map(|r| r.qber).fold(f64::INFINITY, f64::min),
                    rows.iter().map(|r| r.qber).fold(0.0, f64::max),
                ),
                output_path: out,
            })
        }
        ExperimentKind::Compensate => {
            let outcome = compensate(plan)?;
            write_trace_csv(&out, &outcome.scan.trace)?;
            Ok(RunOutcome {
                sessions_total: outcome.probes_run,
                sessions_aborted: 0,
                summary: format!(
                    "compensation: theta_ab = {:.4} deg, qber = {:.4} ({} probe sessions)",
                    outcome.scan.theta.to_degrees(),
                    outcome.scan.qber,
                    outcome.probes_run,
                ),
                output_path: out,
            })
        }
        ExperimentKind::Tomography => {
            let result = tomography_experiment(plan)?;
            write_json(&out, &result.to_json())?;
            Ok(RunOutcome {
                sessions_total: 0,
                sessions_aborted: 0,
                summary: format!(
                    "tomography: fidelity = {:.4}, raw min eigenvalue = {:+.2e}",
                    result.fidelity_to_target, result.min_eigenvalue_raw,
                ),
                output_path: out,
            })
        }
        ExperimentKind::Bbm92Run => {
            let report = bbm92_run(plan)?;
            write_json(&out, &report)?;
            Ok(RunOutcome {
                sessions_total: 1,
                sessions_aborted: usize::from(report.aborted),
                summary: format!(
                    "bbm92 session: {} sifted, qber = {:.4} (Z {:.4} / X {:.4}), {} key bits, rate {:.4}{}",
                    report.sifted_count,
                    report.qber_total,
                    report.qber_z,
                    report.qber_x,
                    report.key_length_bits,
                    report.secure_key_rate_estimate,
                    if report.aborted { ", ABORTED" } else { "" },
                ),
                output_path: out,
            })
        }
        ExperimentKind::Table1 => {
            let summary = table1(plan)?;
            write_json(&out, &summary)?;
            let aborted = summary
                .rows
                .iter()
                .flat_map(|r| {
                    [
                        r.qber_uncompensated.pump,
                        r.qber_uncompensated.crystal,
                        r.qber_compensated.pump,
                        r.qber_compensated.crystal,
                    ]
                })
                .filter(|&q| q > plan.session.qber_abort_threshold)
                .count();
            Ok(RunOutcome {
                sessions_total: 4 * summary.rows.len(),
                sessions_aborted: aborted,
                summary: format!(
                    "state table: {} configurations, fidelities {:.3}..{:.3}",
                    summary.rows.len(),
                    summary
                        .rows
                        .iter()
                        .flat_map(|r| [
                            r.initial_fidelity.pump,
                            r.initial_fidelity.crystal,
                            r.compensated_fidelity.pump,
                            r.compensated_fidelity.crystal
                        ])
                        .fold(f64::INFINITY, f64::min),
                    summary
                        .rows
                        .iter()
                        .flat_map(|r| [
                            r.initial_fidelity.pump,
                            r.initial_fidelity.crystal,
                            r.compensated_fidelity.pump,
                            r.compensated_fidelity.crystal
                        ])
                        .fold(0.0, f64::max),
                ),
                output_path: out,
            })
        }
    }
}
