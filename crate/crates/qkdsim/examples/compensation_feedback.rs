//! Closed-loop compensation of an unknown phase: sweep the pump angle to
//! fit the oscillation law, extract the two phase candidates, disambiguate
//! with one extra probe, then let the feedback controller converge on the
//! compensation angle through noisy QBER probes alone.
//!
//! Run: `cargo run --release --example compensation_feedback`

use qkdsim::compensator::{
    disambiguate_phase, fit_qber_curve, phase_from_fit, ProbeOutcome, RotatorModel,
};
use qkdsim::config::{ExperimentKind, ExperimentPlan};
use qkdsim::experiments::{compensate, sweep_pump_phase};
use qkdsim::metrics::compensation_angle;
use qkdsim::protocol::{run_session, SessionConfig, TargetBell};
use qkdsim::seeding::derive_seed;
use qkdsim::source::SourceConfig;

fn main() {
    // The "unknown" phase the operator is trying to find; it enters the
    // simulation through the source but the controller never reads it.
    let hidden_phase = 1.1;

    // Step 1: sweep the pump angle and fit the oscillation.
    let mut plan = ExperimentPlan::new(ExperimentKind::SweepPumpPhase);
    plan.seed = 21;
    plan.source.phi0 = hidden_phase;
    plan.sweep.sifted_pairs_per_point = 10_000;
    let rows = sweep_pump_phase(&plan).expect("sweep");
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.theta_deg.to_radians(), r.qber))
        .collect();
    let fit = fit_qber_curve(&samples).expect("fit");
    println!(
        "fit: a = {:.2}%, b = {:.2}%, delta = {:+.4} rad",
        fit.a, fit.b, fit.delta
    );

    // Step 2: the |cos| symmetry leaves two phase candidates.
    let candidates = phase_from_fit(&fit);
    println!(
        "phase candidates: {:.4} rad and {:.4} rad (true: {:.4})",
        candidates[0], candidates[1], hidden_phase
    );

    // Step 3: one quadrature probe picks the branch.
    let rotator = RotatorModel::default();
    let mut probe_seed = 0u64;
    let mut probe = |theta_ab: f64| -> qkdsim::Result<ProbeOutcome> {
        probe_seed += 1;
        let config = SessionConfig {
            source: SourceConfig {
                phi0: hidden_phase,
                duration_s: 0.25,
                seed: derive_seed(900, probe_seed),
                ..SourceConfig::default()
            },
            station_b: qkdsim::station::StationConfig::bob().with_gp(theta_ab),
            qber_sample_fraction: 1.0,
            target: TargetBell::PhiPlus,
            seed: derive_seed(901, probe_seed),
            ..SessionConfig::default()
        };
        let report = run_session(&config)?;
        Ok(ProbeOutcome {
            qber: report.qber_total,
            aborted: report.aborted,
        })
    };
    let resolved = disambiguate_phase(candidates, 0.0, &rotator, &mut probe).expect("probe");
    println!("disambiguated phase estimate: {:.4} rad", resolved);
    println!(
        "implied compensation angle: {:.2}° (exact: {:.2}°)",
        compensation_angle(resolved, 0.0).to_degrees(),
        compensation_angle(hidden_phase, 0.0).to_degrees()
    );

    // Step 4: or skip the modeling entirely and let the controller minimize
    // the measured QBER directly.
    let mut plan = ExperimentPlan::new(ExperimentKind::Compensate);
    plan.seed = 23;
    plan.source.phi0 = hidden_phase;
    plan.compensate.sifted_pairs_per_probe = 10_000;
    let outcome = compensate(&plan).expect("scan");
    println!(
        "\nfeedback scan: theta_AB = {:.3}° after {} probe sessions, residual QBER {:.4}",
        outcome.scan.theta.to_degrees(),
        outcome.probes_run,
        outcome.scan.qber
    );
    println!(
        "trace: {} controller steps (coarse scan + golden-section refinement)",
        outcome.scan.trace.len()
    );
}
