//! Single-parameter active phase compensation: probe the QBER as a function
//! of the receiver half-wave-plate angle, locate the minimum with a coarse
//! scan plus golden-section refinement on the quantized rotator grid, fit
//! the oscillation law to estimate the unknown phase, and disambiguate the
//! |cos| branch with one extra probe.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::compensation_angle;

/// 25 arcseconds in radians.
pub const ARCSEC_25: f64 = 25.0 / 3600.0 * std::f64::consts::PI / 180.0;

/// A motorized rotation mount with a finite step resolution over [0, π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatorModel {
    pub step_resolution: f64,
}

impl Default for RotatorModel {
    fn default() -> Self {
        Self {
            step_resolution: ARCSEC_25,
        }
    }
}

impl RotatorModel {
    pub fn new(step_resolution: f64) -> Result<Self> {
        if !step_resolution.is_finite() || step_resolution <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "rotator step resolution must be positive, got {step_resolution}"
            )));
        }
        Ok(Self { step_resolution })
    }

    /// Nearest angle on the rotator grid, reduced to [0, π).
    pub fn snap(&self, theta: f64) -> f64 {
        let steps = (theta / self.step_resolution).round();
        (steps * self.step_resolution).rem_euclid(std::f64::consts::PI)
    }

    fn grid_index(&self, theta: f64) -> i64 {
        (self.snap(theta) / self.step_resolution).round() as i64
    }
}

/// Result of one probe session at a quantized angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOutcome {
    pub qber: f64,
    pub aborted: bool,
}

/// Runs one probe at the rotator-quantized angle and returns the pooled
/// QBER. The probe closure receives the applied (snapped) angle.
pub fn qber_objective<F>(theta: f64, rotator: &RotatorModel, probe: &mut F) -> Result<ProbeOutcome>
where
    F: FnMut(f64) -> Result<ProbeOutcome>,
{
    probe(rotator.snap(theta))
}

/// One line of the controller trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: u32,
    pub theta_deg_requested: f64,
    pub theta_deg_applied: f64,
    pub qber: f64,
    pub decision: String,
}

/// Output of [`scan_minimize`].
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    /// Quantized minimizer, radians in [0, π/2).
    pub theta: f64,
    /// Averaged QBER observed at the minimizer.
    pub qber: f64,
    pub trace: Vec<TraceRow>,
}

/// Number of probe sessions averaged per angle to tame shot noise.
pub const PROBES_PER_ANGLE: usize = 3;

/// Locates the QBER minimum over the receiver angle: a coarse scan over
/// [0°, 90°) followed by golden-section refinement around the best point,
/// down to the rotator's step resolution. Each angle is probed
/// [`PROBES_PER_ANGLE`] times and averaged; angles are memoized on the
/// rotator grid so no angle is probed twice.
///
/// Errors with [`Error::NoSecureOperatingPoint`] when every coarse-scan
/// probe reports an aborted session.
pub fn scan_minimize<F>(
    rotator: &RotatorModel,
    coarse_step: f64,
    probe: &mut F,
) -> Result<ScanOutcome>
where
    F: FnMut(f64) -> Result<ProbeOutcome>,
{
    if coarse_step < rotator.step_resolution {
        return Err(Error::InvalidConfig(format!(
            "coarse step {coarse_step} below rotator resolution {}",
            rotator.step_resolution
        )));
    }
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut trace = Vec::new();
    let mut iteration = 0u32;
    let mut cache: HashMap<i64, ProbeOutcome> = HashMap::new();

    let mut evaluate = |theta_requested: f64,
                        decision: &str,
                        trace: &mut Vec<TraceRow>,
                        iteration: &mut u32,
                        cache: &mut HashMap<i64, ProbeOutcome>|
     -> Result<ProbeOutcome> {
        let applied = rotator.snap(theta_requested);
        let key = rotator.grid_index(theta_requested);
        let outcome = if let Some(&cached) = cache.get(&key) {
            cached
        } else {
            let mut total = 0.0;
            let mut aborted_all = true;
            for _ in 0..PROBES_PER_ANGLE {
                let one = probe(applied)?;
                total += one.qber;
                aborted_all &= one.aborted;
            }
            let outcome = ProbeOutcome {
                qber: total / PROBES_PER_ANGLE as f64,
                aborted: aborted_all,
            };
            cache.insert(key, outcome);
            outcome
        };
        trace.push(TraceRow {
            iteration: *iteration,
            theta_deg_requested: theta_requested.to_degrees(),
            theta_deg_applied: applied.to_degrees(),
            qber: outcome.qber,
            decision: decision.to_owned(),
        });
        *iteration += 1;
        Ok(outcome)
    };

    // Coarse scan over one 90° period.
    let mut best_theta = 0.0;
    let mut best_qber = f64::INFINITY;
    let mut any_secure = false;
    let mut theta = 0.0;
    while theta < quarter - 1e-12 {
        let outcome = evaluate(theta, "coarse", &mut trace, &mut iteration, &mut cache)?;
        any_secure |= !outcome.aborted;
        if outcome.qber < best_qber {
            best_qber = outcome.qber;
            best_theta = rotator.snap(theta);
        }
        theta += coarse_step;
    }
    if !any_secure {
        return Err(Error::NoSecureOperatingPoint);
    }

    // Golden-section refinement inside the bracket around the coarse best.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = best_theta - coarse_step;
    let mut hi = best_theta + coarse_step;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = evaluate(x1, "refine", &mut trace, &mut iteration, &mut cache)?.qber;
    let mut f2 = evaluate(x2, "refine", &mut trace, &mut iteration, &mut cache)?.qber;
    while (hi - lo) > rotator.step_resolution {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = evaluate(x1, "refine", &mut trace, &mut iteration, &mut cache)?.qber;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = evaluate(x2, "refine", &mut trace, &mut iteration, &mut cache)?.qber;
        }
        if f1.min(f2) < best_qber {
            if f1 <= f2 {
                best_qber = f1;
                best_theta = rotator.snap(x1);
            } else {
                best_qber = f2;
                best_theta = rotator.snap(x2);
            }
        }
    }

    let best_theta = best_theta.rem_euclid(quarter);
    let final_outcome = evaluate(best_theta, "final", &mut trace, &mut iteration, &mut cache)?;
    Ok(ScanOutcome {
        theta: best_theta,
        qber: final_outcome.qber,
        trace,
    })
}

/// Parameters of the fit QBER(θ) = a − b·|cos(4θ + δ)|, in percent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    /// Percent offset.
    pub a: f64,
    /// Percent amplitude, nonnegative.
    pub b: f64,
    /// Phase offset, radians, normalized to [−π/2, π/2).
    pub delta: f64,
    /// Sum of squared residuals, percent².
    pub residual: f64,
}

/// Linear least squares for (a, b) at fixed δ; returns (a, b, residual).
fn fit_ab(samples: &[(f64, f64)], delta: f64) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mut sum_c = 0.0;
    let mut sum_cc = 0.0;
    let mut sum_q = 0.0;
    let mut sum_cq = 0.0;
    for &(theta, qber_pct) in samples {
        let c = (4.0 * theta + delta).cos().abs();
        sum_c += c;
        sum_cc += c * c;
        sum_q += qber_pct;
        sum_cq += c * qber_pct;
    }
    // Normal equations for q = a − b·c.
    let det = n * sum_cc - sum_c * sum_c;
    let (a, b) = if det.abs() < 1e-12 {
        (sum_q / n, 0.0)
    } else {
        let a = (sum_cc * sum_q - sum_c * sum_cq) / det;
        let b = (sum_c * sum_q - n * sum_cq) / det;
        (a, b)
    };
    let mut residual = 0.0;
    for &(theta, qber_pct) in samples {
        let c = (4.0 * theta + delta).cos().abs();
        let err = qber_pct - (a - b * c);
        residual += err * err;
    }
    (a, b, residual)
}

/// Least-squares fit of QBER(θ) = a − b·|cos(4θ + δ)| over (a, b, δ), with a
/// grid seed in δ followed by golden-section refinement. Inputs are
/// (θ radians, QBER fraction) pairs; outputs are in percent.
///
/// Requires at least 8 samples spanning at least 45° of θ; constant samples
/// are rejected.
pub fn fit_qber_curve(samples: &[(f64, f64)]) -> Result<FitResult> {
    const MIN_SAMPLES: usize = 8;
    const MIN_SPAN_DEG: f64 = 45.0;
    let span = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max)
        - samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if samples.len() < MIN_SAMPLES || span.to_degrees() < MIN_SPAN_DEG - 1e-9 {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            span_deg: MIN_SPAN_DEG,
            got: samples.len(),
            got_span_deg: span.to_degrees().max(0.0),
        });
    }
    let q_max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let q_min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if q_max - q_min < 1e-12 {
        return Err(Error::DegenerateFit);
    }

    let pct: Vec<(f64, f64)> = samples.iter().map(|&(t, q)| (t, 100.0 * q)).collect();

    // δ has period π; coarse grid then golden-section refinement.
    let grid_step = std::f64::consts::PI / 180.0;
    let mut best_delta = 0.0;
    let mut best_residual = f64::INFINITY;
    let mut delta = 0.0;
    while delta < std::f64::consts::PI {
        let (_, _, residual) = fit_ab(&pct, delta);
        if residual < best_residual {
            best_residual = residual;
            best_delta = delta;
        }
        delta += grid_step;
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = best_delta - grid_step;
    let mut hi = best_delta + grid_step;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = fit_ab(&pct, x1).2;
    let mut f2 = fit_ab(&pct, x2).2;
    while (hi - lo) > 1e-11 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = fit_ab(&pct, x1).2;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = fit_ab(&pct, x2).2;
        }
    }
    let delta = 0.5 * (lo + hi);
    let (a, b, residual) = fit_ab(&pct, delta);

    // b must be nonnegative; a negative amplitude means the grid landed on
    // the antiphase branch, which a δ shift of π/4 · ... cannot fix within
    // the model, so fall back to the constant fit.
    let (a, b, delta, residual) = if b < 0.0 {
        let mean = pct.iter().map(|s| s.1).sum::<f64>() / pct.len() as f64;
        let res = pct.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>();
        (mean, 0.0, 0.0, res)
    } else {
        (a, b, delta, residual)
    };

    // Normalize δ to [−π/2, π/2).
    let mut delta = delta.rem_euclid(std::f64::consts::PI);
    if delta >= std::f64::consts::FRAC_PI_2 {
        delta -= std::f64::consts::PI;
    }

    Ok(FitResult {
        a,
        b,
        delta,
        residual,
    })
}

/// The two unknown-phase candidates consistent with a fitted δ: the |cos|
/// symmetry leaves a twofold ambiguity separated by π.
pub fn phase_from_fit(fit: &FitResult) -> [f64; 2] {
    let tau = std::f64::consts::TAU;
    [
        fit.delta.rem_euclid(tau),
        (fit.delta + std::f64::consts::PI).rem_euclid(tau),
    ]
}

/// Resolves the branch ambiguity with one extra probe at a quadrature
/// offset: the receiver angle is set 11.25° away from the first candidate's
/// compensation angle, where the two branches predict clearly separated
/// QBERs (≈10% against ≈43% at the default noise). The probe must run
/// sessions with a Φ⁺ target.
pub fn disambiguate_phase<F>(
    candidates: [f64; 2],
    theta_h_p: f64,
    rotator: &RotatorModel,
    probe: &mut F,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<ProbeOutcome>,
{
    let offset = 11.25f64.to_radians();
    let probe_angle = rotator.snap(compensation_angle(candidates[0], theta_h_p) + offset);
    let outcome = probe(probe_angle)?;
    if outcome.qber < 0.25 {
        Ok(candidates[0])
    } else {
        Ok(candidates[1])
    }
}
