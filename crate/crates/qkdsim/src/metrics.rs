//! Closed-form metric laws for phase-shifted Bell states — CHSH parameter,
//! two-photon visibility, and QBER as functions of the relative phase — plus
//! an operational CHSH evaluation from correlation measurements and the
//! single-parameter compensation-angle solver.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::biphoton::{kron2, DensityMatrix4};
use crate::jones::C64;

/// Canonical QBER security threshold for entanglement-based key distribution.
pub const QBER_SECURITY_THRESHOLD: f64 = 0.11;

/// S(φ) = √2 + √2·|cos φ|.
pub fn chsh_s(phi: f64) -> f64 {
    std::f64::consts::SQRT_2 * (1.0 + phi.cos().abs())
}

/// V(φ) = (1 + |cos φ|)/2.
pub fn visibility(phi: f64) -> f64 {
    0.5 * (1.0 + phi.cos().abs())
}

/// QBER(φ) = (1 − |cos φ|)/4; zero at φ = 0, maximal (25%) at φ = π/2.
pub fn qber_analytic(phi: f64) -> f64 {
    0.25 * (1.0 - phi.cos().abs())
}

/// The three laws evaluated at one relative phase. The fields are chained:
/// `visibility = s_value/(2√2)` and `qber = (1 − visibility)/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub s_value: f64,
    pub visibility: f64,
    pub qber: f64,
}

impl MetricsReport {
    pub fn from_phase(phi: f64) -> Self {
        Self {
            s_value: chsh_s(phi),
            visibility: visibility(phi),
            qber: qber_analytic(phi),
        }
    }
}

/// Relative-phase interval around 0 (and, by the |cos φ| symmetry of the
/// laws, around every multiple of π) inside which the analytic QBER stays at
/// or below the threshold.
#[derive(Debug, Clone, Copy)]
pub struct PhaseWindow {
    threshold: f64,
    half_width: f64,
}

impl PhaseWindow {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Half-width in radians; the endpoints solve (1 − |cos φ|)/4 = threshold.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Whether a source with relative phase `phi` stays within the secure
    /// window.
    pub fn is_secure(&self, phi: f64) -> bool {
        qber_analytic(phi) <= self.threshold + 1e-15
    }
}

/// Secure window at the canonical 11% threshold; half-width ≈ 0.977 rad
/// ≈ 0.31π.
pub fn secure_phase_window() -> PhaseWindow {
    secure_phase_window_with(QBER_SECURITY_THRESHOLD)
}

/// Secure window at a custom threshold, for sensitivity studies.
pub fn secure_phase_window_with(threshold: f64) -> PhaseWindow {
    let cos_edge = (1.0 - 4.0 * threshold).clamp(-1.0, 1.0);
    PhaseWindow {
        threshold,
        half_width: cos_edge.acos(),
    }
}

/// Linear-analyzer angles for a CHSH evaluation: Alice measures at `a` or
/// `a_prime`, Bob at `b` or `b_prime` (radians).
#[derive(Debug, Clone, Copy)]
pub struct AnalyzerSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl AnalyzerSettings {
    /// The canonical settings (0°, 45°, 22.5°, 67.5°), which maximize S on
    /// relative-phase-free Bell states.
    pub fn canonical() -> Self {
        Self {
            a: 0.0,
            a_prime: 45f64.to_radians(),
            b: 22.5f64.to_radians(),
            b_prime: 67.5f64.to_radians(),
        }
    }
}

fn linear_projector(angle: f64) -> Matrix2<C64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(
        C64::new(c * c, 0.0),
        C64::new(c * s, 0.0),
        C64::new(s * c, 0.0),
        C64::new(s * s, 0.0),
    )
}

/// Polarization correlation E(α, β) = p(++) + p(−−) − p(+−) − p(−+) for
/// linear analyzers at α (Alice) and β (Bob), from the Born rule.
pub fn correlation_e(state: &DensityMatrix4, alpha: f64, beta: f64) -> f64 {
    let plus_a = linear_projector(alpha);
    let minus_a = linear_projector(alpha + std::f64::consts::FRAC_PI_2);
    let plus_b = linear_projector(beta);
    let minus_b = linear_projector(beta + std::f64::consts::FRAC_PI_2);

    let prob = |pa: &Matrix2<C64>, pb: &Matrix2<C64>| -> f64 {
        (kron2(pa, pb) * state.matrix()).trace().re
    };

    prob(&plus_a, &plus_b) + prob(&minus_a, &minus_b)
        - prob(&plus_a, &minus_b)
        - prob(&minus_a, &plus_b)
}

/// Operational CHSH parameter
/// S = |E(a,b) − E(a,b′)| + |E(a′,b) + E(a′,b′)|.
pub fn chsh_from_state(state: &DensityMatrix4, settings: &AnalyzerSettings) -> f64 {
    let e_ab = correlation_e(state, settings.a, settings.b);
    let e_ab2 = correlation_e(state, settings.a, settings.b_prime);
    let e_a2b = correlation_e(state, settings.a_prime, settings.b);
    let e_a2b2 = correlation_e(state, settings.a_prime, settings.b_prime);
    (e_ab - e_ab2).abs() + (e_a2b + e_a2b2).abs()
}

/// Receiver half-wave-plate angle θ ∈ [0, π/2) that cancels the total
/// relative phase: 4θ ≡ φ_un + 4θ_P (mod 2π), so the compensated state is a
/// relative-phase-free Bell state.
pub fn compensation_angle(phi_un: f64, theta_h_p: f64) -> f64 {
    (phi_un + 4.0 * theta_h_p).rem_euclid(std::f64::consts::TAU) / 4.0
}
