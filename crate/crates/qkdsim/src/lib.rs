//! Desk-scale simulator for entanglement-based quantum key distribution
//! (BBM92) with phase-shifted Bell states.
//!
//! A wave-plate stack (quarter–half–quarter) imprints a geometric phase on
//! the pump or on one receiver arm, continuously tuning the relative phase
//! of the shared Bell state. This crate models the whole chain at the
//! density-matrix level:
//!
//! * [`jones`] — 2×2 polarization calculus and the geometric-phase element
//! * [`biphoton`] — two-qubit states, the pump/receiver phase-transfer
//!   chain, noise mixing, fidelity and concurrence
//! * [`metrics`] — CHSH, visibility and QBER laws versus the relative
//!   phase, and the compensation-angle solver
//! * [`source`] — the pair source: pump angle and crystal displacement map
//!   to the emitted state; seeded Poisson event streams
//! * [`station`] — polarization analysis stations with passive basis choice
//! * [`tomography`] — 36-setting state tomography with physical projection
//! * [`protocol`] — coincidence pairing, sifting, QBER estimation, abort
//!   logic and asymptotic key rate
//! * [`compensator`] — feedback minimization of the QBER over the receiver
//!   angle, oscillation-law fitting and phase estimation
//! * [`experiments`] — seeded experiment drivers emitting CSV/JSON
//!
//! Every random path is seeded and reruns are byte-identical.
//!
//! # Entry points
//!
//! Each major capability has a runnable example (`cargo run --example
//! phase_shifted_bell`, `--example pump_phase_sweep`, ...); the `qkdsim`
//! binary drives the same experiment runners from a TOML config:
//!
//! ```sh
//! qkdsim sweep-pump-phase --config run.toml --seed 7 --compensation on
//! ```

pub mod biphoton;
pub mod compensator;
pub mod config;
pub mod error;
pub mod experiments;
pub mod jones;
pub mod metrics;
pub mod protocol;
pub mod seeding;
pub mod source;
pub mod station;
pub mod tomography;

pub use biphoton::{
    apply_local, concurrence, fidelity, ket_to_density, phase_shifted_bell, phi_minus, phi_plus,
    state_after_pump_gp, state_after_receiver_gp, werner_mix, BellSign, BellStateSpec,
    DensityMatrix4, Party, TwoQubitKet,
};
pub use error::{Error, Result};
pub use jones::{compose, hwp, qhq, qwp, JonesMatrix, JonesVector, WavePlateKind, WavePlateSetting};
pub use metrics::{
    chsh_from_state, chsh_s, compensation_angle, correlation_e, qber_analytic,
    secure_phase_window, visibility, AnalyzerSettings, MetricsReport, PhaseWindow,
    QBER_SECURITY_THRESHOLD,
};
pub use protocol::{run_session, SessionConfig, SessionReport, TargetBell};
pub use source::{PairEvent, SourceConfig};
pub use station::{Basis, DetectionRecord, StationConfig};
