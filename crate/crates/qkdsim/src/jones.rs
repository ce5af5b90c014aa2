//! Jones calculus for single-photon polarization: wave-plate matrices, the
//! quarter–half–quarter (QHQ) geometric-phase element, and helpers for
//! comparing states and operators up to a global phase.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * The basis is (H, V); fast-axis angles are measured counterclockwise from
//!   the horizontal axis, in radians.
//! * A retarder with retardance `δ` and fast axis at `θ` is
//!   `R(θ) · diag(1, e^{-iδ}) · R(-θ)`, i.e. the slow-axis component picks up
//!   the phasor `e^{-iδ}`. Under this sign choice `hwp(π/8)` maps H to the
//!   diagonal state D, and the literal product `qwp(π/4)·hwp(θ)·qwp(π/4)`
//!   equals `qhq(θ)` up to the constant global phase `e^{-iπ/2}`.
//! * Wave plates are π-periodic in the fast-axis angle; constructors reduce
//!   the angle modulo π.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for algebraic identities that are exact in real arithmetic.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Residual global phase of the literal Q(45°)·H(θ)·Q(45°) product relative
/// to [`qhq`]: `product = QHQ_GLOBAL_PHASE · qhq(θ)`.
pub fn qhq_global_phase() -> C64 {
    -C64::i()
}

/// A single-photon polarization state, components (H, V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    components: Vector2<C64>,
}

impl JonesVector {
    pub fn new(h: C64, v: C64) -> Self {
        Self {
            components: Vector2::new(h, v),
        }
    }

    /// Builds a normalized state, rejecting near-zero input.
    pub fn normalized(h: C64, v: C64) -> Result<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if norm < 1e-15 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self::new(h / norm, v / norm))
    }

    pub fn horizontal() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// D = (H + V)/√2.
    pub fn diagonal() -> Self {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(s, s)
    }

    /// A = (H − V)/√2.
    pub fn antidiagonal() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(C64::new(s, 0.0), C64::new(-s, 0.0))
    }

    /// R = (H + iV)/√2.
    pub fn right_circular() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(C64::new(s, 0.0), C64::new(0.0, s))
    }

    /// L = (H − iV)/√2.
    pub fn left_circular() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(C64::new(s, 0.0), C64::new(0.0, -s))
    }

    /// Linear polarization at `angle` from horizontal.
    pub fn linear(angle: f64) -> Self {
        Self::new(C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0))
    }

    pub fn h(&self) -> C64 {
        self.components[0]
    }

    pub fn v(&self) -> C64 {
        self.components[1]
    }

    pub fn norm(&self) -> f64 {
        self.components.norm()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() < tol
    }

    pub(crate) fn as_vector(&self) -> &Vector2<C64> {
        &self.components
    }

    /// True iff `self = e^{iγ}·other` for some real γ, within `tol`.
    pub fn equal_up_to_global_phase(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_max_diff(self.components.as_slice(), other.components.as_slice()) < tol
    }
}

/// A 2×2 complex polarization transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    entries: Matrix2<C64>,
}

impl JonesMatrix {
    pub fn from_matrix(entries: Matrix2<C64>) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        Self {
            entries: Matrix2::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn apply(&self, state: &JonesVector) -> JonesVector {
        let out = self.entries * state.as_vector();
        JonesVector::new(out[0], out[1])
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn determinant(&self) -> C64 {
        self.entries[(0, 0)] * self.entries[(1, 1)] - self.entries[(0, 1)] * self.entries[(1, 0)]
    }

    /// Max-entry deviation of M†M from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let product = self.entries.adjoint() * self.entries;
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                dev = dev.max((product[(i, j)] - expected).norm());
            }
        }
        dev
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() < tol
    }

    /// True iff `self = e^{iγ}·other` for some real γ, within `tol`.
    pub fn equal_up_to_global_phase(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_max_diff(self.entries.as_slice(), other.entries.as_slice()) < tol
    }
}

impl std::ops::Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix {
            entries: self.entries * rhs.entries,
        }
    }
}

/// Wave-plate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavePlateKind {
    Half,
    Quarter,
}

/// A wave plate together with its fast-axis angle, stored reduced modulo π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePlateSetting {
    pub kind: WavePlateKind,
    fast_axis_angle: f64,
}

impl WavePlateSetting {
    pub fn new(kind: WavePlateKind, fast_axis_angle: f64) -> Self {
        Self {
            kind,
            fast_axis_angle: reduce_mod_pi(fast_axis_angle),
        }
    }

    /// The reduced angle in [0, π).
    pub fn fast_axis_angle(&self) -> f64 {
        self.fast_axis_angle
    }

    pub fn matrix(&self) -> JonesMatrix {
        match self.kind {
            WavePlateKind::Half => hwp(self.fast_axis_angle),
            WavePlateKind::Quarter => qwp(self.fast_axis_angle),
        }
    }
}

fn reduce_mod_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(std::f64::consts::PI);
    if r >= std::f64::consts::PI {
        0.0
    } else {
        r
    }
}

fn rotation(theta: f64) -> Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(
        C64::new(c, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(c, 0.0),
    )
}

/// Half-wave plate with fast axis at `theta`:
/// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`. Maps H to D at θ = π/8.
pub fn hwp(theta: f64) -> JonesMatrix {
    let t = reduce_mod_pi(theta);
    let (s2, c2) = (2.0 * t).sin_cos();
    JonesMatrix::from_matrix(Matrix2::new(
        C64::new(c2, 0.0),
        C64::new(s2, 0.0),
        C64::new(s2, 0.0),
        C64::new(-c2, 0.0),
    ))
}

/// Quarter-wave plate with fast axis at `theta`: `R(θ)·diag(1, −i)·R(−θ)`.
///
/// Two of these in series at the same angle reproduce [`hwp`] exactly.
pub fn qwp(theta: f64) -> JonesMatrix {
    let t = reduce_mod_pi(theta);
    let retarder = Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
    );
    JonesMatrix::from_matrix(rotation(t) * retarder * rotation(-t))
}

/// The geometric-phase element: a half-wave plate at `theta_h` between two
/// quarter-wave plates at 45°, in closed form
/// `diag(e^{2iθ}, −e^{−2iθ})`.
///
/// The element imparts a relative phase of `4θ + π` (mod 2π) between the H
/// and V components; its determinant is −1 for every angle.
pub fn qhq(theta_h: f64) -> JonesMatrix {
    let t = reduce_mod_pi(theta_h);
    let (s2, c2) = (2.0 * t).sin_cos();
    JonesMatrix::from_matrix(Matrix2::new(
        C64::new(c2, s2),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-c2, s2),
    ))
}

/// Right-to-left product of a sequence of elements: the first element of the
/// slice acts first on the state.
pub fn compose(elements: &[JonesMatrix]) -> Result<JonesMatrix> {
    let mut iter = elements.iter();
    let first = iter.next().ok_or(Error::EmptySequence)?;
    let mut acc = *first;
    for m in iter {
        acc = *m * acc;
    }
    Ok(acc)
}

/// Aligns `b` onto `a` with the global phase read off the largest-magnitude
/// entry, then returns the maximum entrywise deviation.
pub(crate) fn phase_aligned_max_diff(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut k = 0;
    let mut best = -1.0;
    for (i, x) in a.iter().enumerate() {
        if x.norm() > best {
            best = x.norm();
            k = i;
        }
    }
    if a[k].norm() < 1e-15 {
        // a is numerically zero; no phase to align.
        return b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    }
    if b[k].norm() < 1e-15 {
        return a[k].norm();
    }
    let ratio = a[k] / b[k];
    let phase = ratio / ratio.norm();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

/// True iff `a = e^{iγ}·b` for some real γ, within `tol`.
pub fn matrices_equal_up_to_global_phase(a: &JonesMatrix, b: &JonesMatrix, tol: f64) -> bool {
    a.equal_up_to_global_phase(b, tol)
}

/// Haar-random 2×2 unitary, for randomized checks.
pub fn haar_random_unitary<R: rand::Rng + ?Sized>(rng: &mut R) -> JonesMatrix {
    use rand_distr::{Distribution, StandardNormal};
    // Ginibre sample followed by Gram-Schmidt.
    let g = |rng: &mut R| -> C64 {
        C64::new(
            StandardNormal.sample(rng),
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
        )
    };
    let a = Vector2::new(g(rng), g(rng));
    let a = a / C64::new(a.norm(), 0.0);
    let mut b = Vector2::new(g(rng), g(rng));
    let overlap = a.dotc(&b);
    b -= a * overlap;
    let b = b / C64::new(b.norm(), 0.0);
    // Random phase on the second column keeps the distribution Haar.
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    JonesMatrix::from_matrix(Matrix2::new(a[0], b[0] * phase, a[1], b[1] * phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    #[test]
    fn hwp_at_zero_fixes_horizontal() {
        let out = hwp(0.0).apply(&JonesVector::horizontal());
        assert!(out.equal_up_to_global_phase(&JonesVector::horizontal(), ALGEBRAIC_TOL));
    }

    #[test]
    fn hwp_at_22p5_maps_h_to_d() {
        let out = hwp(FRAC_PI_8).apply(&JonesVector::horizontal());
        assert!(out.equal_up_to_global_phase(&JonesVector::diagonal(), ALGEBRAIC_TOL));
    }

    #[test]
    fn hwp_at_45_swaps_h_and_v() {
        let out = hwp(FRAC_PI_4).apply(&JonesVector::horizontal());
        assert!(out.equal_up_to_global_phase(&JonesVector::vertical(), ALGEBRAIC_TOL));
    }

    #[test]
    fn qwp_at_zero_is_diagonal_retarder() {
        let m = qwp(0.0);
        assert!((m.entry(0, 0) - C64::new(1.0, 0.0)).norm() < ALGEBRAIC_TOL);
        assert!((m.entry(1, 1) - C64::new(0.0, -1.0)).norm() < ALGEBRAIC_TOL);
        assert!(m.entry(0, 1).norm() < ALGEBRAIC_TOL);
        assert!(m.entry(1, 0).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn qwp_at_45_makes_circular_light_from_h() {
        let out = qwp(FRAC_PI_4).apply(&JonesVector::horizontal());
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.h().norm() - inv_sqrt2).abs() < ALGEBRAIC_TOL);
        assert!((out.v().norm() - inv_sqrt2).abs() < ALGEBRAIC_TOL);
        let rel = out.v() / out.h();
        assert!((rel.arg().abs() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn two_quarter_waves_make_a_half_wave() {
        for &theta in &[0.0, 0.3, FRAC_PI_8, 1.2, 2.9] {
            let twice = qwp(theta) * qwp(theta);
            assert!(twice.equal_up_to_global_phase(&hwp(theta), ALGEBRAIC_TOL));
        }
    }

    #[test]
    fn qhq_at_zero_is_diag_one_minus_one() {
        let m = qhq(0.0);
        assert!((m.entry(0, 0) - C64::new(1.0, 0.0)).norm() < ALGEBRAIC_TOL);
        assert!((m.entry(1, 1) - C64::new(-1.0, 0.0)).norm() < ALGEBRAIC_TOL);
        assert!(m.entry(0, 1).norm() < ALGEBRAIC_TOL);
        assert!(m.entry(1, 0).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn qhq_at_22p5_matches_closed_form() {
        // diag(e^{iπ/4}, −e^{−iπ/4})
        let m = qhq(FRAC_PI_8);
        let expected_00 = C64::from_polar(1.0, PI / 4.0);
        let expected_11 = -C64::from_polar(1.0, -PI / 4.0);
        assert!((m.entry(0, 0) - expected_00).norm() < ALGEBRAIC_TOL);
        assert!((m.entry(1, 1) - expected_11).norm() < ALGEBRAIC_TOL);
    }

    #[test]
    fn qhq_equals_explicit_product_up_to_global_phase() {
        // Oracle: the literal Q(45°)·H(θ)·Q(45°) product.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let theta = rand::Rng::random_range(&mut rng, 0.0..PI);
            let product = compose(&[qwp(FRAC_PI_4), hwp(theta), qwp(FRAC_PI_4)]).unwrap();
            assert!(
                product.equal_up_to_global_phase(&qhq(theta), 1e-10),
                "mismatch at theta = {theta}"
            );
            // The residual global phase is e^{-iπ/2}.
            let aligned = qhq(theta).matrix() * qhq_global_phase();
            let dev: f64 = (product.matrix() - aligned)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-10);
        }
    }

    #[test]
    fn compose_identity_and_involution() {
        let identity = JonesMatrix::identity();
        let composed = compose(&[identity]).unwrap();
        assert!(composed.equal_up_to_global_phase(&identity, ALGEBRAIC_TOL));

        let twice = compose(&[hwp(0.0), hwp(0.0)]).unwrap();
        assert!(twice.equal_up_to_global_phase(&identity, ALGEBRAIC_TOL));
    }

    #[test]
    fn compose_rejects_empty_sequence() {
        assert!(matches!(compose(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn global_phase_comparison_basics() {
        let a = JonesVector::horizontal();
        let rotated = JonesVector::new(C64::from_polar(1.0, PI / 3.0), C64::new(0.0, 0.0));
        assert!(a.equal_up_to_global_phase(&rotated, ALGEBRAIC_TOL));
        assert!(!a.equal_up_to_global_phase(&JonesVector::vertical(), ALGEBRAIC_TOL));

        for &theta in &[0.1, 0.9, 2.2] {
            let m = qhq(theta);
            let negated = JonesMatrix::from_matrix(-m.matrix());
            assert!(m.equal_up_to_global_phase(&negated, ALGEBRAIC_TOL));
        }
    }

    #[test]
    fn geometric_phase_law() {
        // Relative phase imparted between H and V is 4θ + π (mod 2π).
        for &theta in &[0.0, 0.2, FRAC_PI_8, 1.0, 1.5, 2.5] {
            let m = qhq(theta);
            let imparted = (m.entry(0, 0) / m.entry(1, 1)).arg().rem_euclid(2.0 * PI);
            let expected = (4.0 * theta + PI).rem_euclid(2.0 * PI);
            let delta = (imparted - expected).rem_euclid(2.0 * PI);
            let delta = delta.min(2.0 * PI - delta);
            assert!(delta < 1e-10, "theta {theta}: {imparted} vs {expected}");
        }
    }

    #[test]
    fn qhq_determinant_is_minus_one() {
        for &theta in &[0.0, 0.7, 1.3, 2.0, 3.0] {
            let det = qhq(theta).determinant();
            assert!((det + C64::new(1.0, 0.0)).norm() < ALGEBRAIC_TOL);
        }
    }

    #[test]
    fn waveplate_setting_reduces_angle() {
        let s = WavePlateSetting::new(WavePlateKind::Half, 1.0 + PI);
        assert!((s.fast_axis_angle() - 1.0).abs() < 1e-12);
        let t = WavePlateSetting::new(WavePlateKind::Quarter, -0.25);
        assert!(t.fast_axis_angle() >= 0.0 && t.fast_axis_angle() < PI);
    }

    proptest! {
        #[test]
        fn constructors_are_unitary(theta in -10.0f64..10.0) {
            prop_assert!(hwp(theta).unitarity_deviation() < ALGEBRAIC_TOL);
            prop_assert!(qwp(theta).unitarity_deviation() < ALGEBRAIC_TOL);
            prop_assert!(qhq(theta).unitarity_deviation() < ALGEBRAIC_TOL);
        }

        #[test]
        fn pi_periodicity(theta in 0.0f64..std::f64::consts::PI) {
            let a = hwp(theta);
            let b = hwp(theta + PI);
            prop_assert!(a.equal_up_to_global_phase(&b, 1e-11));
            let c = qhq(theta);
            let d = qhq(theta + PI);
            prop_assert!(c.equal_up_to_global_phase(&d, 1e-11));
        }

        #[test]
        fn random_unitaries_are_unitary(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let u = haar_random_unitary(&mut rng);
            prop_assert!(u.unitarity_deviation() < 1e-10);
        }
    }
}
