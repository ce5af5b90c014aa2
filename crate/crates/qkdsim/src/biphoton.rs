//! Two-qubit polarization states in the (HH, HV, VH, VV) basis: phase-shifted
//! Bell states, local-unitary application, the pump/receiver geometric-phase
//! transfer chain, white-noise mixing, and state metrics.
//!
//! The first tensor factor is Alice's photon. All comparisons of kets are up
//! to a global phase; [`TwoQubitKet::canonicalized`] fixes the HH amplitude
//! to be real and positive so that sign conventions cannot leak into
//! assertions.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::{phase_aligned_max_diff, JonesMatrix, C64};

/// Basis labels, in amplitude order.
pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const MIN_EIGENVALUE_FLOOR: f64 = -1e-8;

/// Which party a local operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// The ± branch of a phase-shifted Bell state (|HH⟩ ± e^{iφ}|VV⟩)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

/// Specification of a phase-shifted Bell state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellStateSpec {
    relative_phase: f64,
    pub sign: BellSign,
}

impl BellStateSpec {
    /// Stores the relative phase reduced to [0, 2π).
    pub fn new(relative_phase: f64, sign: BellSign) -> Self {
        Self {
            relative_phase: relative_phase.rem_euclid(std::f64::consts::TAU),
            sign,
        }
    }

    pub fn relative_phase(&self) -> f64 {
        self.relative_phase
    }
}

/// A pure two-qubit polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitKet {
    amplitudes: Vector4<C64>,
}

impl TwoQubitKet {
    /// Builds a state from amplitudes in (HH, HV, VH, VV) order, rejecting
    /// unnormalized input.
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let v = Vector4::from_row_slice(&amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes: v })
    }

    pub(crate) fn from_vector_renormalized(v: Vector4<C64>) -> Self {
        let norm = v.norm();
        Self {
            amplitudes: v / C64::new(norm, 0.0),
        }
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [
            self.amplitudes[0],
            self.amplitudes[1],
            self.amplitudes[2],
            self.amplitudes[3],
        ]
    }

    pub(crate) fn as_vector(&self) -> &Vector4<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Multiplies by the global phase that makes the HH amplitude real and
    /// positive (falling back to the largest-magnitude amplitude when HH is
    /// numerically zero).
    pub fn canonicalized(&self) -> Self {
        let mut reference = self.amplitudes[0];
        if reference.norm() < 1e-9 {
            let mut best = 0.0;
            for i in 0..4 {
                if self.amplitudes[i].norm() > best {
                    best = self.amplitudes[i].norm();
                    reference = self.amplitudes[i];
                }
            }
        }
        if reference.norm() < 1e-15 {
            return *self;
        }
        let phase = reference.conj() / reference.norm();
        Self {
            amplitudes: self.amplitudes * phase,
        }
    }

    /// True iff `self = e^{iγ}·other` for some real γ, within `tol`.
    pub fn equal_up_to_global_phase(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_max_diff(self.amplitudes.as_slice(), other.amplitudes.as_slice()) < tol
    }

    /// For a state of the form (|HH⟩ + e^{iφ}|VV⟩)/√2 up to global phase,
    /// returns φ in [0, 2π). `None` when the HV/VH amplitudes are not
    /// negligible or the diagonal amplitudes are unbalanced.
    pub fn bell_relative_phase(&self) -> Option<f64> {
        let a = self.amplitudes;
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        if a[1].norm() > 1e-9 || a[2].norm() > 1e-9 {
            return None;
        }
        if (a[0].norm() - inv_sqrt2).abs() > 1e-9 || (a[3].norm() - inv_sqrt2).abs() > 1e-9 {
            return None;
        }
        Some((a[3] / a[0]).arg().rem_euclid(std::f64::consts::TAU))
    }
}

/// (|HH⟩ ± e^{iφ}|VV⟩)/√2, with exactly zero HV and VH amplitudes.
pub fn phase_shifted_bell(spec: BellStateSpec) -> TwoQubitKet {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let sign = match spec.sign {
        BellSign::Plus => C64::new(1.0, 0.0),
        BellSign::Minus => C64::new(-1.0, 0.0),
    };
    let vv = sign * C64::from_polar(inv_sqrt2, spec.relative_phase());
    TwoQubitKet {
        amplitudes: Vector4::new(
            C64::new(inv_sqrt2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            vv,
        ),
    }
}

/// Φ⁺ = (|HH⟩ + |VV⟩)/√2.
pub fn phi_plus() -> TwoQubitKet {
    phase_shifted_bell(BellStateSpec::new(0.0, BellSign::Plus))
}

/// Φ⁻ = (|HH⟩ − |VV⟩)/√2.
pub fn phi_minus() -> TwoQubitKet {
    phase_shifted_bell(BellStateSpec::new(0.0, BellSign::Minus))
}

pub(crate) fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

const UNITARY_TOL: f64 = 1e-9;

/// Applies `u_a ⊗ u_b` to the state, with a renormalization guard.
/// Non-unitary inputs are rejected.
pub fn apply_local(u_a: &JonesMatrix, u_b: &JonesMatrix, s: &TwoQubitKet) -> Result<TwoQubitKet> {
    for u in [u_a, u_b] {
        let dev = u.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
    }
    let op = kron2(u_a.matrix(), u_b.matrix());
    Ok(TwoQubitKet::from_vector_renormalized(op * s.as_vector()))
}

/// State emitted by the source when the pump carries a geometric phase from a
/// half-wave plate at `theta_h_p` inside the pump QHQ element, on top of an
/// unknown phase `phi_un` picked up during generation or distribution:
/// (|HH⟩ − e^{i(φ_un + 4θ)}|VV⟩)/√2, global phase dropped.
pub fn state_after_pump_gp(phi_un: f64, theta_h_p: f64) -> TwoQubitKet {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let vv = -C64::from_polar(inv_sqrt2, phi_un + 4.0 * theta_h_p);
    TwoQubitKet {
        amplitudes: Vector4::new(
            C64::new(inv_sqrt2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            vv,
        ),
    }
}

/// Applies the receiver-side geometric-phase element (a QHQ with its
/// half-wave plate at `theta_h_ab`) to one party's photon. The result is
/// canonicalized, which drops the global phase: a phase-shifted Bell input
/// with relative phase φ comes out with relative phase φ − 4θ + π.
pub fn state_after_receiver_gp(s: &TwoQubitKet, theta_h_ab: f64, party: Party) -> TwoQubitKet {
    let gp = crate::jones::qhq(theta_h_ab);
    let identity = JonesMatrix::identity();
    let (u_a, u_b) = match party {
        Party::A => (&gp, &identity),
        Party::B => (&identity, &gp),
    };
    apply_local(u_a, u_b, s)
        .expect("qhq is unitary")
        .canonicalized()
}

/// A 4×4 density matrix, validated to be Hermitian, unit trace, and
/// positive semidefinite up to numerical tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4 {
    entries: Matrix4<C64>,
}

impl DensityMatrix4 {
    pub fn new(entries: Matrix4<C64>) -> Result<Self> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix that is known physical by construction.
    pub(crate) fn from_matrix_unchecked(entries: Matrix4<C64>) -> Self {
        Self { entries }
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: Matrix4::identity() * C64::new(0.25, 0.0),
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let adj = self.entries.adjoint();
        (self.entries - adj)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues (ascending) and eigenvectors of the Hermitian part.
    pub fn herm_eigen(&self) -> (Vector4<f64>, Matrix4<C64>) {
        herm_eigen(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = self.herm_eigen();
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::UnphysicalState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let trace = self.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::UnphysicalState(format!("trace is {trace}, not 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < MIN_EIGENVALUE_FLOOR {
            return Err(Error::UnphysicalState(format!(
                "minimum eigenvalue {min_eig:.3e} below tolerance"
            )));
        }
        Ok(())
    }

    /// (u_a ⊗ u_b) ρ (u_a ⊗ u_b)†.
    pub fn transformed(&self, u_a: &JonesMatrix, u_b: &JonesMatrix) -> Self {
        let op = kron2(u_a.matrix(), u_b.matrix());
        Self {
            entries: op * self.entries * op.adjoint(),
        }
    }

    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        (self.entries - other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// JSON document with the basis order in the header.
    pub fn to_json(&self) -> DensityMatrixJson {
        let mut rho = [[[0.0; 2]; 4]; 4];
        for (i, row) in rho.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = [self.entries[(i, j)].re, self.entries[(i, j)].im];
            }
        }
        DensityMatrixJson {
            basis: BASIS_LABELS.map(str::to_owned),
            rho,
        }
    }

    pub fn from_json(doc: &DensityMatrixJson) -> Result<Self> {
        for (i, label) in doc.basis.iter().enumerate() {
            if label != BASIS_LABELS[i] {
                return Err(Error::InvalidConfig(format!(
                    "unexpected basis order {:?}",
                    doc.basis
                )));
            }
        }
        let mut m = Matrix4::zeros();
        for (i, row) in doc.rho.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                m[(i, j)] = C64::new(entry[0], entry[1]);
            }
        }
        Self::new(m)
    }
}

/// Serialized form of a density matrix: a 4×4 array of [re, im] pairs plus
/// the basis order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub basis: [String; 4],
    pub rho: [[[f64; 2]; 4]; 4],
}

/// Hermitian eigendecomposition of the symmetrized matrix.
pub(crate) fn herm_eigen(m: &Matrix4<C64>) -> (Vector4<f64>, Matrix4<C64>) {
    let symmetrized = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(symmetrized);
    (eig.eigenvalues, eig.eigenvectors)
}

/// Rank-1 projector |s⟩⟨s|.
pub fn ket_to_density(s: &TwoQubitKet) -> DensityMatrix4 {
    let v = s.as_vector();
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    DensityMatrix4::from_matrix_unchecked(m)
}

/// (1−p)|s⟩⟨s| + p·I/4.
pub fn werner_mix(s: &TwoQubitKet, p: f64) -> Result<DensityMatrix4> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidProbability { value: p });
    }
    let pure = ket_to_density(s);
    let mixed = pure.matrix() * C64::new(1.0 - p, 0.0)
        + Matrix4::identity() * C64::new(p / 4.0, 0.0);
    Ok(DensityMatrix4::from_matrix_unchecked(mixed))
}

/// Pure-target fidelity F = ⟨target|ρ|target⟩.
pub fn fidelity(rho: &DensityMatrix4, target: &TwoQubitKet) -> Result<f64> {
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm });
    }
    let v = target.as_vector();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i].conj() * rho.entry(i, j) * v[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Wootters concurrence from the spin-flipped spectrum:
/// max(0, λ₁ − λ₂ − λ₃ − λ₄) with λᵢ the square roots of the eigenvalues of
/// √ρ·ρ̃·√ρ sorted descending, ρ̃ = (σy⊗σy)ρ*(σy⊗σy).
///
/// Rank-1 inputs take the exact route C² = 2(1 − Tr ρ_A²), which avoids the
/// eigensolver's error floor.
pub fn concurrence(rho: &DensityMatrix4) -> f64 {
    if (rho.purity() - 1.0).abs() < 1e-10 {
        // Reduced state of the first qubit.
        let m = rho.matrix();
        let a00 = m[(0, 0)] + m[(1, 1)];
        let a01 = m[(0, 2)] + m[(1, 3)];
        let a10 = m[(2, 0)] + m[(3, 1)];
        let a11 = m[(2, 2)] + m[(3, 3)];
        let purity_a = (a00 * a00 + a01 * a10 + a10 * a01 + a11 * a11).re;
        return (2.0 * (1.0 - purity_a)).max(0.0).sqrt().min(1.0);
    }
    concurrence_wootters(rho)
}

fn concurrence_wootters(rho: &DensityMatrix4) -> f64 {
    let sigma_yy = {
        let y = Matrix2::new(
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        );
        kron2(&y, &y)
    };
    let conj = rho.matrix().map(|z| z.conj());
    let rho_tilde = sigma_yy * conj * sigma_yy;

    let (vals, vecs) = rho.herm_eigen();
    let mut sqrt_rho: Matrix4<C64> = Matrix4::zeros();
    for k in 0..4 {
        let lambda = vals[k].max(0.0).sqrt();
        let col = vecs.column(k);
        for i in 0..4 {
            for j in 0..4 {
                sqrt_rho[(i, j)] += col[i] * col[j].conj() * C64::new(lambda, 0.0);
            }
        }
    }

    let h = sqrt_rho * rho_tilde * sqrt_rho;
    let (hvals, _) = herm_eigen(&h);
    let mut lambdas: Vec<f64> = hvals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Haar-random pure two-qubit state, for randomized checks.
pub fn haar_random_ket<R: rand::Rng + ?Sized>(rng: &mut R) -> TwoQubitKet {
    use rand_distr::{Distribution, StandardNormal};
    let mut v = Vector4::zeros();
    for i in 0..4 {
        v[i] = C64::new(
            StandardNormal.sample(rng),
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
        );
    }
    TwoQubitKet::from_vector_renormalized(v)
}

/// Random full-rank physical state: a random mixture of four Haar-random
/// pure states.
pub fn random_density_matrix<R: rand::Rng + ?Sized>(rng: &mut R) -> DensityMatrix4 {
    let mut weights = [0.0; 4];
    let mut total = 0.0;
    for w in &mut weights {
        *w = rng.random_range(0.05..1.0);
        total += *w;
    }
    let mut m = Matrix4::zeros();
    for &w in &weights {
        let ket = haar_random_ket(rng);
        m += ket_to_density(&ket).matrix() * C64::new(w / total, 0.0);
    }
    DensityMatrix4::from_matrix_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::{qhq, JonesMatrix};
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn ket(amp: [(f64, f64); 4]) -> TwoQubitKet {
        TwoQubitKet::new([
            C64::new(amp[0].0, amp[0].1),
            C64::new(amp[1].0, amp[1].1),
            C64::new(amp[2].0, amp[2].1),
            C64::new(amp[3].0, amp[3].1),
        ])
        .unwrap()
    }

    #[test]
    fn bell_state_construction() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = phase_shifted_bell(BellStateSpec::new(0.0, BellSign::Plus));
        assert!(plus.equal_up_to_global_phase(&ket([(s, 0.0), (0.0, 0.0), (0.0, 0.0), (s, 0.0)]), 1e-12));

        let minus = phase_shifted_bell(BellStateSpec::new(PI, BellSign::Plus));
        assert!(minus.equal_up_to_global_phase(&phi_minus(), 1e-12));

        // (φ=π/2, −) → (1/√2)(1, 0, 0, −i)
        let quarter = phase_shifted_bell(BellStateSpec::new(FRAC_PI_2, BellSign::Minus));
        assert!(quarter.equal_up_to_global_phase(&ket([(s, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, -s)]), 1e-12));

        let amps = quarter.amplitudes();
        assert_eq!(amps[1], C64::new(0.0, 0.0));
        assert_eq!(amps[2], C64::new(0.0, 0.0));
    }

    #[test]
    fn apply_local_identity_is_noop() {
        let s = phase_shifted_bell(BellStateSpec::new(1.234, BellSign::Plus));
        let identity = JonesMatrix::identity();
        let out = apply_local(&identity, &identity, &s).unwrap();
        assert!(out.equal_up_to_global_phase(&s, 1e-12));
    }

    #[test]
    fn apply_local_rejects_non_unitary() {
        let bad = JonesMatrix::from_matrix(nalgebra::Matrix2::new(
            C64::new(2.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ));
        let res = apply_local(&bad, &JonesMatrix::identity(), &phi_plus());
        assert!(matches!(res, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn receiver_gp_on_phi_plus_shifts_phase() {
        // Oracle: direct tensor-product computation. qhq(θ)⊗I on Φ⁺ gives
        // (e^{2iθ}|HH⟩ − e^{−2iθ}|VV⟩)/√2, i.e. relative phase π − 4θ.
        for &theta in &[0.0, 0.2, 0.9, 1.7] {
            let out = apply_local(&qhq(theta), &JonesMatrix::identity(), &phi_plus()).unwrap();
            let expected =
                phase_shifted_bell(BellStateSpec::new(PI - 4.0 * theta, BellSign::Plus));
            assert!(out.equal_up_to_global_phase(&expected, 1e-12), "theta {theta}");
        }
    }

    #[test]
    fn local_unitaries_preserve_concurrence() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = crate::jones::haar_random_unitary(&mut rng);
            let v = crate::jones::haar_random_unitary(&mut rng);
            let s = apply_local(&u, &v, &phi_plus()).unwrap();
            let c = concurrence(&ket_to_density(&s));
            assert!((c - 1.0).abs() < 1e-9, "concurrence {c}");
        }
    }

    #[test]
    fn pump_gp_reference_points() {
        // (φ_un=0, θ=0) → Φ⁻
        let s = state_after_pump_gp(0.0, 0.0);
        assert!(s.equal_up_to_global_phase(&phi_minus(), 1e-12));

        // (φ_un=0, θ=22.5°) → (|HH⟩ − i|VV⟩)/√2
        let s = state_after_pump_gp(0.0, 22.5f64.to_radians());
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let expected = ket([(inv_sqrt2, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, -inv_sqrt2)]);
        assert!(s.equal_up_to_global_phase(&expected, 1e-12));

        // (φ_un=0, θ=45°) → Φ⁺
        let s = state_after_pump_gp(0.0, 45f64.to_radians());
        assert!(s.equal_up_to_global_phase(&phi_plus(), 1e-12));
    }

    #[test]
    fn receiver_gp_reference_points() {
        // θ_AB = 0 on Φ⁻ gives Φ⁺ up to global phase.
        let out = state_after_receiver_gp(&phi_minus(), 0.0, Party::B);
        assert!(out.equal_up_to_global_phase(&phi_plus(), 1e-12));

        // Pump at 22.5°, receiver at −67.5° → Φ⁺.
        let input = state_after_pump_gp(0.0, 22.5f64.to_radians());
        let out = state_after_receiver_gp(&input, (-67.5f64).to_radians(), Party::B);
        assert!(out.equal_up_to_global_phase(&phi_plus(), 1e-12));
    }

    #[test]
    fn gp_chain_phase_bookkeeping() {
        // After the pump and receiver elements the plus-branch relative
        // phase is φ_un + 4θ_P − 4θ_AB: the source's built-in sign and the
        // receiver element's sign flip cancel.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..50 {
            let phi_un = rand::Rng::random_range(&mut rng, 0.0..TAU);
            let theta_p = rand::Rng::random_range(&mut rng, 0.0..PI);
            let theta_ab = rand::Rng::random_range(&mut rng, 0.0..PI);
            let out = state_after_receiver_gp(
                &state_after_pump_gp(phi_un, theta_p),
                theta_ab,
                Party::B,
            );
            let expected = phase_shifted_bell(BellStateSpec::new(
                phi_un + 4.0 * theta_p - 4.0 * theta_ab,
                BellSign::Plus,
            ));
            assert!(out.equal_up_to_global_phase(&expected, 1e-10));
        }
    }

    #[test]
    fn ket_to_density_corners_and_purity() {
        let rho = ket_to_density(&phi_plus());
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho.entry(i, j) - C64::new(0.5, 0.0)).norm() < 1e-12);
        }
        assert!((rho.entry(1, 1)).norm() < 1e-12);

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10 {
            let ket = haar_random_ket(&mut rng);
            let rho = ket_to_density(&ket);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!((rho.purity() - 1.0).abs() < 1e-10);
            // Idempotence of a rank-1 projector.
            let sq = rho.matrix() * rho.matrix();
            let dev: f64 = (sq - rho.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-10);
        }
    }

    #[test]
    fn werner_mix_limits() {
        let pure = werner_mix(&phi_plus(), 0.0).unwrap();
        assert!(pure.max_entry_distance(&ket_to_density(&phi_plus())) < 1e-12);

        let mixed = werner_mix(&phi_plus(), 1.0).unwrap();
        assert!(mixed.max_entry_distance(&DensityMatrix4::maximally_mixed()) < 1e-12);

        assert!(werner_mix(&phi_plus(), -0.1).is_err());
        assert!(werner_mix(&phi_plus(), 1.1).is_err());
    }

    #[test]
    fn fidelity_reference_points() {
        assert!((fidelity(&ket_to_density(&phi_plus()), &phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&ket_to_density(&phi_minus()), &phi_plus()).unwrap() < 1e-12);

        // Werner admixture: F = (1−p) + p/4.
        let rho = werner_mix(&phi_plus(), 0.04).unwrap();
        assert!((fidelity(&rho, &phi_plus()).unwrap() - 0.97).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_unnormalized_target() {
        let bad = TwoQubitKet {
            amplitudes: Vector4::new(
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ),
        };
        assert!(fidelity(&ket_to_density(&phi_plus()), &bad).is_err());
    }

    #[test]
    fn concurrence_reference_points() {
        assert!((concurrence(&ket_to_density(&phi_plus())) - 1.0).abs() < 1e-10);
        assert!(concurrence(&DensityMatrix4::maximally_mixed()) < 1e-10);

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let phi = rand::Rng::random_range(&mut rng, 0.0..TAU);
            let c = concurrence(&ket_to_density(&phase_shifted_bell(BellStateSpec::new(
                phi,
                BellSign::Plus,
            ))));
            assert!((c - 1.0).abs() < 1e-10, "phi {phi}: concurrence {c}");
        }
    }

    #[test]
    fn concurrence_of_werner_states() {
        // C = max(0, (3p' − 1)/2) for visibility p' = 1 − p... frozen from the
        // standard Werner formula C = max(0, 1 − 3p/2) for (1−p)Φ⁺ + p I/4.
        for &(p, expected) in &[(0.0, 1.0), (0.4, 0.4), (2.0 / 3.0, 0.0), (0.9, 0.0)] {
            let rho = werner_mix(&phi_plus(), p).unwrap();
            let c = concurrence(&rho);
            assert!((c - expected).abs() < 1e-9, "p {p}: {c} vs {expected}");
        }
    }

    #[test]
    fn compensation_closure_via_chain() {
        // Whenever φ_un + 4θ_P − 4θ_AB ≡ 0 (mod 2π) the chain output is Φ⁺.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(23);
        for _ in 0..50 {
            let phi_un = rand::Rng::random_range(&mut rng, 0.0..TAU);
            let theta_p = rand::Rng::random_range(&mut rng, 0.0..PI);
            let theta_ab = (phi_un + 4.0 * theta_p).rem_euclid(TAU) / 4.0;
            let out = state_after_receiver_gp(
                &state_after_pump_gp(phi_un, theta_p),
                theta_ab,
                Party::B,
            );
            let f = fidelity(&ket_to_density(&out), &phi_plus()).unwrap();
            assert!((f - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn canonicalized_fixes_hh_phase() {
        let s = phase_shifted_bell(BellStateSpec::new(0.7, BellSign::Plus));
        let rotated = TwoQubitKet {
            amplitudes: s.amplitudes * C64::from_polar(1.0, 1.9),
        };
        let canon = rotated.canonicalized();
        assert!(canon.amplitudes()[0].im.abs() < 1e-12);
        assert!(canon.amplitudes()[0].re > 0.0);
        assert!(canon.equal_up_to_global_phase(&s, 1e-12));
    }

    #[test]
    fn density_matrix_json_roundtrip() {
        let rho = werner_mix(
            &phase_shifted_bell(BellStateSpec::new(1.1, BellSign::Plus)),
            0.2,
        )
        .unwrap();
        let doc = rho.to_json();
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: DensityMatrixJson = serde_json::from_str(&text).unwrap();
        let back = DensityMatrix4::from_json(&parsed).unwrap();
        assert!(rho.max_entry_distance(&back) < 1e-12);
        assert_eq!(parsed.basis[0], "HH");
    }

    #[test]
    fn validation_catches_bad_matrices() {
        let mut m = Matrix4::<C64>::identity();
        m[(0, 0)] = C64::new(2.0, 0.0);
        assert!(DensityMatrix4::new(m).is_err());

        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix4::new(m).is_err());
    }

    #[test]
    fn bell_relative_phase_readback() {
        for &phi in &[0.0, 0.4, 2.2, 5.0] {
            let s = phase_shifted_bell(BellStateSpec::new(phi, BellSign::Plus));
            let got = s.bell_relative_phase().unwrap();
            let delta = (got - phi).rem_euclid(TAU);
            assert!(delta.min(TAU - delta) < 1e-10);
        }
        assert!(haar_random_ket(&mut rand_chacha::ChaCha12Rng::seed_from_u64(2))
            .bell_relative_phase()
            .is_none());
    }
}
