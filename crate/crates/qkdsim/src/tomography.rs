//! Two-qubit state tomography: an overcomplete 36-setting measurement set,
//! synthetic count generation, linear (least-squares) reconstruction with
//! Hermiticity and unit trace enforced by the parameterization, and
//! projection of the spectrum onto the physical cone.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::biphoton::{fidelity, herm_eigen, kron2, DensityMatrix4, TwoQubitKet, BASIS_LABELS};
use crate::error::{Error, Result};
use crate::jones::C64;

/// Single-photon analyzer projectors used by the tomography stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjectorLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

pub const PROJECTOR_LABELS: [ProjectorLabel; 6] = [
    ProjectorLabel::H,
    ProjectorLabel::V,
    ProjectorLabel::D,
    ProjectorLabel::A,
    ProjectorLabel::R,
    ProjectorLabel::L,
];

impl ProjectorLabel {
    pub fn ket(&self) -> Vector2<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            ProjectorLabel::H => Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            ProjectorLabel::V => Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            ProjectorLabel::D => Vector2::new(C64::new(s, 0.0), C64::new(s, 0.0)),
            ProjectorLabel::A => Vector2::new(C64::new(s, 0.0), C64::new(-s, 0.0)),
            ProjectorLabel::R => Vector2::new(C64::new(s, 0.0), C64::new(0.0, s)),
            ProjectorLabel::L => Vector2::new(C64::new(s, 0.0), C64::new(0.0, -s)),
        }
    }

    pub fn projector(&self) -> Matrix2<C64> {
        let k = self.ket();
        Matrix2::new(
            k[0] * k[0].conj(),
            k[0] * k[1].conj(),
            k[1] * k[0].conj(),
            k[1] * k[1].conj(),
        )
    }

    /// The complete basis this projector belongs to (0: H/V, 1: D/A, 2: R/L).
    fn basis_group(&self) -> usize {
        match self {
            ProjectorLabel::H | ProjectorLabel::V => 0,
            ProjectorLabel::D | ProjectorLabel::A => 1,
            ProjectorLabel::R | ProjectorLabel::L => 2,
        }
    }

    /// Position within its basis (0 or 1).
    fn basis_slot(&self) -> usize {
        match self {
            ProjectorLabel::H | ProjectorLabel::D | ProjectorLabel::R => 0,
            _ => 1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProjectorLabel::H => "H",
            ProjectorLabel::V => "V",
            ProjectorLabel::D => "D",
            ProjectorLabel::A => "A",
            ProjectorLabel::R => "R",
            ProjectorLabel::L => "L",
        }
    }
}

impl std::str::FromStr for ProjectorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(ProjectorLabel::H),
            "V" => Ok(ProjectorLabel::V),
            "D" => Ok(ProjectorLabel::D),
            "A" => Ok(ProjectorLabel::A),
            "R" => Ok(ProjectorLabel::R),
            "L" => Ok(ProjectorLabel::L),
            other => Err(Error::UnknownProjector(other.to_owned())),
        }
    }
}

/// One tomography setting with its accumulated coincidence counts. Counts
/// are kept as floats so that exact-probability data can flow through the
/// same pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub projector_a: ProjectorLabel,
    pub projector_b: ProjectorLabel,
    pub counts: f64,
}

/// All 36 projector pairs from {H, V, D, A, R, L}².
pub fn standard_settings() -> Vec<(ProjectorLabel, ProjectorLabel)> {
    let mut settings = Vec::with_capacity(36);
    for a in PROJECTOR_LABELS {
        for b in PROJECTOR_LABELS {
            settings.push((a, b));
        }
    }
    settings
}

/// Born-rule probability of the coincidence outcome (a, b).
pub fn born_probability(state: &DensityMatrix4, a: ProjectorLabel, b: ProjectorLabel) -> f64 {
    let op = kron2(&a.projector(), &b.projector());
    (op * state.matrix()).trace().re.max(0.0)
}

/// Synthesizes counts for the standard settings: for each of the nine
/// basis-pair groups, `shots_per_setting` pairs are distributed
/// multinomially over the group's four outcomes. Deterministic for a given
/// RNG state.
pub fn synthesize_counts<R: Rng + ?Sized>(
    state: &DensityMatrix4,
    shots_per_setting: u64,
    rng: &mut R,
) -> Result<Vec<SettingCounts>> {
    if shots_per_setting == 0 {
        return Err(Error::InvalidConfig(
            "shots_per_setting must be positive".into(),
        ));
    }
    let settings = standard_settings();
    let mut out: Vec<SettingCounts> = settings
        .iter()
        .map(|&(a, b)| SettingCounts {
            projector_a: a,
            projector_b: b,
            counts: 0.0,
        })
        .collect();

    // Nine groups, four settings each; multinomial for each group.
    for ga in 0..3 {
        for gb in 0..3 {
            let mut members = Vec::with_capacity(4);
            for (idx, &(a, b)) in settings.iter().enumerate() {
                if a.basis_group() == ga && b.basis_group() == gb {
                    members.push(idx);
                }
            }
            let probs: Vec<f64> = members
                .iter()
                .map(|&i| born_probability(state, settings[i].0, settings[i].1))
                .collect();
            let total: f64 = probs.iter().sum();
            let mut remaining = shots_per_setting;
            let mut mass_left = total;
            for (k, &idx) in members.iter().enumerate() {
                if k == members.len() - 1 {
                    out[idx].counts = remaining as f64;
                    break;
                }
                let p = if mass_left > 1e-15 {
                    (probs[k] / mass_left).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let draw = rand_distr::Binomial::new(remaining, p)
                    .map_err(|e| Error::InvalidConfig(format!("binomial: {e}")))?
                    .sample(rng);
                out[idx].counts = draw as f64;
                remaining -= draw;
                mass_left -= probs[k];
            }
        }
    }
    Ok(out)
}

/// Infinite-statistics limit: exact Born probabilities scaled by the
/// per-setting shot count.
pub fn exact_counts(state: &DensityMatrix4, shots_per_setting: f64) -> Vec<SettingCounts> {
    standard_settings()
        .into_iter()
        .map(|(a, b)| SettingCounts {
            projector_a: a,
            projector_b: b,
            counts: born_probability(state, a, b) * shots_per_setting,
        })
        .collect()
}

/// Two-qubit Pauli operators σᵢ⊗σⱼ/2 for (i, j) ≠ (0, 0); together with
/// I/4 they parameterize every Hermitian unit-trace matrix.
fn pauli_basis15() -> Vec<Matrix4<C64>> {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let paulis = [
        Matrix2::new(one, zero, zero, one),
        Matrix2::new(zero, one, one, zero),
        Matrix2::new(zero, -i, i, zero),
        Matrix2::new(one, zero, zero, -one),
    ];
    let mut basis = Vec::with_capacity(15);
    for a in 0..4 {
        for b in 0..4 {
            if a == 0 && b == 0 {
                continue;
            }
            basis.push(kron2(&paulis[a], &paulis[b]) * C64::new(0.5, 0.0));
        }
    }
    basis
}

/// Normalizes counts into per-setting frequencies. Each setting's total is
/// the sum over its basis-pair group, so groups must be complete.
fn frequencies(counts: &[SettingCounts]) -> Result<Vec<(ProjectorLabel, ProjectorLabel, f64)>> {
    let mut group_totals = [[0.0f64; 3]; 3];
    let mut group_cover = [[[false; 4]; 3]; 3];
    for c in counts {
        if c.counts < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "negative counts for ({}, {})",
                c.projector_a.as_str(),
                c.projector_b.as_str()
            )));
        }
        let ga = c.projector_a.basis_group();
        let gb = c.projector_b.basis_group();
        group_totals[ga][gb] += c.counts;
        group_cover[ga][gb][2 * c.projector_a.basis_slot() + c.projector_b.basis_slot()] = true;
    }
    for c in counts {
        let ga = c.projector_a.basis_group();
        let gb = c.projector_b.basis_group();
        if group_cover[ga][gb].iter().any(|covered| !covered) || group_totals[ga][gb] <= 0.0 {
            return Err(Error::IncompleteBasisGroup {
                group: format!("({}, {})", ga, gb),
            });
        }
    }
    Ok(counts
        .iter()
        .map(|c| {
            let total = group_totals[c.projector_a.basis_group()][c.projector_b.basis_group()];
            (c.projector_a, c.projector_b, c.counts / total)
        })
        .collect())
}

/// Least-squares reconstruction of the density matrix from counted
/// frequencies. The result is Hermitian with unit trace by construction but
/// may have (slightly) negative eigenvalues; follow with
/// [`project_physical`].
pub fn linear_reconstruct(counts: &[SettingCounts]) -> Result<Matrix4<C64>> {
    let freqs = frequencies(counts)?;
    let basis = pauli_basis15();
    let n = freqs.len();

    let mut design = DMatrix::<f64>::zeros(n, 15);
    let mut target = DVector::<f64>::zeros(n);
    for (row, (a, b, freq)) in freqs.iter().enumerate() {
        let projector = kron2(&a.projector(), &b.projector());
        for (col, basis_op) in basis.iter().enumerate() {
            design[(row, col)] = (projector * basis_op).trace().re;
        }
        target[row] = freq - 0.25;
    }

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * max_sv.max(1.0))
        .count();
    if rank < 15 {
        return Err(Error::RankDeficient { rank: rank + 1 });
    }
    let x = svd
        .solve(&target, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("least-squares solve failed: {e}")))?;

    let mut rho = Matrix4::<C64>::identity() * C64::new(0.25, 0.0);
    for (k, basis_op) in basis.iter().enumerate() {
        rho += basis_op * C64::new(x[k], 0.0);
    }
    Ok(rho)
}

/// Euclidean projection of a spectrum onto the probability simplex.
fn simplex_project(spectrum: [f64; 4]) -> [f64; 4] {
    let mut sorted = spectrum;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    let mut support = 0;
    for (j, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (j as f64 + 1.0);
        if value - candidate > 0.0 {
            threshold = candidate;
            support = j + 1;
        }
    }
    debug_assert!(support > 0);
    spectrum.map(|v| (v - threshold).max(0.0))
}

/// Nearest density matrix under eigenvalue truncation: diagonalize, project
/// the spectrum onto the simplex (clipping negative eigenvalues and
/// redistributing mass so the trace stays 1), reassemble.
pub fn project_physical(raw: &Matrix4<C64>) -> Result<DensityMatrix4> {
    let herm_dev: f64 = (raw - raw.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_dev > 1e-8 {
        return Err(Error::UnphysicalState(format!(
            "projection input not Hermitian (deviation {herm_dev:.3e})"
        )));
    }
    let trace = raw.trace();
    if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
        return Err(Error::UnphysicalState(format!(
            "projection input trace is {trace}, not 1"
        )));
    }

    let (vals, vecs) = herm_eigen(raw);
    let projected = simplex_project([vals[0], vals[1], vals[2], vals[3]]);
    let mut rho = Matrix4::zeros();
    for (k, &weight) in projected.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] += col[i] * col[j].conj() * C64::new(weight, 0.0);
            }
        }
    }
    Ok(DensityMatrix4::from_matrix_unchecked(rho))
}

/// Output of a tomography run.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    /// Linear-inversion estimate; possibly unphysical.
    pub rho_raw: Matrix4<C64>,
    pub rho_physical: DensityMatrix4,
    pub fidelity_to_target: f64,
    pub min_eigenvalue_raw: f64,
}

/// Serialized result: the physical state as [re, im] entries plus the
/// fidelity and the raw minimum eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomographyResultJson {
    pub basis: [String; 4],
    pub rho_physical: [[[f64; 2]; 4]; 4],
    pub fidelity: f64,
    pub min_eigenvalue_raw: f64,
}

impl TomographyResult {
    pub fn to_json(&self) -> TomographyResultJson {
        TomographyResultJson {
            basis: BASIS_LABELS.map(str::to_owned),
            rho_physical: self.rho_physical.to_json().rho,
            fidelity: self.fidelity_to_target,
            min_eigenvalue_raw: self.min_eigenvalue_raw,
        }
    }
}

/// Full pipeline: linear inversion, physical projection, fidelity against a
/// pure target.
pub fn tomography_report(
    counts: &[SettingCounts],
    target: &TwoQubitKet,
) -> Result<TomographyResult> {
    let rho_raw = linear_reconstruct(counts)?;
    let (vals, _) = herm_eigen(&rho_raw);
    let min_eigenvalue_raw = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let rho_physical = project_physical(&rho_raw)?;
    let fidelity_to_target = fidelity(&rho_physical, target)?;
    Ok(TomographyResult {
        rho_raw,
        rho_physical,
        fidelity_to_target,
        min_eigenvalue_raw,
    })
}

/// Writes counts as CSV with columns `projector_a, projector_b, counts`.
pub fn write_counts_csv(path: &Path, counts: &[SettingCounts]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["projector_a", "projector_b", "counts"])?;
    for c in counts {
        writer.write_record([
            c.projector_a.as_str(),
            c.projector_b.as_str(),
            &format_counts(c.counts),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn format_counts(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

/// Reads a counts CSV written by [`write_counts_csv`] (or external data with
/// the same columns).
pub fn read_counts_csv(path: &Path) -> Result<Vec<SettingCounts>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let a: ProjectorLabel = record
            .get(0)
            .ok_or_else(|| Error::InvalidConfig("missing projector_a column".into()))?
            .parse()?;
        let b: ProjectorLabel = record
            .get(1)
            .ok_or_else(|| Error::InvalidConfig("missing projector_b column".into()))?
            .parse()?;
        let counts: f64 = record
            .get(2)
            .ok_or_else(|| Error::InvalidConfig("missing counts column".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("bad counts value: {e}")))?;
        out.push(SettingCounts {
            projector_a: a,
            projector_b: b,
            counts,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{
        haar_random_ket, ket_to_density, phase_shifted_bell, phi_plus, random_density_matrix,
        werner_mix, BellSign, BellStateSpec,
    };
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn standard_settings_shape() {
        let settings = standard_settings();
        assert_eq!(settings.len(), 36);
        // Each party's six projectors form three complete bases.
        for label in PROJECTOR_LABELS {
            let p = label.projector();
            assert!(((p * p) - p).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        }
        // ⟨R|H⟩² = 0.5
        let overlap = ProjectorLabel::R.ket().dotc(&ProjectorLabel::H.ket());
        assert!((overlap.norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn synthesized_counts_statistics() {
        let rho = ket_to_density(&phi_plus());
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(100);
        let counts = synthesize_counts(&rho, 10_000, &mut rng).unwrap();
        let get = |a: ProjectorLabel, b: ProjectorLabel| {
            counts
                .iter()
                .find(|c| c.projector_a == a && c.projector_b == b)
                .unwrap()
                .counts
        };
        // p(H,H) = 0.5: expect ≈ 5000 within 5σ.
        let sigma = (10_000.0f64 * 0.25).sqrt();
        assert!((get(ProjectorLabel::H, ProjectorLabel::H) - 5000.0).abs() < 5.0 * sigma);
        // p(H,V) = 0: exactly zero counts.
        assert_eq!(get(ProjectorLabel::H, ProjectorLabel::V), 0.0);
        // Each basis-pair group sums to the per-setting shot count.
        let zz_total: f64 = counts
            .iter()
            .filter(|c| {
                matches!(c.projector_a, ProjectorLabel::H | ProjectorLabel::V)
                    && matches!(c.projector_b, ProjectorLabel::H | ProjectorLabel::V)
            })
            .map(|c| c.counts)
            .sum();
        assert_eq!(zz_total, 10_000.0);
    }

    #[test]
    fn exact_counts_scale_probabilities() {
        let rho = ket_to_density(&phi_plus());
        let counts = exact_counts(&rho, 1000.0);
        let hh = counts
            .iter()
            .find(|c| c.projector_a == ProjectorLabel::H && c.projector_b == ProjectorLabel::H)
            .unwrap();
        assert!((hh.counts - 500.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_roundtrips() {
        // Exact probabilities invert to the source state.
        let cases = [
            ket_to_density(&phi_plus()),
            werner_mix(&phi_plus(), 0.2).unwrap(),
            ket_to_density(&phase_shifted_bell(BellStateSpec::new(
                FRAC_PI_2,
                BellSign::Plus,
            ))),
        ];
        for rho in cases {
            let counts = exact_counts(&rho, 1.0);
            let raw = linear_reconstruct(&counts).unwrap();
            let dev: f64 = (raw - rho.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-10, "roundtrip deviation {dev}");
        }
    }

    #[test]
    fn roundtrip_on_random_states() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(55);
        for _ in 0..20 {
            let rho = random_density_matrix(&mut rng);
            let counts = exact_counts(&rho, 1.0);
            let raw = linear_reconstruct(&counts).unwrap();
            let dev: f64 = (raw - rho.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_settings_rejected() {
        // Z⊗Z data alone cannot span the operator space.
        let rho = ket_to_density(&phi_plus());
        let counts: Vec<SettingCounts> = exact_counts(&rho, 1.0)
            .into_iter()
            .filter(|c| {
                matches!(c.projector_a, ProjectorLabel::H | ProjectorLabel::V)
                    && matches!(c.projector_b, ProjectorLabel::H | ProjectorLabel::V)
            })
            .collect();
        assert!(matches!(
            linear_reconstruct(&counts),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn incomplete_group_rejected() {
        let rho = ket_to_density(&phi_plus());
        let mut counts = exact_counts(&rho, 1.0);
        counts.retain(|c| {
            !(c.projector_a == ProjectorLabel::H && c.projector_b == ProjectorLabel::V)
        });
        assert!(matches!(
            linear_reconstruct(&counts),
            Err(Error::IncompleteBasisGroup { .. })
        ));
    }

    #[test]
    fn simplex_projection_by_hand() {
        // Spectrum (1.1, −0.1, 0, 0) projects to (1, 0, 0, 0).
        let projected = simplex_project([1.1, -0.1, 0.0, 0.0]);
        assert!((projected[0] - 1.0).abs() < 1e-12);
        assert!(projected[1].abs() < 1e-12);
        assert!(projected[2].abs() < 1e-12);
        assert!(projected[3].abs() < 1e-12);
    }

    #[test]
    fn projection_leaves_physical_input_unchanged() {
        let rho = werner_mix(&phi_plus(), 0.3).unwrap();
        let projected = project_physical(rho.matrix()).unwrap();
        assert!(projected.max_entry_distance(&rho) < 1e-12);
    }

    #[test]
    fn projection_restores_physicality() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(321);
        for _ in 0..100 {
            let rho = random_density_matrix(&mut rng);
            // Hermitian trace-preserving perturbation.
            let mut perturbed = *rho.matrix();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let d = C64::new(
                        rand::Rng::random_range(&mut rng, -0.05..0.05),
                        rand::Rng::random_range(&mut rng, -0.05..0.05),
                    );
                    perturbed[(i, j)] += d;
                    perturbed[(j, i)] += d.conj();
                }
            }
            let mut diag_shift = [0.0; 4];
            let mut total = 0.0;
            for slot in diag_shift.iter_mut().take(3) {
                *slot = rand::Rng::random_range(&mut rng, -0.05..0.05);
                total += *slot;
            }
            diag_shift[3] = -total;
            for i in 0..4 {
                perturbed[(i, i)] += C64::new(diag_shift[i], 0.0);
            }

            let projected = project_physical(&perturbed).unwrap();
            assert!(projected.min_eigenvalue() >= -1e-12);
            assert!((projected.trace().re - 1.0).abs() < 1e-10);
            assert!(projected.hermiticity_deviation() < 1e-10);

            // Optimality among states sharing the eigenbasis: the output
            // spectrum is the simplex projection of the input spectrum.
            let (in_vals, _) = herm_eigen(&perturbed);
            let (out_vals, _) = projected.herm_eigen();
            let expected = simplex_project([in_vals[0], in_vals[1], in_vals[2], in_vals[3]]);
            let mut expected_sorted = expected;
            expected_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut out_sorted = [out_vals[0], out_vals[1], out_vals[2], out_vals[3]];
            out_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for k in 0..4 {
                assert!((expected_sorted[k] - out_sorted[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn report_reference_points() {
        let counts = exact_counts(&ket_to_density(&phi_plus()), 1.0);
        let report = tomography_report(&counts, &phi_plus()).unwrap();
        assert!((report.fidelity_to_target - 1.0).abs() < 1e-9);

        // Counts with finite statistics: fidelity tracks (1−p) + p/4.
        let rho = werner_mix(&phi_plus(), 0.03).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
        let counts = synthesize_counts(&rho, 100_000, &mut rng).unwrap();
        let report = tomography_report(&counts, &phi_plus()).unwrap();
        assert!((report.fidelity_to_target - 0.9775).abs() < 0.005);
    }

    #[test]
    fn reconstruction_error_shrinks_with_shots() {
        let truth = werner_mix(&phi_plus(), 0.1).unwrap();
        let mut errors = Vec::new();
        for &shots in &[100u64, 100_000] {
            let mut total = 0.0;
            for rep in 0..20 {
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(rep);
                let counts = synthesize_counts(&truth, shots, &mut rng).unwrap();
                let report = tomography_report(&counts, &phi_plus()).unwrap();
                total += report.rho_physical.max_entry_distance(&truth);
            }
            errors.push(total / 20.0);
        }
        assert!(
            errors[1] < errors[0],
            "mean error did not shrink: {errors:?}"
        );
    }

    #[test]
    fn counts_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let rho = ket_to_density(&haar_random_ket(
            &mut rand_chacha::ChaCha12Rng::seed_from_u64(8),
        ));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let counts = synthesize_counts(&rho, 5000, &mut rng).unwrap();
        write_counts_csv(&path, &counts).unwrap();
        let loaded = read_counts_csv(&path).unwrap();
        assert_eq!(counts, loaded);
    }
}
