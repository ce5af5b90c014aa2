//! Alice/Bob analysis stations: an optional receiver-side geometric-phase
//! element, a 50/50 passive basis choice, Z (H/V) and X (D/A) projections,
//! Born-rule outcome sampling, and the detector-channel mapping.
//!
//! Bit convention: H→0, V→1 in the Z basis and D→0, A→1 in the X basis, for
//! both parties. Detector channels are ordered (H, V, D, A).

use nalgebra::Matrix2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::biphoton::{kron2, DensityMatrix4, Party};
use crate::error::{Error, Result};
use crate::jones::{qhq, JonesMatrix, C64};
use crate::source::PairEvent;

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// One station's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub party: Party,
    /// Receiver geometric-phase half-wave-plate angle, radians; `None` means
    /// no compensation element in the path.
    pub gp_theta: Option<f64>,
    /// Probability of choosing the Z basis.
    pub basis_bias: f64,
    /// Detector labels for the (H, V, D, A) channels.
    pub detector_ids: [String; 4],
}

impl StationConfig {
    pub fn alice() -> Self {
        Self {
            party: Party::A,
            gp_theta: None,
            basis_bias: 0.5,
            detector_ids: ["5", "6", "7", "8"].map(str::to_owned),
        }
    }

    pub fn bob() -> Self {
        Self {
            party: Party::B,
            gp_theta: None,
            basis_bias: 0.5,
            detector_ids: ["1", "2", "3", "4"].map(str::to_owned),
        }
    }

    pub fn with_gp(mut self, theta: f64) -> Self {
        self.gp_theta = Some(theta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.basis_bias > 0.0 && self.basis_bias < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "basis bias must lie strictly inside (0, 1), got {}",
                self.basis_bias
            )));
        }
        Ok(())
    }

    /// Detector label for a basis/bit outcome.
    pub fn detector_for(&self, basis: Basis, bit: u8) -> &str {
        let idx = match (basis, bit) {
            (Basis::Z, 0) => 0,
            (Basis::Z, _) => 1,
            (Basis::X, 0) => 2,
            (Basis::X, _) => 3,
        };
        &self.detector_ids[idx]
    }
}

/// The pair of rank-1 projectors for a basis: Z → {|H⟩⟨H|, |V⟩⟨V|},
/// X → {|D⟩⟨D|, |A⟩⟨A|}. Index 0 carries bit 0.
pub fn station_projectors(basis: Basis) -> [Matrix2<C64>; 2] {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let half = C64::new(0.5, 0.0);
    let neg_half = C64::new(-0.5, 0.0);
    match basis {
        Basis::Z => [
            Matrix2::new(one, zero, zero, zero),
            Matrix2::new(zero, zero, zero, one),
        ],
        Basis::X => [
            Matrix2::new(half, half, half, half),
            Matrix2::new(half, neg_half, neg_half, half),
        ],
    }
}

/// Joint Born-rule probabilities over the bit grid (00, 01, 10, 11), after
/// applying each party's geometric-phase element where configured.
pub fn joint_probabilities(
    state: &DensityMatrix4,
    basis_a: Basis,
    basis_b: Basis,
    gp_theta_a: Option<f64>,
    gp_theta_b: Option<f64>,
) -> [f64; 4] {
    let identity = JonesMatrix::identity();
    let u_a = gp_theta_a.map(qhq).unwrap_or(identity);
    let u_b = gp_theta_b.map(qhq).unwrap_or(identity);
    let transformed = state.transformed(&u_a, &u_b);

    let proj_a = station_projectors(basis_a);
    let proj_b = station_projectors(basis_b);
    let mut probs = [0.0; 4];
    for (i, pa) in proj_a.iter().enumerate() {
        for (j, pb) in proj_b.iter().enumerate() {
            let p = (kron2(pa, pb) * transformed.matrix()).trace().re;
            probs[2 * i + j] = p.max(0.0);
        }
    }
    probs
}

/// One detector click.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub timestamp_s: f64,
    pub party: Party,
    pub basis: Basis,
    pub bit: u8,
    pub detector_id: String,
}

/// Precomputed outcome probabilities for every basis combination of one
/// (state, station pair) configuration. Sampling walks the cumulative
/// distribution in the fixed order (00, 11, 01, 10), so that for correlated
/// target states the error outcomes occupy the upper tail of the unit
/// interval.
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    /// Indexed by [basis_a][basis_b], each entry in (00, 01, 10, 11) order.
    probs: [[[f64; 4]; 2]; 2],
}

const OUTCOME_ORDER: [usize; 4] = [0b00, 0b11, 0b01, 0b10];

fn basis_index(basis: Basis) -> usize {
    match basis {
        Basis::Z => 0,
        Basis::X => 1,
    }
}

impl OutcomeTable {
    pub fn new(state: &DensityMatrix4, cfg_a: &StationConfig, cfg_b: &StationConfig) -> Self {
        let mut probs = [[[0.0; 4]; 2]; 2];
        for (ia, basis_a) in [Basis::Z, Basis::X].into_iter().enumerate() {
            for (ib, basis_b) in [Basis::Z, Basis::X].into_iter().enumerate() {
                probs[ia][ib] =
                    joint_probabilities(state, basis_a, basis_b, cfg_a.gp_theta, cfg_b.gp_theta);
            }
        }
        Self { probs }
    }

    pub fn probabilities(&self, basis_a: Basis, basis_b: Basis) -> &[f64; 4] {
        &self.probs[basis_index(basis_a)][basis_index(basis_b)]
    }

    /// Draws a joint outcome (bit_a, bit_b) for the given bases.
    pub fn draw<R: Rng + ?Sized>(&self, basis_a: Basis, basis_b: Basis, rng: &mut R) -> (u8, u8) {
        let probs = self.probabilities(basis_a, basis_b);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &outcome in &OUTCOME_ORDER {
            acc += probs[outcome];
            if u < acc {
                return ((outcome >> 1) as u8, (outcome & 1) as u8);
            }
        }
        // Rounding left u beyond the accumulated mass; return the last outcome.
        let last = OUTCOME_ORDER[3];
        ((last >> 1) as u8, (last & 1) as u8)
    }
}

/// Samples one detection per party for a pair event: independent basis draws
/// with each station's bias, then a joint outcome from the Born rule.
///
/// Consumes exactly three RNG draws per event, which keeps record streams
/// with the same seed aligned across configurations. For long runs, build an
/// [`OutcomeTable`] once and use [`sample_with_table`].
pub fn sample_detection<R: Rng + ?Sized>(
    pair: &PairEvent,
    state: &DensityMatrix4,
    cfg_a: &StationConfig,
    cfg_b: &StationConfig,
    rng: &mut R,
) -> (DetectionRecord, DetectionRecord) {
    let table = OutcomeTable::new(state, cfg_a, cfg_b);
    sample_with_table(pair, &table, cfg_a, cfg_b, rng)
}

/// Same sampling path as [`sample_detection`], against a precomputed table.
pub fn sample_with_table<R: Rng + ?Sized>(
    pair: &PairEvent,
    table: &OutcomeTable,
    cfg_a: &StationConfig,
    cfg_b: &StationConfig,
    rng: &mut R,
) -> (DetectionRecord, DetectionRecord) {
    let basis_a = if rng.random_bool(cfg_a.basis_bias) {
        Basis::Z
    } else {
        Basis::X
    };
    let basis_b = if rng.random_bool(cfg_b.basis_bias) {
        Basis::Z
    } else {
        Basis::X
    };
    let (bit_a, bit_b) = table.draw(basis_a, basis_b, rng);
    let record = |cfg: &StationConfig, basis: Basis, bit: u8| DetectionRecord {
        timestamp_s: pair.timestamp_s,
        party: cfg.party,
        basis,
        bit,
        detector_id: cfg.detector_for(basis, bit).to_owned(),
    };
    (
        record(cfg_a, basis_a, bit_a),
        record(cfg_b, basis_b, bit_b),
    )
}

/// Writes a detection-record stream as CSV with columns
/// `timestamp_s, party, basis, bit, detector_id`.
pub fn write_detection_csv(path: &std::path::Path, records: &[DetectionRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["timestamp_s", "party", "basis", "bit", "detector_id"])?;
    for r in records {
        writer.write_record([
            format!("{:.9}", r.timestamp_s),
            match r.party {
                Party::A => "A".to_owned(),
                Party::B => "B".to_owned(),
            },
            match r.basis {
                Basis::Z => "Z".to_owned(),
                Basis::X => "X".to_owned(),
            },
            r.bit.to_string(),
            r.detector_id.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{
        ket_to_density, phase_shifted_bell, state_after_receiver_gp, BellSign, BellStateSpec,
        Party,
    };
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_2;

    fn phi_plus_density() -> DensityMatrix4 {
        ket_to_density(&crate::biphoton::phi_plus())
    }

    #[test]
    fn projectors_resolve_identity() {
        for basis in [Basis::Z, Basis::X] {
            let [p0, p1] = station_projectors(basis);
            let sum = p0 + p1;
            let dev: f64 = (sum - Matrix2::identity())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12);
        }
        // ⟨D|H⟩² = 0.5
        let [d, _] = station_projectors(Basis::X);
        assert!((d[(0, 0)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phi_plus_is_correlated_in_both_bases() {
        let rho = phi_plus_density();
        let zz = joint_probabilities(&rho, Basis::Z, Basis::Z, None, None);
        assert!((zz[0] - 0.5).abs() < 1e-12 && (zz[3] - 0.5).abs() < 1e-12);
        assert!(zz[1] < 1e-12 && zz[2] < 1e-12);

        let xx = joint_probabilities(&rho, Basis::X, Basis::X, None, None);
        assert!((xx[0] - 0.5).abs() < 1e-12 && (xx[3] - 0.5).abs() < 1e-12);
        assert!(xx[1] < 1e-12 && xx[2] < 1e-12);
    }

    #[test]
    fn quarter_phase_state_is_uniform_in_x() {
        let rho = ket_to_density(&phase_shifted_bell(BellStateSpec::new(
            FRAC_PI_2,
            BellSign::Plus,
        )));
        let xx = joint_probabilities(&rho, Basis::X, Basis::X, None, None);
        for p in xx {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_normalize_for_random_states() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(41);
        for _ in 0..20 {
            let rho = crate::biphoton::random_density_matrix(&mut rng);
            for basis_a in [Basis::Z, Basis::X] {
                for basis_b in [Basis::Z, Basis::X] {
                    for gp in [None, Some(0.4)] {
                        let probs = joint_probabilities(&rho, basis_a, basis_b, gp, Some(1.1));
                        let total: f64 = probs.iter().sum();
                        assert!((total - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn gp_element_equivalence() {
        // Sampling with a receiver GP equals sampling the pre-transformed
        // state with no GP element.
        let theta = 0.7;
        let rho = ket_to_density(&phase_shifted_bell(BellStateSpec::new(1.3, BellSign::Plus)));
        let pre = ket_to_density(&state_after_receiver_gp(
            &phase_shifted_bell(BellStateSpec::new(1.3, BellSign::Plus)),
            theta,
            Party::B,
        ));
        for basis_a in [Basis::Z, Basis::X] {
            for basis_b in [Basis::Z, Basis::X] {
                let with_gp = joint_probabilities(&rho, basis_a, basis_b, None, Some(theta));
                let without = joint_probabilities(&pre, basis_a, basis_b, None, None);
                for k in 0..4 {
                    assert!((with_gp[k] - without[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn marginals_are_unbiased_for_bell_states() {
        for phi in [0.0, 0.9, 2.0, 4.4] {
            let rho = ket_to_density(&phase_shifted_bell(BellStateSpec::new(phi, BellSign::Plus)));
            for basis_a in [Basis::Z, Basis::X] {
                for basis_b in [Basis::Z, Basis::X] {
                    let p = joint_probabilities(&rho, basis_a, basis_b, None, None);
                    assert!((p[0] + p[1] - 0.5).abs() < 1e-12, "alice marginal");
                    assert!((p[0] + p[2] - 0.5).abs() < 1e-12, "bob marginal");
                }
            }
        }
    }

    #[test]
    fn sampled_basis_fraction_and_agreement() {
        let rho = phi_plus_density();
        let alice = StationConfig::alice();
        let bob = StationConfig::bob();
        let table = OutcomeTable::new(&rho, &alice, &bob);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4242);

        let n = 100_000;
        let mut z_count_a = 0usize;
        let mut matched_agreements = 0usize;
        let mut matched = 0usize;
        for i in 0..n {
            let event = PairEvent {
                timestamp_s: i as f64,
                true_state_ref: 0,
            };
            let (ra, rb) = sample_with_table(&event, &table, &alice, &bob, &mut rng);
            if ra.basis == Basis::Z {
                z_count_a += 1;
            }
            if ra.basis == rb.basis {
                matched += 1;
                if ra.bit == rb.bit {
                    matched_agreements += 1;
                }
            }
        }
        // 5σ binomial bound on the Z fraction.
        let sigma = (0.25 * n as f64).sqrt();
        assert!((z_count_a as f64 - n as f64 / 2.0).abs() < 5.0 * sigma);
        // Noiseless Φ⁺: every matched-basis pair agrees.
        assert_eq!(matched_agreements, matched);
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = phi_plus_density();
        let alice = StationConfig::alice();
        let bob = StationConfig::bob();
        let event = PairEvent {
            timestamp_s: 0.5,
            true_state_ref: 9,
        };
        let run = |seed: u64| {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| sample_detection(&event, &rho, &alice, &bob, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn detector_mapping() {
        let bob = StationConfig::bob();
        assert_eq!(bob.detector_for(Basis::Z, 0), "1");
        assert_eq!(bob.detector_for(Basis::Z, 1), "2");
        assert_eq!(bob.detector_for(Basis::X, 0), "3");
        assert_eq!(bob.detector_for(Basis::X, 1), "4");
        let alice = StationConfig::alice();
        assert_eq!(alice.detector_for(Basis::X, 1), "8");
    }

    #[test]
    fn station_config_validation() {
        let mut cfg = StationConfig::alice();
        cfg.basis_bias = 1.0;
        assert!(cfg.validate().is_err());
        cfg.basis_bias = 0.5;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn detection_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clicks.csv");
        let records = vec![
            DetectionRecord {
                timestamp_s: 0.25,
                party: Party::A,
                basis: Basis::Z,
                bit: 0,
                detector_id: "5".into(),
            },
            DetectionRecord {
                timestamp_s: 0.5,
                party: Party::B,
                basis: Basis::X,
                bit: 1,
                detector_id: "4".into(),
            },
        ];
        write_detection_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "timestamp_s,party,basis,bit,detector_id"
        );
        assert_eq!(lines.next().unwrap(), "0.250000000,A,Z,0,5");
        assert_eq!(lines.next().unwrap(), "0.500000000,B,X,1,4");
    }
}
