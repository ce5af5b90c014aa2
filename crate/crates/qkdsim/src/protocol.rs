//! The BBM92 session engine: coincidence pairing, basis sifting over a
//! simulated classical channel, QBER estimation with disclosure, a
//! security-threshold abort, and asymptotic key-rate accounting.
//!
//! The classical channel is an in-process, ordered, reliable message log
//! behind the [`ClassicalChannel`] trait; only basis announcements cross it,
//! never bit values.

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::biphoton::Party;
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::source::SourceConfig;
use crate::station::{Basis, DetectionRecord, OutcomeTable, StationConfig};

/// Which relative-phase-free Bell state the session treats as "correct".
/// With the fixed detector bit mapping, a Φ⁺ target needs no correction,
/// while a Φ⁻ target is anti-correlated in the X basis, so Bob flips his
/// X-basis bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TargetBell {
    PhiPlus,
    PhiMinus,
}

impl TargetBell {
    /// The branch closest to a phase-shifted Bell state with relative phase
    /// `phi` (in the (|HH⟩ + e^{iφ}|VV⟩)/√2 representation).
    pub fn nearest_for_phase(phi: f64) -> Self {
        if phi.cos() >= 0.0 {
            TargetBell::PhiPlus
        } else {
            TargetBell::PhiMinus
        }
    }
}

/// One basis announcement on the classical channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisAnnouncement {
    pub seq: u64,
    pub party: Party,
    pub timestamp_s: f64,
    pub basis: Basis,
}

/// Ordered, reliable, authenticated-by-assumption message transport. A
/// network transport can replace [`Transcript`] without touching protocol
/// logic.
pub trait ClassicalChannel {
    fn announce(&mut self, party: Party, timestamp_s: f64, basis: Basis);
}

/// In-process classical channel that records every message in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Transcript {
    messages: Vec<BasisAnnouncement>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn messages(&self) -> &[BasisAnnouncement] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

impl ClassicalChannel for Transcript {
    fn announce(&mut self, party: Party, timestamp_s: f64, basis: Basis) {
        let seq = self.messages.len() as u64;
        self.messages.push(BasisAnnouncement {
            seq,
            party,
            timestamp_s,
            basis,
        });
    }
}

/// A basis-matched coincidence after sifting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiftedPair {
    pub timestamp_s: f64,
    pub basis: Basis,
    pub bit_a: u8,
    pub bit_b: u8,
}

/// Greedy one-to-one pairing of time-sorted detection streams: records are
/// paired when their timestamps differ by at most `window`, earliest first,
/// and each record is used at most once. Returns index pairs into the two
/// streams.
pub fn coincide(
    events_a: &[DetectionRecord],
    events_b: &[DetectionRecord],
    window: f64,
) -> Result<Vec<(usize, usize)>> {
    for stream in [events_a, events_b] {
        if stream
            .windows(2)
            .any(|w| w[1].timestamp_s < w[0].timestamp_s)
        {
            return Err(Error::UnsortedRecords);
        }
    }
    let mut pairs = Vec::with_capacity(events_a.len().min(events_b.len()));
    let mut i = 0;
    let mut j = 0;
    while i < events_a.len() && j < events_b.len() {
        let dt = events_a[i].timestamp_s - events_b[j].timestamp_s;
        if dt.abs() <= window {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if dt < 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(pairs)
}

/// Basis reconciliation: both parties announce their bases over the channel
/// (two announcements per coincidence, in timestamp order); pairs with equal
/// bases are kept. For a Φ⁻ target, Bob's X-basis bit is flipped here so
/// that agreement means "no error".
pub fn sift<C: ClassicalChannel>(
    coincidences: &[(usize, usize)],
    events_a: &[DetectionRecord],
    events_b: &[DetectionRecord],
    target: TargetBell,
    channel: &mut C,
) -> Vec<SiftedPair> {
    let mut sifted = Vec::with_capacity(coincidences.len() / 2 + 16);
    for &(ia, ib) in coincidences {
        let a = &events_a[ia];
        let b = &events_b[ib];
        channel.announce(a.party, a.timestamp_s, a.basis);
        channel.announce(b.party, b.timestamp_s, b.basis);
        if a.basis != b.basis {
            continue;
        }
        let mut bit_b = b.bit;
        if target == TargetBell::PhiMinus && b.basis == Basis::X {
            bit_b ^= 1;
        }
        sifted.push(SiftedPair {
            timestamp_s: a.timestamp_s,
            basis: a.basis,
            bit_a: a.bit,
            bit_b,
        });
    }
    sifted
}

/// QBER estimate from a disclosed sample, plus the surviving key bits.
#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub qber_z: f64,
    pub qber_x: f64,
    /// Count-weighted mean over both bases.
    pub qber_total: f64,
    pub disclosed_z: usize,
    pub disclosed_x: usize,
    /// Alice's bits from the pairs that were not disclosed.
    pub key_bits: Vec<bool>,
}

/// Discloses a random `sample_fraction` of the sifted pairs (without
/// replacement, seed-deterministic), computes per-basis and pooled error
/// rates, and returns the remaining pairs' `bit_a` values as the key.
/// `sample_fraction` may be 1.0, which discloses everything and leaves no
/// key (the characterization mode).
pub fn estimate_qber<R: Rng + ?Sized>(
    sifted: &[SiftedPair],
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    if sifted.is_empty() {
        return Err(Error::EmptySiftedSet);
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidProbability {
            value: sample_fraction,
        });
    }
    let n = sifted.len();
    let k = ((n as f64) * sample_fraction).round() as usize;
    if k == 0 {
        return Err(Error::EmptyQberSample);
    }
    let k = k.min(n);

    // Partial Fisher-Yates: the first k slots become the disclosed sample.
    let mut indices: Vec<u32> = (0..n as u32).collect();
    for slot in 0..k {
        let pick = rng.random_range(slot..n);
        indices.swap(slot, pick);
    }
    let mut disclosed_flags = vec![false; n];
    let mut errors_z = 0usize;
    let mut errors_x = 0usize;
    let mut disclosed_z = 0usize;
    let mut disclosed_x = 0usize;
    for &idx in &indices[..k] {
        let pair = &sifted[idx as usize];
        disclosed_flags[idx as usize] = true;
        let error = pair.bit_a != pair.bit_b;
        match pair.basis {
            Basis::Z => {
                disclosed_z += 1;
                errors_z += error as usize;
            }
            Basis::X => {
                disclosed_x += 1;
                errors_x += error as usize;
            }
        }
    }

    let rate = |errors: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            errors as f64 / total as f64
        }
    };
    let key_bits: Vec<bool> = sifted
        .iter()
        .enumerate()
        .filter(|(i, _)| !disclosed_flags[*i])
        .map(|(_, pair)| pair.bit_a == 1)
        .collect();

    Ok(QberEstimate {
        qber_z: rate(errors_z, disclosed_z),
        qber_x: rate(errors_x, disclosed_x),
        qber_total: rate(errors_z + errors_x, disclosed_z + disclosed_x),
        disclosed_z,
        disclosed_x,
        key_bits,
    })
}

/// Binary entropy h₂(q) in bits.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// Asymptotic BBM92 secure-key fraction: max(0, 1 − 2·h₂(q)). Zero exactly
/// at the 11% threshold.
pub fn secure_key_rate(qber: f64) -> f64 {
    (1.0 - 2.0 * binary_entropy(qber)).max(0.0)
}

/// Full session parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub source: SourceConfig,
    pub station_a: StationConfig,
    pub station_b: StationConfig,
    /// Coincidence window, seconds.
    pub coincidence_window_s: f64,
    /// Fraction of sifted pairs disclosed for error estimation, in (0, 1].
    pub qber_sample_fraction: f64,
    /// Abort threshold on the pooled QBER, in (0, 0.25].
    pub qber_abort_threshold: f64,
    /// Bit convention target.
    pub target: TargetBell,
    /// Session seed; drives detection sampling and disclosure sampling.
    pub seed: u64,
    /// Optional cap on the number of sifted pairs (first N kept), for
    /// fixed-statistics runs.
    pub sifted_cap: Option<usize>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            station_a: StationConfig::alice(),
            station_b: StationConfig::bob(),
            coincidence_window_s: 1e-6,
            qber_sample_fraction: 0.1,
            qber_abort_threshold: crate::metrics::QBER_SECURITY_THRESHOLD,
            target: TargetBell::PhiPlus,
            seed: 1,
            sifted_cap: None,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.station_a.validate()?;
        self.station_b.validate()?;
        if !(self.qber_sample_fraction > 0.0 && self.qber_sample_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "qber_sample_fraction must lie in (0, 1], got {}",
                self.qber_sample_fraction
            )));
        }
        if !(self.qber_abort_threshold > 0.0 && self.qber_abort_threshold <= 0.25) {
            return Err(Error::InvalidConfig(format!(
                "qber_abort_threshold must lie in (0, 0.25], got {}",
                self.qber_abort_threshold
            )));
        }
        if !self.coincidence_window_s.is_finite() || self.coincidence_window_s <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "coincidence window must be positive, got {}",
                self.coincidence_window_s
            )));
        }
        Ok(())
    }
}

fn serialize_key_hex<S: Serializer>(bits: &[bool], serializer: S) -> std::result::Result<S::Ok, S::Error> {
    serializer.serialize_str(&key_to_hex(bits))
}

/// Packs bits MSB-first into hex nibbles, zero-padded at the tail.
pub fn key_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len() / 4 + 1);
    for chunk in bits.chunks(4) {
        let mut nibble = 0u8;
        for (i, &bit) in chunk.iter().enumerate() {
            if bit {
                nibble |= 1 << (3 - i);
            }
        }
        out.push(char::from_digit(nibble as u32, 16).unwrap());
    }
    out
}

/// Everything a session produces.
#[derive(Debug, Clone, Serialize)]
pub struct SessionReport {
    pub raw_coincidences: usize,
    pub sifted_count: usize,
    pub qber_z: f64,
    pub qber_x: f64,
    pub qber_total: f64,
    pub disclosed_count: usize,
    pub key_length_bits: usize,
    #[serde(serialize_with = "serialize_key_hex")]
    pub key_bits: Vec<bool>,
    pub secure_key_rate_estimate: f64,
    pub aborted: bool,
    pub transcript: Transcript,
}

impl SessionReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs a full BBM92 session: emit pairs, sample detections, pair
/// coincidences, sift, estimate the QBER, then abort or account for the
/// asymptotic key rate. Deterministic for a given configuration.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    config.validate()?;

    let (state, events) = config.source.emit_events()?;
    let table = OutcomeTable::new(&state, &config.station_a, &config.station_b);
    let mut detect_rng =
        <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(derive_seed(config.seed, 1));

    let mut records_a = Vec::with_capacity(events.len());
    let mut records_b = Vec::with_capacity(events.len());
    for event in &events {
        let (ra, rb) = crate::station::sample_with_table(
            event,
            &table,
            &config.station_a,
            &config.station_b,
            &mut detect_rng,
        );
        records_a.push(ra);
        records_b.push(rb);
    }

    let coincidences = coincide(&records_a, &records_b, config.coincidence_window_s)?;
    let raw_coincidences = coincidences.len();

    let mut transcript = Transcript::new();
    let mut sifted = sift(
        &coincidences,
        &records_a,
        &records_b,
        config.target,
        &mut transcript,
    );
    if let Some(cap) = config.sifted_cap {
        sifted.truncate(cap);
    }
    let sifted_count = sifted.len();

    let mut qber_rng =
        <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(derive_seed(config.seed, 2));
    let estimate = estimate_qber(&sifted, config.qber_sample_fraction, &mut qber_rng)?;

    let aborted = estimate.qber_total > config.qber_abort_threshold;
    let key_bits = if aborted { Vec::new() } else { estimate.key_bits };
    let secure_key_rate_estimate = if aborted {
        0.0
    } else {
        secure_key_rate(estimate.qber_total)
    };

    Ok(SessionReport {
        raw_coincidences,
        sifted_count,
        qber_z: estimate.qber_z,
        qber_x: estimate.qber_x,
        qber_total: estimate.qber_total,
        disclosed_count: estimate.disclosed_z + estimate.disclosed_x,
        key_length_bits: key_bits.len(),
        key_bits,
        secure_key_rate_estimate,
        aborted,
        transcript,
    })
}

/// Expected pooled QBER of a session on a Werner-mixed phase-shifted Bell
/// state, derived by Born-rule enumeration: the Z basis errs only on the
/// white-noise fraction (p/2), the X basis adds the interference term, and
/// pooling over equally likely bases gives
/// `(1 − p)·(1 − cos φ_eff)/4 + p/2`, where `cos φ_eff` is `|cos φ|` when
/// the target branch is matched to the state.
pub fn composite_qber(phi: f64, noise_p: f64, target: TargetBell) -> f64 {
    let cos_eff = match target {
        TargetBell::PhiPlus => phi.cos(),
        TargetBell::PhiMinus => -phi.cos(),
    };
    (1.0 - noise_p) * (1.0 - cos_eff) / 4.0 + noise_p / 2.0
}
