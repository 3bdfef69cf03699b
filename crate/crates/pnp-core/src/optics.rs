//! Phase-encoded time-bin qubits: preparation, phase modulation, and
//! Born-rule interferometric measurement.
//!
//! A time-bin qubit is the state (|early⟩ + e^{iφ}|late⟩)/√2; the relative
//! phase φ is the only free parameter. The protocol only ever announces
//! phases from the quarter-turn set {0, π/2, π, 3π/2}, so [`Phase`] keeps
//! those as exact integers and the deterministic measurement branches stay
//! deterministic regardless of float rounding. Continuous phases (e.g.
//! interferometer drift) fall back to radians.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Sub};

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

/// Radian values of the four quarter-turn phases, index = number of quarter turns.
const QUARTER_RAD: [f64; 4] = [0.0, FRAC_PI_2, PI, PI + FRAC_PI_2];

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("phase must be finite, got {0}")]
    NonFinitePhase(f64),
}

/// A relative phase, canonical in [0, 2π).
///
/// Exact multiples of π/2 are stored as quarter-turn integers; all other
/// values as radians. Construction canonicalizes, so two phases differing
/// by a whole number of turns compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase(Repr);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Repr {
    Quarter(u8),
    Radians(f64),
}

impl Phase {
    pub const ZERO: Phase = Phase(Repr::Quarter(0));
    /// π/2
    pub const QUARTER_TURN: Phase = Phase(Repr::Quarter(1));
    /// π
    pub const HALF_TURN: Phase = Phase(Repr::Quarter(2));
    /// 3π/2
    pub const THREE_QUARTER_TURN: Phase = Phase(Repr::Quarter(3));

    /// Canonicalizes an arbitrary finite angle into [0, 2π), snapping exact
    /// quarter-turn values to the integer representation.
    pub fn from_radians(radians: f64) -> Result<Phase, OpticsError> {
        if !radians.is_finite() {
            return Err(OpticsError::NonFinitePhase(radians));
        }
        let mut canonical = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        if canonical >= TAU {
            canonical = 0.0;
        }
        for (k, &q) in QUARTER_RAD.iter().enumerate() {
            if canonical == q {
                return Ok(Phase(Repr::Quarter(k as u8)));
            }
        }
        Ok(Phase(Repr::Radians(canonical)))
    }

    /// Phase of `k` quarter turns (k·π/2), reduced mod 4.
    pub fn from_quarter_turns(k: u8) -> Phase {
        Phase(Repr::Quarter(k % 4))
    }

    /// The quarter-turn count if this phase is an exact multiple of π/2.
    pub fn quarter_turns(&self) -> Option<u8> {
        match self.0 {
            Repr::Quarter(k) => Some(k),
            Repr::Radians(_) => None,
        }
    }

    pub fn radians(&self) -> f64 {
        match self.0 {
            Repr::Quarter(k) => QUARTER_RAD[k as usize],
            Repr::Radians(r) => r,
        }
    }

    /// self + π, the orthogonal state of the same basis.
    pub fn flipped(self) -> Phase {
        self + Phase::HALF_TURN
    }
}

impl Add for Phase {
    type Output = Phase;

    fn add(self, rhs: Phase) -> Phase {
        match (self.0, rhs.0) {
            (Repr::Quarter(a), Repr::Quarter(b)) => Phase(Repr::Quarter((a + b) % 4)),
            _ => Phase::from_radians(self.radians() + rhs.radians())
                .expect("sum of canonical phases is finite"),
        }
    }
}

impl Sub for Phase {
    type Output = Phase;

    fn sub(self, rhs: Phase) -> Phase {
        match (self.0, rhs.0) {
            (Repr::Quarter(a), Repr::Quarter(b)) => Phase(Repr::Quarter((a + 4 - b) % 4)),
            _ => Phase::from_radians(self.radians() - rhs.radians())
                .expect("difference of canonical phases is finite"),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.radians())
    }
}

// Serialized as radians. Quarter turns survive the round trip exactly:
// serde_json emits the shortest representation that parses back to the
// same f64, and construction re-snaps it to the integer form.
impl serde::Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.radians())
    }
}

impl<'de> serde::Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Phase, D::Error> {
        let radians = f64::deserialize(deserializer)?;
        Phase::from_radians(radians).map_err(serde::de::Error::custom)
    }
}

/// A single time-bin qubit. Deliberately neither `Copy` nor `Clone`:
/// measurement and re-modulation take the qubit by value, so a consumed
/// qubit cannot be reused.
#[derive(Debug)]
pub struct PhaseQubit {
    phase: Phase,
}

impl PhaseQubit {
    /// Fresh unmeasured qubit carrying the given relative phase.
    pub fn prepare(phase: Phase) -> PhaseQubit {
        PhaseQubit { phase }
    }

    /// Applies an extra relative phase between the time bins. Consumes the
    /// input qubit; the result is the same photon, re-modulated.
    pub fn apply_phase(self, delta: Phase) -> PhaseQubit {
        PhaseQubit {
            phase: self.phase + delta,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }
}

/// Which of the two interferometer output detectors fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorOutcome {
    D0,
    D1,
}

impl DetectorOutcome {
    /// Fixed artifact-wide convention: D0 ↔ 0, D1 ↔ 1.
    pub fn bit(self) -> u8 {
        match self {
            DetectorOutcome::D0 => 0,
            DetectorOutcome::D1 => 1,
        }
    }

    pub fn from_bit(bit: u8) -> DetectorOutcome {
        if bit.is_multiple_of(2) {
            DetectorOutcome::D0
        } else {
            DetectorOutcome::D1
        }
    }
}

/// P(D0) when a qubit at phase `state` meets an analyzer set to `analyzer`:
/// cos²((state − analyzer)/2). Quarter-turn inputs take the exact path, so
/// aligned/anti-aligned phases give exactly 1 and 0.
pub fn detection_probability(state: Phase, analyzer: Phase) -> f64 {
    match (state.quarter_turns(), analyzer.quarter_turns()) {
        (Some(a), Some(b)) => match (a + 4 - b) % 4 {
            0 => 1.0,
            2 => 0.0,
            _ => 0.5,
        },
        _ => {
            let half = (state.radians() - analyzer.radians()) / 2.0;
            let c = half.cos();
            c * c
        }
    }
}

/// Born-rule measurement. Consumes the qubit; exactly one detector fires.
///
/// Always consumes one draw, so a role's stream position depends only on
/// how many measurements it performed, never on the states it saw: the
/// aligned branch (P(D0) = 1) fires D0 with certainty because draws lie in
/// [0, 1), and the anti-aligned branch (P(D0) = 0) never does. Sessions
/// that differ only in the adversary therefore share Bob's preparations,
/// Alice's choices, and the loss pattern round for round.
pub fn measure(qubit: PhaseQubit, analyzer: Phase, rng: &mut RandomStream) -> DetectorOutcome {
    let p0 = detection_probability(qubit.phase(), analyzer);
    if rng.bernoulli(p0) {
        DetectorOutcome::D0
    } else {
        DetectorOutcome::D1
    }
}

/// Protocol roles that own independent random substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Bob,
    Alice,
    Eve,
    Channel,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Bob => 1,
            StreamRole::Alice => 2,
            StreamRole::Eve => 3,
            StreamRole::Channel => 4,
        }
    }
}

/// Deterministic random stream: ChaCha12 keyed by SplitMix64 expansion of a
/// 64-bit seed. Same seed, same platform-independent draw sequence. Role
/// substreams mix a role tag into the seed before expansion, so the four
/// parties draw from independent sequences that never shift under each
/// other's consumption patterns.
pub struct RandomStream {
    rng: ChaCha12Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn expand_seed(seed: u64, tag: u64) -> [u8; 32] {
    let mut state = seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    bytes
}

impl RandomStream {
    /// Master stream for a seed (tag 0).
    pub fn new(seed: u64) -> RandomStream {
        RandomStream {
            rng: ChaCha12Rng::from_seed(expand_seed(seed, 0)),
        }
    }

    /// Independent substream for one protocol role.
    pub fn for_role(seed: u64, role: StreamRole) -> RandomStream {
        RandomStream {
            rng: ChaCha12Rng::from_seed(expand_seed(seed, role.tag())),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p`. Caller guarantees `p` ∈ [0, 1].
    pub fn bernoulli(&mut self, p: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&p));
        self.next_f64() < p
    }

    /// Uniform bit.
    pub fn bit(&mut self) -> u8 {
        (self.next_u64() & 1) as u8
    }
}

/// Seed for campaign repetition `k`: element k of the SplitMix64 sequence
/// started at the master seed. Documented so external tooling can reproduce
/// any repetition in isolation.
pub fn repetition_seed(master_seed: u64, repetition: u64) -> u64 {
    let mut state = master_seed;
    let mut out = splitmix64(&mut state);
    for _ in 0..repetition {
        out = splitmix64(&mut state);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonicalize_wraps_full_turn() {
        assert_eq!(Phase::from_radians(TAU).unwrap(), Phase::ZERO);
        assert_eq!(Phase::from_radians(0.0).unwrap(), Phase::ZERO);
    }

    #[test]
    fn canonicalize_negative() {
        assert_eq!(
            Phase::from_radians(-FRAC_PI_2).unwrap(),
            Phase::THREE_QUARTER_TURN
        );
    }

    #[test]
    fn canonicalize_five_pi() {
        // 5π reduces to π up to float rounding of the product
        let p = Phase::from_radians(5.0 * PI).unwrap();
        assert!((p.radians() - PI).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_rejects_non_finite() {
        assert!(Phase::from_radians(f64::NAN).is_err());
        assert!(Phase::from_radians(f64::INFINITY).is_err());
    }

    #[test]
    fn quarter_snap_is_exact() {
        assert_eq!(
            Phase::from_radians(FRAC_PI_2).unwrap().quarter_turns(),
            Some(1)
        );
        assert_eq!(Phase::from_radians(PI).unwrap().quarter_turns(), Some(2));
        assert_eq!(
            Phase::from_radians(PI + FRAC_PI_2).unwrap().quarter_turns(),
            Some(3)
        );
    }

    #[test]
    fn prepare_stores_phase() {
        for phase in [Phase::ZERO, Phase::QUARTER_TURN, Phase::THREE_QUARTER_TURN] {
            assert_eq!(PhaseQubit::prepare(phase).phase(), phase);
        }
    }

    #[test]
    fn apply_phase_examples() {
        let q = PhaseQubit::prepare(Phase::ZERO).apply_phase(Phase::HALF_TURN);
        assert_eq!(q.phase(), Phase::HALF_TURN);
        // wraparound
        let q = PhaseQubit::prepare(Phase::THREE_QUARTER_TURN).apply_phase(Phase::HALF_TURN);
        assert_eq!(q.phase(), Phase::QUARTER_TURN);
        // identity encodes '0'
        let p = Phase::from_radians(PI / 4.0).unwrap();
        let q = PhaseQubit::prepare(p).apply_phase(Phase::ZERO);
        assert_eq!(q.phase(), p);
    }

    #[test]
    fn detection_probability_examples() {
        assert_eq!(detection_probability(Phase::ZERO, Phase::ZERO), 1.0);
        assert_eq!(detection_probability(Phase::HALF_TURN, Phase::ZERO), 0.0);
        assert_eq!(detection_probability(Phase::QUARTER_TURN, Phase::ZERO), 0.5);
        // cos²(π/6) = 3/4
        let p = detection_probability(Phase::from_radians(PI / 3.0).unwrap(), Phase::ZERO);
        assert!((p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn measure_deterministic_branches() {
        let mut rng = RandomStream::new(7);
        for _ in 0..200 {
            let q = PhaseQubit::prepare(Phase::THREE_QUARTER_TURN);
            assert_eq!(
                measure(q, Phase::THREE_QUARTER_TURN, &mut rng),
                DetectorOutcome::D0
            );
            let q = PhaseQubit::prepare(Phase::QUARTER_TURN);
            assert_eq!(
                measure(q, Phase::THREE_QUARTER_TURN, &mut rng),
                DetectorOutcome::D1
            );
        }
    }

    #[test]
    fn outcome_bit_convention() {
        assert_eq!(DetectorOutcome::D0.bit(), 0);
        assert_eq!(DetectorOutcome::D1.bit(), 1);
        // composition: measuring the flipped state yields bit 1
        let mut rng = RandomStream::new(1);
        let analyzer = Phase::QUARTER_TURN;
        let q = PhaseQubit::prepare(analyzer.flipped());
        assert_eq!(measure(q, analyzer, &mut rng).bit(), 1);
    }

    /// Empirical D0 frequency across the analytic probability grid
    /// {0.25, 0.5, 0.75}, each within 3σ binomial tolerance.
    #[test]
    fn born_statistics_grid() {
        const N: u64 = 100_000;
        // phase differences giving P(D0) = 0.75, 0.5, 0.25
        let cases = [(PI / 3.0, 0.75), (FRAC_PI_2, 0.5), (2.0 * PI / 3.0, 0.25)];
        for (i, (diff, p)) in cases.into_iter().enumerate() {
            let mut rng = RandomStream::new(1000 + i as u64);
            let state = Phase::from_radians(diff).unwrap();
            let mut d0 = 0u64;
            for _ in 0..N {
                if measure(PhaseQubit::prepare(state), Phase::ZERO, &mut rng) == DetectorOutcome::D0
                {
                    d0 += 1;
                }
            }
            let freq = d0 as f64 / N as f64;
            let tol = 3.0 * (p * (1.0 - p) / N as f64).sqrt();
            assert!(
                (freq - p).abs() < tol,
                "P(D0) for diff {diff}: got {freq}, want {p} ± {tol}"
            );
        }
    }

    #[test]
    fn replay_same_seed_same_sequence() {
        let draws = |seed| {
            let mut rng = RandomStream::new(seed);
            (0..1000).map(|_| rng.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draws(42), draws(42));
        assert_ne!(draws(42), draws(43));
    }

    #[test]
    fn role_substreams_are_independent() {
        let mut bob = RandomStream::for_role(42, StreamRole::Bob);
        let mut alice = RandomStream::for_role(42, StreamRole::Alice);
        let a: Vec<u64> = (0..32).map(|_| bob.next_u64()).collect();
        let b: Vec<u64> = (0..32).map(|_| alice.next_u64()).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn repetition_seeds_distinct_and_stable() {
        let s0 = repetition_seed(9, 0);
        let s1 = repetition_seed(9, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, repetition_seed(9, 0));
    }

    proptest! {
        #[test]
        fn canonical_range(x in -100.0f64..100.0) {
            let p = Phase::from_radians(x).unwrap();
            prop_assert!(p.radians() >= 0.0 && p.radians() < TAU);
        }

        #[test]
        fn periodicity(x in -50.0f64..50.0) {
            let p = Phase::from_radians(x).unwrap();
            let q = Phase::from_radians(x + TAU).unwrap();
            prop_assert!((p.radians() - q.radians()).abs() < 1e-9);
        }

        #[test]
        fn outcome_probabilities_complement(a in 0.0f64..TAU, b in 0.0f64..TAU) {
            let pa = Phase::from_radians(a).unwrap();
            let pb = Phase::from_radians(b).unwrap();
            let p0 = detection_probability(pa, pb);
            prop_assert!((0.0..=1.0).contains(&p0));
            // symmetry of the relative phase
            prop_assert!((p0 - detection_probability(pb, pa)).abs() < 1e-12);
            // flipping the state swaps the detectors
            let flipped = detection_probability(pa.flipped(), pb);
            prop_assert!((p0 + flipped - 1.0).abs() < 1e-12);
        }
    }
}
