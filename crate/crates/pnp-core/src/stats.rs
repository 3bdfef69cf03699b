//! Session counters and the derived rates reported to the user.

use serde::{Deserialize, Serialize};

/// Version tag stamped into every emitted report.
pub const SCHEMA_VERSION: &str = "1";

/// Aggregated results of one session (or one campaign, after merging).
///
/// Integer fields are raw counters; rates are derived from them with lost
/// rounds excluded from every denominator. Fields that only apply to one
/// protocol are `None` for the other: `eve_inferred_fraction` requires a
/// both-path intercept, `sifted_*` apply to the BB84 baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub rounds_total: u64,
    pub rounds_lost: u64,
    pub mm_rounds: u64,
    pub cm_rounds: u64,
    pub mm_bit_errors: u64,
    pub mm_qber: f64,
    pub cm_failures: u64,
    pub detection_probability_per_cm_round: f64,
    pub detection_probability_std_error: f64,
    pub eve_inferred_fraction: Option<f64>,
    pub usable_bits_per_round: f64,
    pub usable_bits_per_pass: f64,
    pub sifted_fraction: Option<f64>,
    pub sifted_qber: Option<f64>,
}

/// Which protocol a tally belongs to; decides how usable bits are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TallyKind {
    Deterministic,
    Bb84,
}

/// Raw per-session counters. Merging tallies is associative and
/// commutative, so independently seeded sessions can be combined in any
/// order before deriving rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionTally {
    pub kind: TallyKind,
    /// Channel passes per protocol round: 2 for the two-way protocol,
    /// configurable for BB84.
    pub passes_per_round: u32,
    pub rounds_total: u64,
    pub rounds_lost: u64,
    pub mm_rounds: u64,
    pub cm_rounds: u64,
    pub mm_bit_errors: u64,
    pub cm_failures: u64,
    pub eve_inferred_rounds: u64,
    pub eve_inferred_correct: u64,
    pub sifted_rounds: u64,
    pub sifted_errors: u64,
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

impl SessionTally {
    pub fn deterministic() -> SessionTally {
        SessionTally::empty(TallyKind::Deterministic, 2)
    }

    pub fn bb84(passes_per_round: u32) -> SessionTally {
        SessionTally::empty(TallyKind::Bb84, passes_per_round)
    }

    fn empty(kind: TallyKind, passes_per_round: u32) -> SessionTally {
        SessionTally {
            kind,
            passes_per_round,
            rounds_total: 0,
            rounds_lost: 0,
            mm_rounds: 0,
            cm_rounds: 0,
            mm_bit_errors: 0,
            cm_failures: 0,
            eve_inferred_rounds: 0,
            eve_inferred_correct: 0,
            sifted_rounds: 0,
            sifted_errors: 0,
        }
    }

    /// Adds another session's counters. Only tallies of the same protocol
    /// and pass count may be merged.
    pub fn merge(&mut self, other: &SessionTally) {
        debug_assert_eq!(self.kind, other.kind);
        debug_assert_eq!(self.passes_per_round, other.passes_per_round);
        self.rounds_total += other.rounds_total;
        self.rounds_lost += other.rounds_lost;
        self.mm_rounds += other.mm_rounds;
        self.cm_rounds += other.cm_rounds;
        self.mm_bit_errors += other.mm_bit_errors;
        self.cm_failures += other.cm_failures;
        self.eve_inferred_rounds += other.eve_inferred_rounds;
        self.eve_inferred_correct += other.eve_inferred_correct;
        self.sifted_rounds += other.sifted_rounds;
        self.sifted_errors += other.sifted_errors;
    }

    pub fn into_stats(self) -> SessionStats {
        let delivered = self.rounds_total - self.rounds_lost;
        let detection = ratio(self.cm_failures, self.cm_rounds);
        let std_error = if self.cm_rounds == 0 {
            0.0
        } else {
            (detection * (1.0 - detection) / self.cm_rounds as f64).sqrt()
        };
        let usable = match self.kind {
            TallyKind::Deterministic => self.mm_rounds + self.cm_rounds,
            TallyKind::Bb84 => self.sifted_rounds,
        };
        let usable_bits_per_round = ratio(usable, delivered);
        SessionStats {
            rounds_total: self.rounds_total,
            rounds_lost: self.rounds_lost,
            mm_rounds: self.mm_rounds,
            cm_rounds: self.cm_rounds,
            mm_bit_errors: self.mm_bit_errors,
            mm_qber: ratio(self.mm_bit_errors, self.mm_rounds),
            cm_failures: self.cm_failures,
            detection_probability_per_cm_round: detection,
            detection_probability_std_error: std_error,
            eve_inferred_fraction: if self.eve_inferred_rounds > 0 {
                Some(ratio(self.eve_inferred_correct, self.eve_inferred_rounds))
            } else {
                None
            },
            usable_bits_per_round,
            usable_bits_per_pass: usable_bits_per_round / self.passes_per_round as f64,
            sifted_fraction: match self.kind {
                TallyKind::Bb84 => Some(ratio(self.sifted_rounds, delivered)),
                TallyKind::Deterministic => None,
            },
            sifted_qber: match self.kind {
                TallyKind::Bb84 => Some(ratio(self.sifted_errors, self.sifted_rounds)),
                TallyKind::Deterministic => None,
            },
        }
    }
}
