//! The deterministic two-way session: Bob's four-phase preparation, Alice's
//! message/control modes, matched-path verdicts, transcripts, and the
//! one-time-pad dialogue built on top.
//!
//! Message mode (MM): Alice leaves the transiting photon alone to send a 0
//! or phase-flips it by π to send a 1; Bob re-measures with the phase he
//! prepared and decodes deterministically. Control mode (CM): Alice
//! measures with a random basis from {0, π/2} and returns a fresh photon
//! offset by π/2, which guarantees that exactly one of the two passes was
//! basis-matched; the matched pass carries a perfectly correlated bit that
//! both sides can check in public. No round is ever discarded for a basis
//! mismatch, so every delivered round yields either a message bit or a
//! control verdict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{Direction, RoundAttack};
use crate::channel::{drift_offset, transmit, DriftClock, TransmitResult};
use crate::config::{MessageSource, SessionConfig};
use crate::error::Error;
use crate::optics::{measure, DetectorOutcome, Phase, PhaseQubit, RandomStream, StreamRole};
use crate::stats::{SessionStats, SessionTally};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("control_probability must be within [0, 1], got {0}")]
    InvalidControlProbability(f64),
    #[error("phase {0} is outside the protocol set")]
    PhaseOutsideProtocolSet(f64),
    #[error("round {round_index}: control round missing {missing}; cannot verify")]
    MissingAnnouncement {
        round_index: u64,
        missing: &'static str,
    },
    #[error("message source exhausted after {0} bits; not enough bits for the configured rounds")]
    MessageExhausted(u64),
    #[error("reply of {reply} bits exceeds the {delivered} delivered message bits")]
    ReplyTooLong { reply: usize, delivered: usize },
    #[error("message not deliverable within {0} rounds (loss too high?)")]
    RoundBudgetExhausted(u64),
    #[error("message bits must be 0 or 1")]
    InvalidMessageBit,
}

/// The two conjugate preparation/measurement bases: phase 0 and phase π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Zero,
    Quarter,
}

impl Basis {
    pub fn phase(self) -> Phase {
        match self {
            Basis::Zero => Phase::ZERO,
            Basis::Quarter => Phase::QUARTER_TURN,
        }
    }

    fn from_bit(bit: u8) -> Basis {
        if bit.is_multiple_of(2) {
            Basis::Zero
        } else {
            Basis::Quarter
        }
    }
}

/// Bob's round preparation: a basis and a bit, giving Φ_B = basis + bit·π,
/// uniform over {0, π/2, π, 3π/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BobPreparation {
    pub basis: Basis,
    pub bit: u8,
}

impl BobPreparation {
    pub fn phase(&self) -> Phase {
        let offset = if self.bit % 2 == 1 {
            Phase::HALF_TURN
        } else {
            Phase::ZERO
        };
        self.basis.phase() + offset
    }
}

/// Alice's per-round task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Message,
    Control,
}

/// What Alice did with the incoming photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceAction {
    /// Message mode: identity for 0, phase-flip π for 1.
    Encode { message_bit: u8 },
    /// Control mode: measured with `basis` (Φ_A), read `outcome`, and
    /// returned a fresh photon at Φ'_A = Φ_A + π/2.
    Control { basis: Basis, outcome: u8 },
}

/// Φ'_A for a control round: the re-prepared phase before drift, always
/// π/2 or π.
pub fn control_reprepare_phase(basis: Basis) -> Phase {
    basis.phase() + Phase::QUARTER_TURN
}

/// Which pass of a control round is basis-matched (phase difference 0 or π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedPath {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlVerdict {
    Pass,
    Fail,
}

/// Terminal classification of a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundResult {
    MessageBit(u8),
    ControlPass,
    ControlFail,
    Lost,
}

/// Full transcript entry for one round. `mode` and `alice_action` are absent
/// when the forward photon never reached Alice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u64,
    pub mode: Option<Mode>,
    pub bob_prep: BobPreparation,
    pub alice_action: Option<AliceAction>,
    pub bob_outcome: Option<u8>,
    pub eve_trace: Option<crate::adversary::EveRecord>,
    pub drift_applied: f64,
    pub result: RoundResult,
}

/// Draws Bob's preparation (basis bit first, value bit second) and the
/// matching photon.
pub fn bob_prepare_round(rng: &mut RandomStream) -> (BobPreparation, PhaseQubit) {
    let prep = BobPreparation {
        basis: Basis::from_bit(rng.bit()),
        bit: rng.bit(),
    };
    let qubit = PhaseQubit::prepare(prep.phase());
    (prep, qubit)
}

/// Alice's per-round coin: control mode with probability `control_probability`.
pub fn choose_mode(
    control_probability: f64,
    rng: &mut RandomStream,
) -> Result<Mode, ProtocolError> {
    if !(0.0..=1.0).contains(&control_probability) {
        return Err(ProtocolError::InvalidControlProbability(
            control_probability,
        ));
    }
    if rng.bernoulli(control_probability) {
        Ok(Mode::Control)
    } else {
        Ok(Mode::Message)
    }
}

/// Message-mode encoding: identity for 0, π phase-flip for 1.
pub fn alice_message_mode(qubit: PhaseQubit, message_bit: u8) -> PhaseQubit {
    if message_bit % 2 == 1 {
        qubit.apply_phase(Phase::HALF_TURN)
    } else {
        qubit.apply_phase(Phase::ZERO)
    }
}

/// Bob's message-mode decode. He measured with his own Φ_B, so the detector
/// index is the message bit directly.
pub fn bob_decode_mm(outcome: DetectorOutcome) -> u8 {
    outcome.bit()
}

/// Control mode: measure the incoming photon with a fresh random basis
/// (plus the interferometer's current drift) and return a new photon at
/// Φ'_A = Φ_A + π/2 (plus the same drift — one physical interferometer does
/// both).
pub fn alice_control_mode(
    qubit: PhaseQubit,
    drift: f64,
    rng: &mut RandomStream,
) -> (AliceAction, PhaseQubit) {
    let basis = Basis::from_bit(rng.bit());
    let drift_phase = Phase::from_radians(drift).expect("drift offsets are finite");
    let analyzer = basis.phase() + drift_phase;
    let outcome = measure(qubit, analyzer, rng).bit();
    let reprepared = PhaseQubit::prepare(control_reprepare_phase(basis) + drift_phase);
    (AliceAction::Control { basis, outcome }, reprepared)
}

/// Which pass of a control round is basis-matched. Total on the protocol
/// grid: Φ_B ∈ {0, π/2, π, 3π/2} × Φ_A ∈ {0, π/2} always matches exactly
/// one pass, because Φ'_A = Φ_A + π/2 flips the parity.
pub fn matched_path(phi_b: Phase, phi_a: Phase) -> Result<MatchedPath, ProtocolError> {
    let qb = phi_b
        .quarter_turns()
        .ok_or(ProtocolError::PhaseOutsideProtocolSet(phi_b.radians()))?;
    let qa = phi_a
        .quarter_turns()
        .filter(|&k| k < 2)
        .ok_or(ProtocolError::PhaseOutsideProtocolSet(phi_a.radians()))?;
    if (qb + 4 - qa) % 2 == 0 {
        Ok(MatchedPath::Forward)
    } else {
        Ok(MatchedPath::Backward)
    }
}

/// The matched pass's expected correlation bit: 0 when the two announced
/// phases are equal, 1 when they differ by π.
fn expected_bit(announced: u8, reference: u8) -> u8 {
    ((announced + 4 - reference) % 4) / 2
}

fn control_verdict(
    prep: &BobPreparation,
    alice_basis: Basis,
    alice_outcome: u8,
    bob_outcome: u8,
) -> ControlVerdict {
    let qb = prep
        .phase()
        .quarter_turns()
        .expect("Bob's preparation phases are quarter turns");
    let qa = alice_basis
        .phase()
        .quarter_turns()
        .expect("Alice's control bases are quarter turns");
    let path = matched_path(prep.phase(), alice_basis.phase())
        .expect("protocol phases are inside the protocol set");
    let pass = match path {
        // Alice's measurement of Bob's photon is the correlated one
        MatchedPath::Forward => alice_outcome == expected_bit(qb, qa),
        // Bob's measurement of Alice's re-prepared photon is
        MatchedPath::Backward => {
            let qa_prime = (qa + 1) % 4;
            bob_outcome == expected_bit(qb, qa_prime)
        }
    };
    if pass {
        ControlVerdict::Pass
    } else {
        ControlVerdict::Fail
    }
}

/// Re-derives the control verdict from a round's public announcements:
/// (Φ_A, Alice's outcome) and (Φ_B, Bob's outcome). Errors if any
/// announcement is missing — an unverifiable round is never passed.
pub fn cm_verify(record: &RoundRecord) -> Result<ControlVerdict, ProtocolError> {
    let missing = |what| ProtocolError::MissingAnnouncement {
        round_index: record.round_index,
        missing: what,
    };
    if record.mode != Some(Mode::Control) {
        return Err(missing("control mode"));
    }
    let (basis, alice_outcome) = match record.alice_action {
        Some(AliceAction::Control { basis, outcome }) => (basis, outcome),
        _ => return Err(missing("Alice's announcement")),
    };
    let bob_outcome = record.bob_outcome.ok_or_else(|| missing("Bob's outcome"))?;
    Ok(control_verdict(
        &record.bob_prep,
        basis,
        alice_outcome,
        bob_outcome,
    ))
}

enum MessageCursor {
    Pseudorandom,
    Bits { bits: Vec<u8>, next: usize },
}

impl MessageCursor {
    fn from_source(source: &MessageSource) -> Result<MessageCursor, ProtocolError> {
        match source {
            MessageSource::Pseudorandom => Ok(MessageCursor::Pseudorandom),
            MessageSource::Bits(bits) => {
                if bits.iter().any(|&b| b > 1) {
                    return Err(ProtocolError::InvalidMessageBit);
                }
                Ok(MessageCursor::Bits {
                    bits: bits.clone(),
                    next: 0,
                })
            }
        }
    }

    fn next_bit(&mut self, rng: &mut RandomStream) -> Option<u8> {
        match self {
            MessageCursor::Pseudorandom => Some(rng.bit()),
            MessageCursor::Bits { bits, next } => {
                let bit = bits.get(*next).copied();
                if bit.is_some() {
                    *next += 1;
                }
                bit
            }
        }
    }

    fn exhausted(&self) -> bool {
        match self {
            MessageCursor::Pseudorandom => false,
            MessageCursor::Bits { bits, next } => *next >= bits.len(),
        }
    }

    fn consumed(&self) -> u64 {
        match self {
            MessageCursor::Pseudorandom => 0,
            MessageCursor::Bits { next, .. } => *next as u64,
        }
    }
}

struct SessionRunner<'a> {
    config: &'a SessionConfig,
    bob: RandomStream,
    alice: RandomStream,
    eve: RandomStream,
    chan: RandomStream,
    message: MessageCursor,
    tally: SessionTally,
    transcript: Vec<RoundRecord>,
}

impl<'a> SessionRunner<'a> {
    fn new(config: &'a SessionConfig, message: MessageCursor) -> SessionRunner<'a> {
        SessionRunner {
            config,
            bob: RandomStream::for_role(config.seed, StreamRole::Bob),
            alice: RandomStream::for_role(config.seed, StreamRole::Alice),
            eve: RandomStream::for_role(config.seed, StreamRole::Eve),
            chan: RandomStream::for_role(config.seed, StreamRole::Channel),
            message,
            tally: SessionTally::deterministic(),
            transcript: Vec::new(),
        }
    }

    fn run_round(&mut self, round_index: u64) -> Result<(), Error> {
        let clock = DriftClock::at(round_index);
        self.tally.rounds_total += 1;
        let (prep, qubit) = bob_prepare_round(&mut self.bob);

        let qubit = match transmit(qubit, &self.config.channel, &mut self.chan)? {
            TransmitResult::Delivered(q) => q,
            TransmitResult::Lost => {
                self.tally.rounds_lost += 1;
                self.transcript.push(RoundRecord {
                    round_index,
                    mode: None,
                    bob_prep: prep,
                    alice_action: None,
                    bob_outcome: None,
                    eve_trace: None,
                    drift_applied: 0.0,
                    result: RoundResult::Lost,
                });
                return Ok(());
            }
        };

        let mut attack = RoundAttack::begin(&self.config.attack, &mut self.eve);
        let qubit = attack.tap(qubit, Direction::Forward, &mut self.eve);

        let mode = choose_mode(self.config.control_probability, &mut self.alice)
            .map_err(Error::Protocol)?;
        let (action, qubit, drift_applied) = match mode {
            Mode::Message => {
                let bit = self
                    .message
                    .next_bit(&mut self.alice)
                    .ok_or(Error::Protocol(ProtocolError::MessageExhausted(
                        self.message.consumed(),
                    )))?;
                (
                    AliceAction::Encode { message_bit: bit },
                    alice_message_mode(qubit, bit),
                    0.0,
                )
            }
            Mode::Control => {
                let drift = drift_offset(clock, &self.config.channel);
                let (action, qubit) = alice_control_mode(qubit, drift, &mut self.alice);
                (action, qubit, drift)
            }
        };

        let qubit = attack.tap(qubit, Direction::Backward, &mut self.eve);
        let eve_trace = attack.into_record();

        let qubit = match transmit(qubit, &self.config.channel, &mut self.chan)? {
            TransmitResult::Delivered(q) => q,
            TransmitResult::Lost => {
                self.tally.rounds_lost += 1;
                self.transcript.push(RoundRecord {
                    round_index,
                    mode: Some(mode),
                    bob_prep: prep,
                    alice_action: Some(action),
                    bob_outcome: None,
                    eve_trace,
                    drift_applied,
                    result: RoundResult::Lost,
                });
                return Ok(());
            }
        };

        let bob_outcome = measure(qubit, prep.phase(), &mut self.bob);
        let mut record = RoundRecord {
            round_index,
            mode: Some(mode),
            bob_prep: prep,
            alice_action: Some(action),
            bob_outcome: Some(bob_outcome.bit()),
            eve_trace,
            drift_applied,
            result: RoundResult::Lost, // replaced below
        };

        record.result = match mode {
            Mode::Message => {
                let decoded = bob_decode_mm(bob_outcome);
                let encoded = match action {
                    AliceAction::Encode { message_bit } => message_bit,
                    AliceAction::Control { .. } => unreachable!("message round"),
                };
                self.tally.mm_rounds += 1;
                if decoded != encoded {
                    self.tally.mm_bit_errors += 1;
                }
                if let Some(guess) = record
                    .eve_trace
                    .as_ref()
                    .and_then(|t| t.inferred_message_bit)
                {
                    self.tally.eve_inferred_rounds += 1;
                    if guess == encoded {
                        self.tally.eve_inferred_correct += 1;
                    }
                }
                RoundResult::MessageBit(decoded)
            }
            Mode::Control => {
                let verdict = cm_verify(&record).map_err(Error::Protocol)?;
                self.tally.cm_rounds += 1;
                match verdict {
                    ControlVerdict::Pass => RoundResult::ControlPass,
                    ControlVerdict::Fail => {
                        self.tally.cm_failures += 1;
                        RoundResult::ControlFail
                    }
                }
            }
        };
        self.transcript.push(record);
        Ok(())
    }

    fn finish(self) -> (SessionTally, Vec<RoundRecord>) {
        (self.tally, self.transcript)
    }
}

pub(crate) fn run_session_parts(
    config: &SessionConfig,
) -> Result<(SessionTally, Vec<RoundRecord>), Error> {
    config.validate()?;
    let message =
        MessageCursor::from_source(&config.resolve_message_source()?).map_err(Error::Protocol)?;
    let mut runner = SessionRunner::new(config, message);
    for round_index in 0..config.n_rounds {
        runner.run_round(round_index)?;
    }
    Ok(runner.finish())
}

/// Runs one deterministic-protocol session: `n_rounds` two-way rounds with
/// the configured channel, attack, and control probability. Every delivered
/// round contributes either a message bit or a control verdict to the
/// statistics; lost rounds are counted and excluded from the rate
/// denominators.
pub fn run_session(config: &SessionConfig) -> Result<(SessionStats, Vec<RoundRecord>), Error> {
    let (tally, transcript) = run_session_parts(config)?;
    Ok((tally.into_stats(), transcript))
}

/// Result of a quantum-dialogue exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueOutcome {
    /// Message bits Bob decoded from completed message rounds, in order.
    pub delivered_message: Vec<u8>,
    /// Bob's public reply: his answer XOR the message bits he received.
    pub ciphertext: Vec<u8>,
    /// Alice's decryption of the ciphertext with her delivered bits.
    pub recovered_reply: Vec<u8>,
    pub stats: SessionStats,
    #[serde(skip)]
    pub transcript: Vec<RoundRecord>,
}

/// Bidirectional messaging: Alice's bits flow over message rounds; Bob
/// one-time-pads his reply with the message he just received and publishes
/// the ciphertext on the classical channel. Runs rounds until every bit of
/// `message_a` has been consumed (control rounds and losses interleave as
/// configured), then errors if fewer bits were delivered than `reply_b`
/// needs.
pub fn quantum_dialogue(
    config: &SessionConfig,
    message_a: &[u8],
    reply_b: &[u8],
) -> Result<DialogueOutcome, Error> {
    config.validate()?;
    if reply_b.iter().any(|&b| b > 1) {
        return Err(Error::Protocol(ProtocolError::InvalidMessageBit));
    }
    let message = MessageCursor::from_source(&MessageSource::Bits(message_a.to_vec()))
        .map_err(Error::Protocol)?;
    let mut runner = SessionRunner::new(config, message);

    // Generous budget: forward loss and control rounds both delay message
    // consumption, but an undeliverable message must terminate.
    let budget = 1_000_000u64.max(message_a.len() as u64 * 100_000);
    let mut round_index = 0u64;
    while !runner.message.exhausted() {
        if round_index >= budget {
            return Err(Error::Protocol(ProtocolError::RoundBudgetExhausted(budget)));
        }
        runner.run_round(round_index)?;
        round_index += 1;
    }
    let (tally, transcript) = runner.finish();
    let stats = tally.into_stats();

    // Bob's view: the bits he decoded on completed message rounds.
    let delivered_message: Vec<u8> = transcript
        .iter()
        .filter_map(|r| match r.result {
            RoundResult::MessageBit(bit) => Some(bit),
            _ => None,
        })
        .collect();
    // Alice's view: the bits she encoded on those same rounds (she learns
    // which rounds completed from Bob's public loss report).
    let delivered_sent: Vec<u8> = transcript
        .iter()
        .filter_map(|r| match (r.result, r.alice_action) {
            (RoundResult::MessageBit(_), Some(AliceAction::Encode { message_bit })) => {
                Some(message_bit)
            }
            _ => None,
        })
        .collect();

    if reply_b.len() > delivered_message.len() {
        return Err(Error::Protocol(ProtocolError::ReplyTooLong {
            reply: reply_b.len(),
            delivered: delivered_message.len(),
        }));
    }
    let ciphertext: Vec<u8> = reply_b
        .iter()
        .zip(&delivered_message)
        .map(|(r, k)| r ^ k)
        .collect();
    let recovered_reply: Vec<u8> = ciphertext
        .iter()
        .zip(&delivered_sent)
        .map(|(c, k)| c ^ k)
        .collect();

    Ok(DialogueOutcome {
        delivered_message,
        ciphertext,
        recovered_reply,
        stats,
        transcript,
    })
}
