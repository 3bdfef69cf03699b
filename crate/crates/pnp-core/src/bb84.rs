//! Phase-encoded BB84 baseline for rate and QBER comparison.
//!
//! Runs over the exact same optics, channel, and adversary code as the
//! deterministic protocol, so a bug in the shared kernel cannot silently
//! skew the comparison. The flow is logically one-way: the sender prepares
//! one of the four phases, the receiver measures in a random basis from
//! {0, π/2}, and the round is kept only when the bases match (expected half
//! the time). A two-way fiber arrangement is the same logic with two loss
//! passes, selectable via `bb84_passes`.

use serde::{Deserialize, Serialize};

use crate::adversary::{Direction, RoundAttack};
use crate::channel::{transmit, TransmitResult};
use crate::config::SessionConfig;
use crate::error::Error;
use crate::optics::{measure, PhaseQubit, RandomStream, StreamRole};
use crate::protocol::Basis;
use crate::stats::{SessionStats, SessionTally};

/// One BB84 round: the sender's preparation (phase Φ_A = basis + bit·π),
/// the receiver's basis Φ_B, and the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BB84Round {
    pub round_index: u64,
    pub sender_basis: Basis,
    pub sender_bit: u8,
    pub receiver_basis: Basis,
    /// Receiver's decoded bit; `None` when the photon was lost.
    pub outcome: Option<u8>,
    /// True iff the announced bases match (phase difference 0 or π) and the
    /// photon was delivered.
    pub sifted: bool,
}

pub(crate) fn run_bb84_parts(
    config: &SessionConfig,
) -> Result<(SessionTally, Vec<BB84Round>), Error> {
    config.validate()?;
    let mut sender = RandomStream::for_role(config.seed, StreamRole::Alice);
    let mut receiver = RandomStream::for_role(config.seed, StreamRole::Bob);
    let mut eve = RandomStream::for_role(config.seed, StreamRole::Eve);
    let mut chan = RandomStream::for_role(config.seed, StreamRole::Channel);

    let mut tally = SessionTally::bb84(config.bb84_passes);
    let mut transcript = Vec::with_capacity(config.n_rounds as usize);

    for round_index in 0..config.n_rounds {
        tally.rounds_total += 1;
        let sender_basis = if sender.bit() == 0 {
            Basis::Zero
        } else {
            Basis::Quarter
        };
        let sender_bit = sender.bit();
        let receiver_basis = if receiver.bit() == 0 {
            Basis::Zero
        } else {
            Basis::Quarter
        };

        let phase = if sender_bit == 1 {
            sender_basis.phase().flipped()
        } else {
            sender_basis.phase()
        };
        let mut photon = Some(PhaseQubit::prepare(phase));
        for _ in 0..config.bb84_passes {
            photon = match transmit(
                photon.take().expect("photon present"),
                &config.channel,
                &mut chan,
            )? {
                TransmitResult::Delivered(q) => Some(q),
                TransmitResult::Lost => None,
            };
            if photon.is_none() {
                break;
            }
        }

        let Some(photon) = photon else {
            tally.rounds_lost += 1;
            transcript.push(BB84Round {
                round_index,
                sender_basis,
                sender_bit,
                receiver_basis,
                outcome: None,
                sifted: false,
            });
            continue;
        };

        // BB84's single logical transmission counts as the forward path;
        // backward-only attack configs leave it untouched.
        let mut attack = RoundAttack::begin(&config.attack, &mut eve);
        let photon = attack.tap(photon, Direction::Forward, &mut eve);

        let outcome = measure(photon, receiver_basis.phase(), &mut receiver).bit();
        let sifted = sender_basis == receiver_basis;
        if sifted {
            tally.sifted_rounds += 1;
            if outcome != sender_bit {
                tally.sifted_errors += 1;
            }
        }
        transcript.push(BB84Round {
            round_index,
            sender_basis,
            sender_bit,
            receiver_basis,
            outcome: Some(outcome),
            sifted,
        });
    }
    Ok((tally, transcript))
}

/// Runs the BB84 baseline with the session's channel, attack, and seed.
/// The statistics share the deterministic protocol's schema: sifted rounds
/// are the usable bits, and `sifted_fraction` / `sifted_qber` are filled in.
pub fn run_bb84_session(config: &SessionConfig) -> Result<(SessionStats, Vec<BB84Round>), Error> {
    let (tally, transcript) = run_bb84_parts(config)?;
    Ok((tally.into_stats(), transcript))
}
