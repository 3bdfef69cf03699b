//! Pluggable eavesdropper strategies on the forward and backward passes.
//!
//! Every implemented attack is of the measure-and-resend family: Eve reads
//! the transiting photon with an analyzer phase of her choosing and injects
//! a fresh photon prepared in the state she observed. When her analyzer is
//! basis-matched to the photon this is exactly invisible; when it is not,
//! she collapses the state and the protocol's control rounds can catch her.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::Phase;

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("{0} must attack at least one path")]
    NoPathSelected(&'static str),
    #[error("same-basis policy requires both paths to be attacked")]
    SameBasisNeedsBothPaths,
}

/// How an intercepting Eve picks her analyzer phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisPolicy {
    /// Fresh uniform draw from {0, π/2} at every tap.
    Random,
    /// The same fixed analyzer phase at every tap.
    Fixed(Phase),
    /// One uniform draw from {0, π/2} per round, reused on both passes.
    /// This is the full-information attack: the XOR of her two outcomes
    /// equals the message bit on every message round.
    SameBasisBothPaths,
}

/// Which eavesdropper runs for the session, and where she taps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttackSpec {
    NoAttack,
    InterceptResend {
        forward: bool,
        backward: bool,
        policy: BasisPolicy,
    },
    /// Denial-of-service: measure-and-resend in a random {0, π/2} basis,
    /// aimed at destroying the transmission rather than reading it. Same
    /// physics as intercept-resend with the random policy; recorded
    /// separately and never credited with message inference.
    Dos {
        forward: bool,
        backward: bool,
    },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        match *self {
            AttackSpec::NoAttack => Ok(()),
            AttackSpec::InterceptResend {
                forward,
                backward,
                policy,
            } => {
                if !forward && !backward {
                    return Err(AdversaryError::NoPathSelected("intercept_resend"));
                }
                if policy == BasisPolicy::SameBasisBothPaths && !(forward && backward) {
                    return Err(AdversaryError::SameBasisNeedsBothPaths);
                }
                Ok(())
            }
            AttackSpec::Dos { forward, backward } => {
                if !forward && !backward {
                    return Err(AdversaryError::NoPathSelected("dos"));
                }
                Ok(())
            }
        }
    }

    pub fn attacks(&self, direction: Direction) -> bool {
        let (forward, backward) = match *self {
            AttackSpec::NoAttack => (false, false),
            AttackSpec::InterceptResend {
                forward, backward, ..
            } => (forward, backward),
            AttackSpec::Dos { forward, backward } => (forward, backward),
        };
        match direction {
            Direction::Forward => forward,
            Direction::Backward => backward,
        }
    }

    fn is_intercept_both(&self) -> bool {
        matches!(
            *self,
            AttackSpec::InterceptResend {
                forward: true,
                backward: true,
                ..
            }
        )
    }
}

/// Direction of the pass being tapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// What Eve did on one pass: analyzer phase used and the bit she read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTap {
    pub basis: Phase,
    pub outcome: u8,
}

/// Eve's per-round record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub forward: Option<PathTap>,
    pub backward: Option<PathTap>,
    /// XOR of the two outcomes; present only when an intercept-resend
    /// attack measured both passes.
    pub inferred_message_bit: Option<u8>,
}

/// Eve's guess at the message bit from a both-path intercept: the XOR of
/// her forward and backward outcomes. Under the same-basis policy this
/// equals the encoded bit with certainty.
pub fn eve_infer_message(forward: &PathTap, backward: &PathTap) -> u8 {
    forward.outcome ^ backward.outcome
}

pub use round_attack::RoundAttack;

mod round_attack {
    use super::*;
    use crate::optics::{measure, PhaseQubit, RandomStream};

    /// One round of eavesdropping. Created after the forward photon enters
    /// the channel; holds the shared basis for the same-basis policy and
    /// accumulates the taps into an [`EveRecord`].
    pub struct RoundAttack<'a> {
        spec: &'a AttackSpec,
        shared_basis: Option<Phase>,
        forward: Option<PathTap>,
        backward: Option<PathTap>,
    }

    impl<'a> RoundAttack<'a> {
        pub fn begin(spec: &'a AttackSpec, rng: &mut RandomStream) -> RoundAttack<'a> {
            let shared_basis = match spec {
                AttackSpec::InterceptResend {
                    policy: BasisPolicy::SameBasisBothPaths,
                    ..
                } => Some(random_basis(rng)),
                _ => None,
            };
            RoundAttack {
                spec,
                shared_basis,
                forward: None,
                backward: None,
            }
        }

        /// Taps one pass. Untapped passes return the qubit unchanged; a
        /// tapped pass measures it and substitutes a fresh photon prepared
        /// at `analyzer + outcome·π`.
        pub fn tap(
            &mut self,
            qubit: PhaseQubit,
            direction: Direction,
            rng: &mut RandomStream,
        ) -> PhaseQubit {
            if !self.spec.attacks(direction) {
                return qubit;
            }
            let basis = match self.spec {
                AttackSpec::InterceptResend { policy, .. } => match policy {
                    BasisPolicy::Random => random_basis(rng),
                    BasisPolicy::Fixed(phase) => *phase,
                    BasisPolicy::SameBasisBothPaths => {
                        self.shared_basis.expect("shared basis drawn at begin")
                    }
                },
                AttackSpec::Dos { .. } => random_basis(rng),
                AttackSpec::NoAttack => unreachable!("NoAttack taps nothing"),
            };
            let outcome = measure(qubit, basis, rng).bit();
            let tap = PathTap { basis, outcome };
            match direction {
                Direction::Forward => self.forward = Some(tap),
                Direction::Backward => self.backward = Some(tap),
            }
            let resend = if outcome == 0 { basis } else { basis.flipped() };
            PhaseQubit::prepare(resend)
        }

        /// Final record, or `None` when Eve never touched the round.
        pub fn into_record(self) -> Option<EveRecord> {
            if self.forward.is_none() && self.backward.is_none() {
                return None;
            }
            let inferred_message_bit = match (&self.forward, &self.backward) {
                (Some(f), Some(b)) if self.spec.is_intercept_both() => {
                    Some(eve_infer_message(f, b))
                }
                _ => None,
            };
            Some(EveRecord {
                forward: self.forward,
                backward: self.backward,
                inferred_message_bit,
            })
        }
    }

    fn random_basis(rng: &mut RandomStream) -> Phase {
        if rng.bit() == 0 {
            Phase::ZERO
        } else {
            Phase::QUARTER_TURN
        }
    }
}
