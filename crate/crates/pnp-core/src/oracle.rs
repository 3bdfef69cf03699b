//! Exact event probabilities by exhaustive enumeration.
//!
//! In the discrete setting (no loss, no drift) every probability in a round
//! is a product of the uniform choice weights (1/4 for Bob's phase, 1/2 for
//! Alice's basis or the message bit, 1/2 per random analyzer) and Born
//! branch weights from {0, 1/2, 1}. Walking every branch with rational
//! arithmetic therefore gives event probabilities that are exact, not
//! estimates — the Monte Carlo path is checked against these.
//!
//! The walk below re-derives the round logic from the phase algebra alone
//! (quarter-turn integers, no shared code with the sampling simulator), so
//! the two routes stay independent.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::adversary::{AttackSpec, BasisPolicy};
use crate::protocol::Mode;

/// Exact probability: a ratio of machine integers. All protocol weights are
/// dyadic, so u64 components never overflow.
pub type Prob = Ratio<u64>;

fn prob(numerator: u64, denominator: u64) -> Prob {
    Ratio::new(numerator, denominator)
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("exact oracle requires quarter-turn phases; fixed basis {0} rad is continuous")]
    ContinuousPhase(f64),
    #[error("invalid attack: {0}")]
    InvalidAttack(String),
}

/// One enumerated event class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventLabel {
    ControlPass,
    ControlFail,
    /// Joint message-round outcome: whether Bob decoded the wrong bit, and
    /// whether Eve's inferred bit (when she measured both passes) was right.
    Message {
        bob_error: bool,
        eve_correct: Option<bool>,
    },
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventLabel::ControlPass => write!(f, "control_pass"),
            EventLabel::ControlFail => write!(f, "control_fail"),
            EventLabel::Message {
                bob_error,
                eve_correct,
            } => {
                write!(f, "message_{}", if *bob_error { "error" } else { "ok" })?;
                match eve_correct {
                    Some(true) => write!(f, "_eve_correct"),
                    Some(false) => write!(f, "_eve_wrong"),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub label: EventLabel,
    pub probability: Prob,
}

/// A tapped pass in the enumeration: Eve's analyzer and her outcome, both
/// in quarter turns / bits.
type Tap = Option<(u8, u8)>;

/// Born branches for measuring a quarter-turn `state` with a quarter-turn
/// `analyzer`: detector bit and its exact weight.
fn measure_branches(state: u8, analyzer: u8) -> Vec<(Prob, u8)> {
    match (state + 4 - analyzer) % 4 {
        0 => vec![(prob(1, 1), 0)],
        2 => vec![(prob(1, 1), 1)],
        _ => vec![(prob(1, 2), 0), (prob(1, 2), 1)],
    }
}

/// Eve's branches for one pass: weight, resent state, and her tap record.
fn tap_branches(
    state: u8,
    attacked: bool,
    policy: Option<&BasisPolicy>,
    shared_basis: Option<u8>,
) -> Result<Vec<(Prob, u8, Tap)>, OracleError> {
    if !attacked {
        return Ok(vec![(prob(1, 1), state, None)]);
    }
    let analyzer_choices: Vec<(Prob, u8)> = match policy {
        // denial-of-service and the random policy both draw uniformly
        None | Some(BasisPolicy::Random) => vec![(prob(1, 2), 0), (prob(1, 2), 1)],
        Some(BasisPolicy::Fixed(phase)) => {
            let q = phase
                .quarter_turns()
                .ok_or(OracleError::ContinuousPhase(phase.radians()))?;
            vec![(prob(1, 1), q)]
        }
        Some(BasisPolicy::SameBasisBothPaths) => {
            vec![(
                prob(1, 1),
                shared_basis.expect("shared basis enumerated per round"),
            )]
        }
    };
    let mut branches = Vec::new();
    for (w_basis, analyzer) in analyzer_choices {
        for (w_born, outcome) in measure_branches(state, analyzer) {
            let resent = (analyzer + 2 * outcome) % 4;
            branches.push((w_basis * w_born, resent, Some((analyzer, outcome))));
        }
    }
    Ok(branches)
}

fn attack_parts(spec: &AttackSpec) -> (bool, bool, Option<&BasisPolicy>) {
    match spec {
        AttackSpec::NoAttack => (false, false, None),
        AttackSpec::InterceptResend {
            forward,
            backward,
            policy,
        } => (*forward, *backward, Some(policy)),
        AttackSpec::Dos { forward, backward } => (*forward, *backward, None),
    }
}

/// The matched pass's expected bit: 0 for equal announced phases, 1 for a
/// π difference.
fn expected_bit(announced: u8, reference: u8) -> u8 {
    ((announced + 4 - reference) % 4) / 2
}

/// Enumerates every branch of one protocol round under `spec` in the given
/// mode and returns the exact probability of each event class. Probabilities
/// sum to exactly 1. Continuous fixed-basis attacks are rejected: the exact
/// walk only covers the quarter-turn grid.
pub fn exact_event_probabilities(
    spec: &AttackSpec,
    mode: Mode,
) -> Result<Vec<ExactOutcome>, OracleError> {
    spec.validate()
        .map_err(|e| OracleError::InvalidAttack(e.to_string()))?;
    let (fwd, bwd, policy) = attack_parts(spec);
    let infers = matches!(
        spec,
        AttackSpec::InterceptResend {
            forward: true,
            backward: true,
            ..
        }
    );

    // one shared analyzer draw per round for the same-basis policy
    let shared_choices: Vec<(Prob, Option<u8>)> =
        if matches!(policy, Some(BasisPolicy::SameBasisBothPaths)) {
            vec![(prob(1, 2), Some(0)), (prob(1, 2), Some(1))]
        } else {
            vec![(prob(1, 1), None)]
        };

    let mut events: BTreeMap<EventLabel, Prob> = BTreeMap::new();
    let mut add = |label: EventLabel, p: Prob| {
        *events.entry(label).or_insert_with(|| prob(0, 1)) += p;
    };

    for qb in 0..4u8 {
        let w_qb = prob(1, 4);
        for (w_shared, shared) in &shared_choices {
            match mode {
                Mode::Message => {
                    for message_bit in 0..2u8 {
                        let w_m = w_qb * *w_shared * prob(1, 2);
                        for (w1, s1, tap1) in tap_branches(qb, fwd, policy, *shared)? {
                            let encoded = (s1 + 2 * message_bit) % 4;
                            for (w2, s2, tap2) in tap_branches(encoded, bwd, policy, *shared)? {
                                for (w3, bob_bit) in measure_branches(s2, qb) {
                                    let eve_correct = match (infers, tap1, tap2) {
                                        (true, Some((_, e1)), Some((_, e2))) => {
                                            Some(e1 ^ e2 == message_bit)
                                        }
                                        _ => None,
                                    };
                                    add(
                                        EventLabel::Message {
                                            bob_error: bob_bit != message_bit,
                                            eve_correct,
                                        },
                                        w_m * w1 * w2 * w3,
                                    );
                                }
                            }
                        }
                    }
                }
                Mode::Control => {
                    for qa in 0..2u8 {
                        let w_qa = w_qb * *w_shared * prob(1, 2);
                        for (w1, s1, _) in tap_branches(qb, fwd, policy, *shared)? {
                            for (wa, alice_bit) in measure_branches(s1, qa) {
                                let reprepared = (qa + 1) % 4;
                                for (w2, s2, _) in tap_branches(reprepared, bwd, policy, *shared)? {
                                    for (wb, bob_bit) in measure_branches(s2, qb) {
                                        let forward_matched = (qb + 4 - qa) % 2 == 0;
                                        let pass = if forward_matched {
                                            alice_bit == expected_bit(qb, qa)
                                        } else {
                                            bob_bit == expected_bit(qb, reprepared)
                                        };
                                        let label = if pass {
                                            EventLabel::ControlPass
                                        } else {
                                            EventLabel::ControlFail
                                        };
                                        add(label, w_qa * w1 * wa * w2 * wb);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(events
        .into_iter()
        .map(|(label, probability)| ExactOutcome { label, probability })
        .collect())
}

pub fn total_probability(outcomes: &[ExactOutcome]) -> Prob {
    outcomes
        .iter()
        .map(|o| o.probability)
        .fold(prob(0, 1), |a, b| a + b)
}

pub fn p_control_fail(outcomes: &[ExactOutcome]) -> Prob {
    outcomes
        .iter()
        .filter(|o| o.label == EventLabel::ControlFail)
        .map(|o| o.probability)
        .fold(prob(0, 1), |a, b| a + b)
}

pub fn p_message_error(outcomes: &[ExactOutcome]) -> Prob {
    outcomes
        .iter()
        .filter(|o| {
            matches!(
                o.label,
                EventLabel::Message {
                    bob_error: true,
                    ..
                }
            )
        })
        .map(|o| o.probability)
        .fold(prob(0, 1), |a, b| a + b)
}

/// Probability that Eve's inferred bit equals the message bit, when her
/// attack measures both passes; `None` otherwise.
pub fn p_eve_correct(outcomes: &[ExactOutcome]) -> Option<Prob> {
    let mut any = false;
    let mut correct = prob(0, 1);
    for outcome in outcomes {
        if let EventLabel::Message {
            eve_correct: Some(c),
            ..
        } = outcome.label
        {
            any = true;
            if c {
                correct += outcome.probability;
            }
        }
    }
    any.then_some(correct)
}
