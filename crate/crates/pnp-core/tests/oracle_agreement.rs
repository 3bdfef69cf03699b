//! Monte Carlo estimates must agree with the exact enumeration oracle
//! across the whole attack matrix: every event probability estimated from
//! 10⁵ rounds lies within 4σ of the exact rational value (4σ rather than 3σ
//! because ~30 comparisons run here). Probabilities that the oracle pins to
//! exactly 0 or 1 must hold exactly in the sample.

use pnp_core::adversary::{AttackSpec, BasisPolicy};
use pnp_core::channel::ChannelParams;
use pnp_core::config::SessionConfig;
use pnp_core::oracle::{
    exact_event_probabilities, p_control_fail, p_eve_correct, p_message_error, total_probability,
};
use pnp_core::protocol::{run_session, Mode};
use pnp_core::Phase;

fn discrete_config(attack: AttackSpec, seed: u64) -> SessionConfig {
    SessionConfig {
        n_rounds: 100_000,
        control_probability: 0.5,
        seed,
        attack,
        channel: ChannelParams {
            drift_rate: 0.0,
            ..ChannelParams::default()
        },
        ..SessionConfig::default()
    }
}

fn as_f64(p: num_rational::Ratio<u64>) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

/// |estimate − p| within 4·√(p(1−p)/n); exact match demanded when p ∈ {0, 1}.
fn assert_within_4_sigma(label: &str, estimate: f64, p: f64, n: u64) {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    if sigma == 0.0 {
        assert_eq!(estimate, p, "{label}: exact event drifted");
    } else {
        assert!(
            (estimate - p).abs() <= 4.0 * sigma,
            "{label}: estimate {estimate} vs exact {p} ± {:.6}",
            4.0 * sigma
        );
    }
}

fn attack_matrix() -> Vec<(&'static str, AttackSpec)> {
    let ir = |forward, backward, policy| AttackSpec::InterceptResend {
        forward,
        backward,
        policy,
    };
    vec![
        ("no_attack", AttackSpec::NoAttack),
        ("ir_forward_random", ir(true, false, BasisPolicy::Random)),
        ("ir_backward_random", ir(false, true, BasisPolicy::Random)),
        ("ir_both_random", ir(true, true, BasisPolicy::Random)),
        (
            "ir_both_same",
            ir(true, true, BasisPolicy::SameBasisBothPaths),
        ),
        (
            "ir_forward_fixed0",
            ir(true, false, BasisPolicy::Fixed(Phase::ZERO)),
        ),
        (
            "ir_both_fixed_quarter",
            ir(true, true, BasisPolicy::Fixed(Phase::QUARTER_TURN)),
        ),
        (
            "dos_forward",
            AttackSpec::Dos {
                forward: true,
                backward: false,
            },
        ),
        (
            "dos_backward",
            AttackSpec::Dos {
                forward: false,
                backward: true,
            },
        ),
        (
            "dos_both",
            AttackSpec::Dos {
                forward: true,
                backward: true,
            },
        ),
    ]
}

#[test]
fn monte_carlo_matches_the_exact_oracle_across_the_attack_matrix() {
    for (index, (name, attack)) in attack_matrix().into_iter().enumerate() {
        let cm = exact_event_probabilities(&attack, Mode::Control).unwrap();
        let mm = exact_event_probabilities(&attack, Mode::Message).unwrap();
        assert_eq!(total_probability(&cm), num_rational::Ratio::new(1, 1));
        assert_eq!(total_probability(&mm), num_rational::Ratio::new(1, 1));

        let config = discrete_config(attack, 9_000 + index as u64);
        let (stats, _) = run_session(&config).unwrap();
        assert_eq!(stats.rounds_lost, 0);

        assert_within_4_sigma(
            &format!("{name}: P(control fail)"),
            stats.detection_probability_per_cm_round,
            as_f64(p_control_fail(&cm)),
            stats.cm_rounds,
        );
        assert_within_4_sigma(
            &format!("{name}: P(message error)"),
            stats.mm_qber,
            as_f64(p_message_error(&mm)),
            stats.mm_rounds,
        );
        match (p_eve_correct(&mm), stats.eve_inferred_fraction) {
            (Some(exact), Some(observed)) => assert_within_4_sigma(
                &format!("{name}: P(Eve correct)"),
                observed,
                as_f64(exact),
                stats.mm_rounds,
            ),
            (None, None) => {}
            (exact, observed) => {
                panic!("{name}: oracle says {exact:?} but simulation reported {observed:?}")
            }
        }
    }
}
