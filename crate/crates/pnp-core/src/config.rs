//! Session configuration: parsing (key-value text or JSON), validation
//! with per-field diagnostics, and defaults.
//!
//! Key-value configs are one `key = value` per line, `#` comments allowed:
//!
//! ```text
//! n_rounds = 100000
//! control_probability = 0.25
//! seed = 42
//! attack = intercept_resend
//! attack_paths = both
//! basis_policy = same
//! loss = 0.1
//! drift_rate = 0.6
//! comp_interval = 5
//! ```
//!
//! The JSON form carries the same keys, with channel parameters nested
//! under `"channel"` and the attack under `"attack"`:
//!
//! ```json
//! {
//!   "n_rounds": 100000,
//!   "attack": {"kind": "intercept_resend", "paths": "both", "basis_policy": "random"},
//!   "channel": {"p_loss": 0.1}
//! }
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{AttackSpec, BasisPolicy};
use crate::channel::ChannelParams;
use crate::error::Error;
use crate::optics::Phase;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("line {line}: expected 'key = value', got '{text}'")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("invalid JSON config: {0}")]
    Json(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidField {
        field,
        reason: reason.into(),
    }
}

/// Which protocol a session runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Deterministic,
    Bb84,
}

/// Where message-mode bits come from, as configured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageSourceSpec {
    /// Alice draws bits from her random substream.
    Pseudorandom,
    /// ASCII '0'/'1' file (whitespace ignored), read at session start.
    File(PathBuf),
    /// Bits supplied directly in the config.
    Inline(String),
}

/// Resolved message bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageSource {
    Pseudorandom,
    Bits(Vec<u8>),
}

/// All knobs for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub n_rounds: u64,
    pub control_probability: f64,
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub channel: ChannelParams,
    pub attack: AttackSpec,
    pub message_source: MessageSourceSpec,
    /// Channel passes per BB84 round: 1 for one-way, 2 for a two-way fiber
    /// arrangement (only the loss exponent differs).
    pub bb84_passes: u32,
}

impl Default for SessionConfig {
    fn default() -> SessionConfig {
        SessionConfig {
            n_rounds: 100_000,
            control_probability: 0.25,
            seed: 0,
            protocol: ProtocolKind::Deterministic,
            channel: ChannelParams::default(),
            attack: AttackSpec::NoAttack,
            message_source: MessageSourceSpec::Pseudorandom,
            bb84_passes: 1,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_rounds == 0 {
            return Err(invalid("n_rounds", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.control_probability) {
            return Err(invalid(
                "control_probability",
                format!("must be within [0, 1], got {}", self.control_probability),
            ));
        }
        self.channel
            .validate()
            .map_err(|e| ConfigError::InvalidField {
                field: "channel",
                reason: e.to_string(),
            })?;
        self.attack
            .validate()
            .map_err(|e| ConfigError::InvalidField {
                field: "attack",
                reason: e.to_string(),
            })?;
        if !(1..=2).contains(&self.bb84_passes) {
            return Err(invalid("bb84_passes", "must be 1 or 2"));
        }
        Ok(())
    }

    /// Loads the configured message bits; reads the file variant from disk.
    pub fn resolve_message_source(&self) -> Result<MessageSource, Error> {
        match &self.message_source {
            MessageSourceSpec::Pseudorandom => Ok(MessageSource::Pseudorandom),
            MessageSourceSpec::Inline(text) => Ok(MessageSource::Bits(
                parse_bitstring(text).map_err(Error::Config)?,
            )),
            MessageSourceSpec::File(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                Ok(MessageSource::Bits(
                    parse_bitstring(&text).map_err(Error::Config)?,
                ))
            }
        }
    }
}

fn parse_bitstring(text: &str) -> Result<Vec<u8>, ConfigError> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(invalid(
                "message_source",
                format!("expected only '0'/'1' bits, found '{other}'"),
            )),
        })
        .collect()
}

/// Accumulates attack settings from separate keys/flags, then builds the
/// validated [`AttackSpec`]. Shared between config files and CLI flags.
#[derive(Debug, Default, Clone)]
pub struct AttackBuilder {
    pub kind: Option<String>,
    pub paths: Option<String>,
    pub basis_policy: Option<String>,
}

impl AttackBuilder {
    pub fn is_empty(&self) -> bool {
        self.kind.is_none() && self.paths.is_none() && self.basis_policy.is_none()
    }

    pub fn build(&self) -> Result<AttackSpec, ConfigError> {
        let kind = match &self.kind {
            None if self.is_empty() => return Ok(AttackSpec::NoAttack),
            None => {
                return Err(invalid(
                    "attack",
                    "attack_paths/basis_policy given without attack",
                ))
            }
            Some(kind) => kind.as_str(),
        };
        match kind {
            "none" | "no_attack" => {
                if self.paths.is_some() || self.basis_policy.is_some() {
                    return Err(invalid("attack", "attack=none takes no paths or policy"));
                }
                Ok(AttackSpec::NoAttack)
            }
            "intercept_resend" => {
                let (forward, backward) = parse_paths(self.paths.as_deref().unwrap_or("both"))?;
                let policy = parse_policy(self.basis_policy.as_deref().unwrap_or("random"))?;
                let spec = AttackSpec::InterceptResend {
                    forward,
                    backward,
                    policy,
                };
                spec.validate()
                    .map_err(|e| invalid("attack", e.to_string()))?;
                Ok(spec)
            }
            "dos" => {
                if self.basis_policy.is_some() {
                    return Err(invalid(
                        "basis_policy",
                        "dos always measures in a random basis",
                    ));
                }
                // default target: the backward pass, where the message lives
                let (forward, backward) = parse_paths(self.paths.as_deref().unwrap_or("backward"))?;
                let spec = AttackSpec::Dos { forward, backward };
                spec.validate()
                    .map_err(|e| invalid("attack", e.to_string()))?;
                Ok(spec)
            }
            other => Err(invalid(
                "attack",
                format!("unknown attack '{other}' (expected none, intercept_resend, or dos)"),
            )),
        }
    }
}

fn parse_paths(text: &str) -> Result<(bool, bool), ConfigError> {
    match text {
        "forward" => Ok((true, false)),
        "backward" => Ok((false, true)),
        "both" => Ok((true, true)),
        other => Err(invalid(
            "attack_paths",
            format!("unknown paths '{other}' (expected forward, backward, or both)"),
        )),
    }
}

fn parse_policy(text: &str) -> Result<BasisPolicy, ConfigError> {
    match text {
        "random" => Ok(BasisPolicy::Random),
        "same" | "same_basis" => Ok(BasisPolicy::SameBasisBothPaths),
        other => match other.strip_prefix("fixed:") {
            Some(phase) => Ok(BasisPolicy::Fixed(parse_phase(phase)?)),
            None => Err(invalid(
                "basis_policy",
                format!("unknown policy '{other}' (expected random, same, or fixed:<phase>)"),
            )),
        },
    }
}

/// Parses a phase in radians, or one of the symbolic values
/// `0, pi/2, pi, 3pi/2`.
pub fn parse_phase(text: &str) -> Result<Phase, ConfigError> {
    let radians = match text.trim() {
        "pi/2" => FRAC_PI_2,
        "pi" => PI,
        "3pi/2" => PI + FRAC_PI_2,
        other => other
            .parse::<f64>()
            .map_err(|_| invalid("basis_policy", format!("cannot parse phase '{other}'")))?,
    };
    Phase::from_radians(radians).map_err(|e| invalid("basis_policy", e.to_string()))
}

/// Parses a config from key-value text or JSON (auto-detected), fills
/// defaults, and validates every field. An empty document yields the
/// documented defaults: 10⁵ rounds, control probability 0.25, seed 0, no
/// attack, lossless channel.
pub fn parse_config(text: &str) -> Result<SessionConfig, ConfigError> {
    let config = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_key_value(text)?
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    n_rounds: Option<u64>,
    control_probability: Option<f64>,
    seed: Option<u64>,
    protocol: Option<ProtocolKind>,
    channel: Option<ChannelParams>,
    attack: Option<AttackDoc>,
    message_source: Option<String>,
    bb84_passes: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackDoc {
    kind: String,
    paths: Option<String>,
    basis_policy: Option<String>,
}

fn parse_json(text: &str) -> Result<SessionConfig, ConfigError> {
    let doc: ConfigDoc =
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let mut config = SessionConfig::default();
    if let Some(n) = doc.n_rounds {
        config.n_rounds = n;
    }
    if let Some(c) = doc.control_probability {
        config.control_probability = c;
    }
    if let Some(seed) = doc.seed {
        config.seed = seed;
    }
    if let Some(protocol) = doc.protocol {
        config.protocol = protocol;
    }
    if let Some(channel) = doc.channel {
        config.channel = channel;
    }
    if let Some(attack) = doc.attack {
        config.attack = AttackBuilder {
            kind: Some(attack.kind),
            paths: attack.paths,
            basis_policy: attack.basis_policy,
        }
        .build()?;
    }
    if let Some(source) = doc.message_source {
        config.message_source = parse_message_source(&source)?;
    }
    if let Some(passes) = doc.bb84_passes {
        config.bb84_passes = passes;
    }
    Ok(config)
}

/// Parses a message-source token: `pseudorandom`, `file:<path>`, or
/// `bits:<01…>`.
pub fn parse_message_source(text: &str) -> Result<MessageSourceSpec, ConfigError> {
    if text == "pseudorandom" {
        Ok(MessageSourceSpec::Pseudorandom)
    } else if let Some(path) = text.strip_prefix("file:") {
        Ok(MessageSourceSpec::File(PathBuf::from(path)))
    } else if let Some(bits) = text.strip_prefix("bits:") {
        parse_bitstring(bits)?;
        Ok(MessageSourceSpec::Inline(bits.to_string()))
    } else {
        Err(invalid(
            "message_source",
            format!("expected pseudorandom, file:<path>, or bits:<01…>, got '{text}'"),
        ))
    }
}

fn parse_key_value(text: &str) -> Result<SessionConfig, ConfigError> {
    let mut config = SessionConfig::default();
    let mut attack = AttackBuilder::default();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::MalformedLine {
                line: line_no,
                text: line.to_string(),
            })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n_rounds" | "rounds" => {
                config.n_rounds = value.parse().map_err(|_| {
                    invalid("n_rounds", format!("not a positive integer: '{value}'"))
                })?;
            }
            "control_probability" | "control_prob" | "c" => {
                config.control_probability = value.parse().map_err(|_| {
                    invalid("control_probability", format!("not a number: '{value}'"))
                })?;
            }
            "seed" => {
                config.seed = value.parse().map_err(|_| {
                    invalid("seed", format!("not a 64-bit unsigned integer: '{value}'"))
                })?;
            }
            "protocol" => {
                config.protocol = match value {
                    "deterministic" => ProtocolKind::Deterministic,
                    "bb84" => ProtocolKind::Bb84,
                    other => {
                        return Err(invalid(
                            "protocol",
                            format!("expected deterministic or bb84, got '{other}'"),
                        ))
                    }
                };
            }
            "loss" | "p_loss" => {
                config.channel.p_loss = value
                    .parse()
                    .map_err(|_| invalid("p_loss", format!("not a number: '{value}'")))?;
            }
            "drift_rate" => {
                config.channel.drift_rate = value
                    .parse()
                    .map_err(|_| invalid("drift_rate", format!("not a number: '{value}'")))?;
            }
            "comp_interval" | "compensation_interval" => {
                config.channel.compensation_interval = value.parse().map_err(|_| {
                    invalid("compensation_interval", format!("not a number: '{value}'"))
                })?;
            }
            "round_rate" => {
                config.channel.round_rate = value
                    .parse()
                    .map_err(|_| invalid("round_rate", format!("not a number: '{value}'")))?;
            }
            "attack" => attack.kind = Some(value.to_string()),
            "attack_paths" => attack.paths = Some(value.to_string()),
            "basis_policy" => attack.basis_policy = Some(value.to_string()),
            "message_source" => config.message_source = parse_message_source(value)?,
            "bb84_passes" => {
                config.bb84_passes = value
                    .parse()
                    .map_err(|_| invalid("bb84_passes", format!("not an integer: '{value}'")))?;
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: other.to_string(),
                })
            }
        }
    }
    config.attack = attack.build()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_documented_defaults() {
        let config = parse_config("").unwrap();
        assert_eq!(config, SessionConfig::default());
        assert_eq!(config.n_rounds, 100_000);
        assert_eq!(config.control_probability, 0.25);
        assert_eq!(config.attack, AttackSpec::NoAttack);
        assert_eq!(config.channel.p_loss, 0.0);
    }

    #[test]
    fn out_of_range_probability_names_the_field() {
        let err = parse_config("c = 1.5").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::InvalidField {
                field: "control_probability",
                ..
            }
        ));
    }

    #[test]
    fn attack_selection_key_value() {
        let config =
            parse_config("attack = intercept_resend\nattack_paths = both\nbasis_policy = same\n")
                .unwrap();
        assert_eq!(
            config.attack,
            AttackSpec::InterceptResend {
                forward: true,
                backward: true,
                policy: BasisPolicy::SameBasisBothPaths,
            }
        );
    }

    #[test]
    fn dos_defaults_to_backward() {
        let config = parse_config("attack = dos").unwrap();
        assert_eq!(
            config.attack,
            AttackSpec::Dos {
                forward: false,
                backward: true
            }
        );
    }

    #[test]
    fn fixed_basis_accepts_symbolic_phases() {
        let config =
            parse_config("attack = intercept_resend\nbasis_policy = fixed:pi/2\n").unwrap();
        assert_eq!(
            config.attack,
            AttackSpec::InterceptResend {
                forward: true,
                backward: true,
                policy: BasisPolicy::Fixed(Phase::QUARTER_TURN),
            }
        );
    }

    #[test]
    fn json_config_round() {
        let config = parse_config(
            r#"{
                "n_rounds": 5000,
                "control_probability": 0.5,
                "seed": 7,
                "channel": {"p_loss": 0.1},
                "attack": {"kind": "intercept_resend", "paths": "forward", "basis_policy": "random"}
            }"#,
        )
        .unwrap();
        assert_eq!(config.n_rounds, 5000);
        assert_eq!(config.channel.p_loss, 0.1);
        // unspecified channel fields keep their defaults
        assert_eq!(config.channel.compensation_interval, 5.0);
        assert_eq!(
            config.attack,
            AttackSpec::InterceptResend {
                forward: true,
                backward: false,
                policy: BasisPolicy::Random,
            }
        );
    }

    #[test]
    fn json_rejects_unknown_fields() {
        assert!(matches!(
            parse_config(r#"{"rounds": 10}"#),
            Err(ConfigError::Json(_))
        ));
    }

    #[test]
    fn key_value_rejects_unknown_keys_and_garbage() {
        assert!(matches!(
            parse_config("frobnicate = 1"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("n_rounds"),
            Err(ConfigError::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn paths_without_attack_is_an_error() {
        assert!(parse_config("attack_paths = both").is_err());
    }

    #[test]
    fn message_source_forms() {
        let config = parse_config("message_source = bits:0101").unwrap();
        assert_eq!(
            config.message_source,
            MessageSourceSpec::Inline("0101".into())
        );
        let config = parse_config("message_source = file:msg.txt").unwrap();
        assert_eq!(
            config.message_source,
            MessageSourceSpec::File("msg.txt".into())
        );
        assert!(parse_config("message_source = bits:012").is_err());
    }

    #[test]
    fn inline_bits_resolve() {
        let config = SessionConfig {
            message_source: MessageSourceSpec::Inline("01 10\n1".into()),
            ..SessionConfig::default()
        };
        assert_eq!(
            config.resolve_message_source().unwrap(),
            MessageSource::Bits(vec![0, 1, 1, 0, 1])
        );
    }

    #[test]
    fn validation_covers_nested_params() {
        let mut config = SessionConfig::default();
        config.channel.p_loss = -0.5;
        assert!(matches!(
            config.validate(),
            Err(ConfigError::InvalidField {
                field: "channel",
                ..
            })
        ));
        let config = SessionConfig {
            n_rounds: 0,
            ..SessionConfig::default()
        };
        assert!(matches!(
            config.validate(),
            Err(ConfigError::InvalidField {
                field: "n_rounds",
                ..
            })
        ));
    }
}
