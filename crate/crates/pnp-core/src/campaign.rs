//! Multi-repetition experiment campaigns with documented seed derivation.

use crate::bb84::{run_bb84_parts, BB84Round};
use crate::config::{ConfigError, ProtocolKind, SessionConfig};
use crate::error::Error;
use crate::protocol::{run_session_parts, RoundRecord};
use crate::stats::SessionStats;

pub use crate::optics::repetition_seed;

/// Transcript of one session, per protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum Transcript {
    Deterministic(Vec<RoundRecord>),
    Bb84(Vec<BB84Round>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub stats: SessionStats,
    pub transcript: Transcript,
}

/// Runs one session of whichever protocol the config selects.
pub fn run_once(config: &SessionConfig) -> Result<RunOutput, Error> {
    match config.protocol {
        ProtocolKind::Deterministic => {
            let (tally, transcript) = run_session_parts(config)?;
            Ok(RunOutput {
                stats: tally.into_stats(),
                transcript: Transcript::Deterministic(transcript),
            })
        }
        ProtocolKind::Bb84 => {
            let (tally, transcript) = run_bb84_parts(config)?;
            Ok(RunOutput {
                stats: tally.into_stats(),
                transcript: Transcript::Bb84(transcript),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    /// Counters pooled across all repetitions, rates re-derived from the
    /// pooled counters.
    pub aggregate: SessionStats,
    pub per_repetition: Vec<SessionStats>,
}

/// Runs `repetitions` independent sessions. Repetition `k` uses
/// [`repetition_seed`]`(config.seed, k)`, so any single repetition can be
/// reproduced in isolation; the whole campaign is a pure function of
/// (config, repetitions).
pub fn run_campaign(config: &SessionConfig, repetitions: u64) -> Result<CampaignResult, Error> {
    if repetitions == 0 {
        return Err(Error::Config(ConfigError::InvalidField {
            field: "repetitions",
            reason: "must be at least 1".into(),
        }));
    }
    config.validate()?;
    let mut merged = None;
    let mut per_repetition = Vec::with_capacity(repetitions as usize);
    for k in 0..repetitions {
        let mut rep_config = config.clone();
        rep_config.seed = repetition_seed(config.seed, k);
        let tally = match config.protocol {
            ProtocolKind::Deterministic => run_session_parts(&rep_config)?.0,
            ProtocolKind::Bb84 => run_bb84_parts(&rep_config)?.0,
        };
        per_repetition.push(tally.into_stats());
        match merged.as_mut() {
            None => merged = Some(tally),
            Some(total) => total.merge(&tally),
        }
    }
    Ok(CampaignResult {
        aggregate: merged.expect("at least one repetition").into_stats(),
        per_repetition,
    })
}
