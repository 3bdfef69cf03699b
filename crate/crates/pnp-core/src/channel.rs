//! Photon transmission: per-pass loss, auto-compensated fiber semantics,
//! and the slow thermal drift of the control-mode interferometer.
//!
//! The fiber itself adds no phase: message-mode photons retrace their
//! forward path off the mirror, cancelling every fluctuation, and the
//! control-mode passes are phase-stabilized the same way. What survives is
//! the drift of the measuring interferometer between compensation steps,
//! exposed here as a sawtooth offset and applied by the protocol layer to
//! control-mode phases only.

use thiserror::Error;

use crate::optics::{PhaseQubit, RandomStream};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{field} must be within {range}, got {value}")]
    OutOfRange {
        field: &'static str,
        range: &'static str,
        value: f64,
    },
}

/// Channel and interferometer knobs for one session.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Loss probability per one-way pass, in [0, 1].
    pub p_loss: f64,
    /// Interferometer thermal drift in radians per minute.
    pub drift_rate: f64,
    /// Seconds between drift compensation steps.
    pub compensation_interval: f64,
    /// Protocol rounds per second; fixes the wall-clock of a round index.
    pub round_rate: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            p_loss: 0.0,
            drift_rate: 0.6,
            compensation_interval: 5.0,
            round_rate: 1000.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(0.0..=1.0).contains(&self.p_loss) {
            return Err(ChannelError::OutOfRange {
                field: "p_loss",
                range: "[0, 1]",
                value: self.p_loss,
            });
        }
        if !self.drift_rate.is_finite() || self.drift_rate < 0.0 {
            return Err(ChannelError::OutOfRange {
                field: "drift_rate",
                range: "[0, ∞)",
                value: self.drift_rate,
            });
        }
        if !self.compensation_interval.is_finite() || self.compensation_interval <= 0.0 {
            return Err(ChannelError::OutOfRange {
                field: "compensation_interval",
                range: "(0, ∞)",
                value: self.compensation_interval,
            });
        }
        if !self.round_rate.is_finite() || self.round_rate <= 0.0 {
            return Err(ChannelError::OutOfRange {
                field: "round_rate",
                range: "(0, ∞)",
                value: self.round_rate,
            });
        }
        Ok(())
    }
}

/// Wall-clock position of a round within the session.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriftClock {
    pub round_index: u64,
}

impl DriftClock {
    pub fn at(round_index: u64) -> DriftClock {
        DriftClock { round_index }
    }

    pub fn elapsed_seconds(&self, params: &ChannelParams) -> f64 {
        self.round_index as f64 / params.round_rate
    }
}

/// One attempted pass through the fiber.
#[derive(Debug)]
pub enum TransmitResult {
    Delivered(PhaseQubit),
    Lost,
}

/// Survival draw for one pass: returns false with probability `p_loss`.
pub fn loss_check(p_loss: f64, rng: &mut RandomStream) -> Result<bool, ChannelError> {
    if !(0.0..=1.0).contains(&p_loss) {
        return Err(ChannelError::OutOfRange {
            field: "p_loss",
            range: "[0, 1]",
            value: p_loss,
        });
    }
    if p_loss <= 0.0 {
        return Ok(true);
    }
    if p_loss >= 1.0 {
        return Ok(false);
    }
    Ok(!rng.bernoulli(p_loss))
}

/// Sawtooth drift offset at the round's wall-clock time: accumulates at
/// `drift_rate` and resets to zero at every compensation step.
pub fn drift_offset(clock: DriftClock, params: &ChannelParams) -> f64 {
    let elapsed = clock.elapsed_seconds(params);
    let within = elapsed % params.compensation_interval;
    params.drift_rate / 60.0 * within
}

/// One pass through the fiber: the photon is lost with probability `p_loss`
/// and otherwise delivered with its phase untouched.
pub fn transmit(
    qubit: PhaseQubit,
    params: &ChannelParams,
    rng: &mut RandomStream,
) -> Result<TransmitResult, ChannelError> {
    if loss_check(params.p_loss, rng)? {
        Ok(TransmitResult::Delivered(qubit))
    } else {
        Ok(TransmitResult::Lost)
    }
}
