//! Machine-readable output: versioned stats reports (JSON and CSV) and
//! per-round transcripts, both parseable back for replay and auditing.
//!
//! Emission is byte-deterministic: struct field order fixes the JSON key
//! order and the CSV columns, and floats print as their shortest exact
//! representation, so identical stats always serialize to identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{EveRecord, PathTap};
use crate::bb84::BB84Round;
use crate::optics::Phase;
use crate::protocol::{AliceAction, Basis, BobPreparation, Mode, RoundRecord, RoundResult};
use crate::stats::{SessionStats, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported schema version '{0}' (expected '{SCHEMA_VERSION}')")]
    SchemaVersion(String),
    #[error("report is empty")]
    Empty,
    #[error("invalid transcript row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<ReportFormat, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

/// Flat report record: the stats fields in declaration order, prefixed by
/// the schema version.
#[derive(Debug, Serialize, Deserialize)]
struct FlatReport {
    schema_version: String,
    rounds_total: u64,
    rounds_lost: u64,
    mm_rounds: u64,
    cm_rounds: u64,
    mm_bit_errors: u64,
    mm_qber: f64,
    cm_failures: u64,
    detection_probability_per_cm_round: f64,
    detection_probability_std_error: f64,
    eve_inferred_fraction: Option<f64>,
    usable_bits_per_round: f64,
    usable_bits_per_pass: f64,
    sifted_fraction: Option<f64>,
    sifted_qber: Option<f64>,
}

impl FlatReport {
    fn from_stats(stats: &SessionStats) -> FlatReport {
        FlatReport {
            schema_version: SCHEMA_VERSION.to_string(),
            rounds_total: stats.rounds_total,
            rounds_lost: stats.rounds_lost,
            mm_rounds: stats.mm_rounds,
            cm_rounds: stats.cm_rounds,
            mm_bit_errors: stats.mm_bit_errors,
            mm_qber: stats.mm_qber,
            cm_failures: stats.cm_failures,
            detection_probability_per_cm_round: stats.detection_probability_per_cm_round,
            detection_probability_std_error: stats.detection_probability_std_error,
            eve_inferred_fraction: stats.eve_inferred_fraction,
            usable_bits_per_round: stats.usable_bits_per_round,
            usable_bits_per_pass: stats.usable_bits_per_pass,
            sifted_fraction: stats.sifted_fraction,
            sifted_qber: stats.sifted_qber,
        }
    }

    fn into_stats(self) -> Result<SessionStats, ReportError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion(self.schema_version));
        }
        Ok(SessionStats {
            rounds_total: self.rounds_total,
            rounds_lost: self.rounds_lost,
            mm_rounds: self.mm_rounds,
            cm_rounds: self.cm_rounds,
            mm_bit_errors: self.mm_bit_errors,
            mm_qber: self.mm_qber,
            cm_failures: self.cm_failures,
            detection_probability_per_cm_round: self.detection_probability_per_cm_round,
            detection_probability_std_error: self.detection_probability_std_error,
            eve_inferred_fraction: self.eve_inferred_fraction,
            usable_bits_per_round: self.usable_bits_per_round,
            usable_bits_per_pass: self.usable_bits_per_pass,
            sifted_fraction: self.sifted_fraction,
            sifted_qber: self.sifted_qber,
        })
    }
}

/// Serializes a stats report. JSON is a flat object whose keys are the
/// stats field names plus `schema_version`; CSV is a header row and one
/// record.
pub fn emit_report(stats: &SessionStats, format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    let flat = FlatReport::from_stats(stats);
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(&flat)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.serialize(flat)?;
            writer.into_inner().map_err(|e| ReportError::InvalidRow {
                row: 0,
                reason: e.to_string(),
            })
        }
    }
}

/// Serializes a list of stats records (e.g. a campaign's per-repetition
/// table): a JSON array of flat reports, or CSV with one row each.
pub fn emit_report_table(
    stats_list: &[SessionStats],
    format: ReportFormat,
) -> Result<Vec<u8>, ReportError> {
    let flat: Vec<FlatReport> = stats_list.iter().map(FlatReport::from_stats).collect();
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(&flat)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in flat {
                writer.serialize(row)?;
            }
            writer.into_inner().map_err(|e| ReportError::InvalidRow {
                row: 0,
                reason: e.to_string(),
            })
        }
    }
}

/// Parses a report in either format (auto-detected) back into stats.
pub fn parse_report(bytes: &[u8]) -> Result<SessionStats, ReportError> {
    let looks_json = bytes
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .map(|&b| b == b'{')
        .unwrap_or(false);
    let flat: FlatReport = if looks_json {
        serde_json::from_slice(bytes)?
    } else {
        let mut reader = csv::Reader::from_reader(bytes);
        let mut rows = reader.deserialize::<FlatReport>();
        rows.next().ok_or(ReportError::Empty)??
    };
    flat.into_stats()
}

/// Flat per-round row for the deterministic protocol's CSV transcript.
/// Discrete protocol values travel as small integers; phases appear as
/// radians for readability and Eve's analyzers (which may be continuous)
/// as radians authoritatively.
#[derive(Debug, Serialize, Deserialize)]
struct TranscriptRow {
    round_index: u64,
    mode: Option<String>,
    bob_basis: u8,
    bob_bit: u8,
    phi_b: f64,
    message_bit: Option<u8>,
    alice_basis: Option<u8>,
    alice_outcome: Option<u8>,
    phi_a_prime: Option<f64>,
    bob_outcome: Option<u8>,
    eve_forward_basis: Option<f64>,
    eve_forward_outcome: Option<u8>,
    eve_backward_basis: Option<f64>,
    eve_backward_outcome: Option<u8>,
    eve_inferred_bit: Option<u8>,
    drift_applied: f64,
    result: String,
    result_bit: Option<u8>,
}

fn basis_index(basis: Basis) -> u8 {
    match basis {
        Basis::Zero => 0,
        Basis::Quarter => 1,
    }
}

fn basis_from_index(index: u8, row: usize) -> Result<Basis, ReportError> {
    match index {
        0 => Ok(Basis::Zero),
        1 => Ok(Basis::Quarter),
        other => Err(ReportError::InvalidRow {
            row,
            reason: format!("basis index {other} out of range"),
        }),
    }
}

impl TranscriptRow {
    fn from_record(record: &RoundRecord) -> TranscriptRow {
        let (message_bit, alice_basis, alice_outcome, phi_a_prime) = match record.alice_action {
            Some(AliceAction::Encode { message_bit }) => (Some(message_bit), None, None, None),
            Some(AliceAction::Control { basis, outcome }) => (
                None,
                Some(basis_index(basis)),
                Some(outcome),
                Some(crate::protocol::control_reprepare_phase(basis).radians()),
            ),
            None => (None, None, None, None),
        };
        let tap = |t: &Option<PathTap>| {
            (
                t.as_ref().map(|t| t.basis.radians()),
                t.as_ref().map(|t| t.outcome),
            )
        };
        let (eve_forward_basis, eve_forward_outcome) =
            tap(&record.eve_trace.as_ref().map(|t| t.forward).unwrap_or(None));
        let (eve_backward_basis, eve_backward_outcome) = tap(&record
            .eve_trace
            .as_ref()
            .map(|t| t.backward)
            .unwrap_or(None));
        let (result, result_bit) = match record.result {
            RoundResult::MessageBit(bit) => ("message_bit", Some(bit)),
            RoundResult::ControlPass => ("control_pass", None),
            RoundResult::ControlFail => ("control_fail", None),
            RoundResult::Lost => ("lost", None),
        };
        TranscriptRow {
            round_index: record.round_index,
            mode: record.mode.map(|m| {
                match m {
                    Mode::Message => "message",
                    Mode::Control => "control",
                }
                .to_string()
            }),
            bob_basis: basis_index(record.bob_prep.basis),
            bob_bit: record.bob_prep.bit,
            phi_b: record.bob_prep.phase().radians(),
            message_bit,
            alice_basis,
            alice_outcome,
            phi_a_prime,
            bob_outcome: record.bob_outcome,
            eve_forward_basis,
            eve_forward_outcome,
            eve_backward_basis,
            eve_backward_outcome,
            eve_inferred_bit: record
                .eve_trace
                .as_ref()
                .and_then(|t| t.inferred_message_bit),
            drift_applied: record.drift_applied,
            result: result.to_string(),
            result_bit,
        }
    }

    fn into_record(self, row: usize) -> Result<RoundRecord, ReportError> {
        let bad = |reason: String| ReportError::InvalidRow { row, reason };
        let mode = match self.mode.as_deref() {
            None => None,
            Some("message") => Some(Mode::Message),
            Some("control") => Some(Mode::Control),
            Some(other) => return Err(bad(format!("unknown mode '{other}'"))),
        };
        let alice_action = match (mode, self.message_bit, self.alice_basis, self.alice_outcome) {
            (None, None, None, None) => None,
            (Some(Mode::Message), Some(message_bit), None, None) => {
                Some(AliceAction::Encode { message_bit })
            }
            (Some(Mode::Control), None, Some(basis), Some(outcome)) => Some(AliceAction::Control {
                basis: basis_from_index(basis, row)?,
                outcome,
            }),
            _ => return Err(bad("inconsistent mode/action columns".into())),
        };
        let phase = |x: Option<f64>| -> Result<Option<Phase>, ReportError> {
            x.map(|r| Phase::from_radians(r).map_err(|e| bad(e.to_string())))
                .transpose()
        };
        let forward = match (phase(self.eve_forward_basis)?, self.eve_forward_outcome) {
            (Some(basis), Some(outcome)) => Some(PathTap { basis, outcome }),
            (None, None) => None,
            _ => return Err(bad("half-specified forward tap".into())),
        };
        let backward = match (phase(self.eve_backward_basis)?, self.eve_backward_outcome) {
            (Some(basis), Some(outcome)) => Some(PathTap { basis, outcome }),
            (None, None) => None,
            _ => return Err(bad("half-specified backward tap".into())),
        };
        let eve_trace = if forward.is_some() || backward.is_some() {
            Some(EveRecord {
                forward,
                backward,
                inferred_message_bit: self.eve_inferred_bit,
            })
        } else {
            None
        };
        let result = match (self.result.as_str(), self.result_bit) {
            ("message_bit", Some(bit)) => RoundResult::MessageBit(bit),
            ("control_pass", None) => RoundResult::ControlPass,
            ("control_fail", None) => RoundResult::ControlFail,
            ("lost", None) => RoundResult::Lost,
            (other, bit) => return Err(bad(format!("bad result '{other}'/{bit:?}"))),
        };
        Ok(RoundRecord {
            round_index: self.round_index,
            mode,
            bob_prep: BobPreparation {
                basis: basis_from_index(self.bob_basis, row)?,
                bit: self.bob_bit,
            },
            alice_action,
            bob_outcome: self.bob_outcome,
            eve_trace,
            drift_applied: self.drift_applied,
            result,
        })
    }
}

/// CSV transcript: documented header, one row per round, ascending index.
pub fn emit_transcript_csv(records: &[RoundRecord]) -> Result<Vec<u8>, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer.serialize(TranscriptRow::from_record(record))?;
    }
    writer.into_inner().map_err(|e| ReportError::InvalidRow {
        row: 0,
        reason: e.to_string(),
    })
}

pub fn parse_transcript_csv(bytes: &[u8]) -> Result<Vec<RoundRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut records = Vec::new();
    for (index, row) in reader.deserialize::<TranscriptRow>().enumerate() {
        records.push(row?.into_record(index)?);
    }
    Ok(records)
}

/// JSON transcript: an array of structured round records.
pub fn emit_transcript_json(records: &[RoundRecord]) -> Result<Vec<u8>, ReportError> {
    let mut bytes = serde_json::to_vec_pretty(records)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn parse_transcript_json(bytes: &[u8]) -> Result<Vec<RoundRecord>, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// BB84 transcripts share the CSV/JSON treatment with the deterministic
/// protocol's, with their own columns.
pub fn emit_bb84_transcript_csv(rounds: &[BB84Round]) -> Result<Vec<u8>, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for round in rounds {
        writer.serialize(round)?;
    }
    writer.into_inner().map_err(|e| ReportError::InvalidRow {
        row: 0,
        reason: e.to_string(),
    })
}

pub fn emit_bb84_transcript_json(rounds: &[BB84Round]) -> Result<Vec<u8>, ReportError> {
    let mut bytes = serde_json::to_vec_pretty(rounds)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AttackSpec, BasisPolicy};
    use crate::channel::ChannelParams;
    use crate::config::SessionConfig;
    use crate::protocol::run_session;

    fn sample_stats() -> SessionStats {
        let config = SessionConfig {
            n_rounds: 500,
            seed: 71,
            channel: ChannelParams {
                p_loss: 0.1,
                drift_rate: 0.0,
                ..ChannelParams::default()
            },
            attack: AttackSpec::InterceptResend {
                forward: true,
                backward: true,
                policy: BasisPolicy::SameBasisBothPaths,
            },
            ..SessionConfig::default()
        };
        run_session(&config).unwrap().0
    }

    #[test]
    fn json_report_has_versioned_flat_schema() {
        let stats = sample_stats();
        let bytes = emit_report(&stats, ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let object = value.as_object().unwrap();
        assert_eq!(object["schema_version"], "1");
        for key in [
            "rounds_total",
            "rounds_lost",
            "mm_rounds",
            "cm_rounds",
            "mm_bit_errors",
            "mm_qber",
            "cm_failures",
            "detection_probability_per_cm_round",
            "detection_probability_std_error",
            "eve_inferred_fraction",
            "usable_bits_per_round",
            "usable_bits_per_pass",
            "sifted_fraction",
            "sifted_qber",
        ] {
            assert!(object.contains_key(key), "missing key {key}");
        }
        assert_eq!(object.len(), 15);
    }

    #[test]
    fn reports_round_trip_in_both_formats() {
        let stats = sample_stats();
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            let bytes = emit_report(&stats, format).unwrap();
            assert_eq!(parse_report(&bytes).unwrap(), stats, "{format:?}");
        }
    }

    #[test]
    fn emission_is_byte_deterministic() {
        let stats = sample_stats();
        assert_eq!(
            emit_report(&stats, ReportFormat::Json).unwrap(),
            emit_report(&stats, ReportFormat::Json).unwrap()
        );
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let stats = sample_stats();
        let bytes = emit_report(&stats, ReportFormat::Json).unwrap();
        let text = String::from_utf8(bytes).unwrap().replace("\"1\"", "\"99\"");
        assert!(matches!(
            parse_report(text.as_bytes()),
            Err(ReportError::SchemaVersion(v)) if v == "99"
        ));
    }

    #[test]
    fn transcripts_round_trip_through_csv_and_json() {
        let config = SessionConfig {
            n_rounds: 300,
            seed: 72,
            channel: ChannelParams {
                p_loss: 0.1,
                // drifted rounds exercise the continuous-phase columns
                drift_rate: 0.6,
                ..ChannelParams::default()
            },
            attack: AttackSpec::InterceptResend {
                forward: true,
                backward: true,
                policy: BasisPolicy::Random,
            },
            ..SessionConfig::default()
        };
        let (_, transcript) = run_session(&config).unwrap();

        let csv_bytes = emit_transcript_csv(&transcript).unwrap();
        assert_eq!(parse_transcript_csv(&csv_bytes).unwrap(), transcript);

        let json_bytes = emit_transcript_json(&transcript).unwrap();
        assert_eq!(parse_transcript_json(&json_bytes).unwrap(), transcript);

        // header row, then one row per round in index order
        let text = String::from_utf8(csv_bytes).unwrap();
        assert_eq!(text.lines().count(), transcript.len() + 1);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with("round_index,mode,bob_basis"));
    }

    #[test]
    fn malformed_inputs_do_not_panic() {
        assert!(parse_report(b"").is_err());
        assert!(parse_report(b"{\"schema_version\": \"1\"").is_err());
        assert!(parse_transcript_csv(b"round_index,mode\n7,zebra\n").is_err());
        assert!(parse_transcript_json(b"[{\"round_index\": true}]").is_err());
    }
}
