//! Experiment runner for the deterministic two-way protocol, its BB84
//! baseline, the exact probability oracle, and the dialogue demo.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pnp_core::config::{parse_config, parse_message_source, AttackBuilder};
use pnp_core::oracle::{
    exact_event_probabilities, p_control_fail, p_eve_correct, p_message_error, ExactOutcome,
};
use pnp_core::protocol::quantum_dialogue;
use pnp_core::report::{
    emit_bb84_transcript_csv, emit_bb84_transcript_json, emit_report, emit_report_table,
    emit_transcript_csv, emit_transcript_json, ReportFormat,
};
use pnp_core::{
    run_campaign, run_once, Error, Mode, ProtocolKind, SessionConfig, SessionStats, Transcript,
};

#[derive(Parser)]
#[command(
    name = "pnp",
    version,
    about = "Deterministic two-way quantum communication simulator",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the deterministic protocol (message + control modes)
    Simulate(RunArgs),
    /// Run the phase-encoded BB84 baseline
    Bb84(RunArgs),
    /// Print exact event probabilities for an attack (no sampling)
    Oracle(OracleArgs),
    /// Demonstrate quantum dialogue: Bob one-time-pads his reply with the
    /// message he just received
    Dialogue(DialogueArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file, key-value or JSON (flags below override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of protocol rounds
    #[arg(long)]
    rounds: Option<u64>,
    /// Master seed for the deterministic random streams
    #[arg(long)]
    seed: Option<u64>,
    /// Probability of a control round
    #[arg(long = "control-prob")]
    control_prob: Option<f64>,
    /// Attack kind: none, intercept_resend, or dos
    #[arg(long)]
    attack: Option<String>,
    /// Which passes the attack taps: forward, backward, or both
    #[arg(long = "attack-paths")]
    attack_paths: Option<String>,
    /// Eve's analyzer policy: random, same, or `fixed:<phase>`
    #[arg(long = "basis-policy")]
    basis_policy: Option<String>,
    /// Loss probability per one-way pass
    #[arg(long)]
    loss: Option<f64>,
    /// Interferometer drift in radians per minute
    #[arg(long = "drift-rate")]
    drift_rate: Option<f64>,
    /// Seconds between drift compensation steps
    #[arg(long = "comp-interval")]
    comp_interval: Option<f64>,
    /// Protocol rounds per second
    #[arg(long = "round-rate")]
    round_rate: Option<f64>,
    /// Message bits: pseudorandom, `file:<path>`, or `bits:<01…>`
    #[arg(long = "message-source")]
    message_source: Option<String>,
    /// Report destination (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Per-round transcript destination (.json for JSON, CSV otherwise)
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Independent repetitions pooled into the aggregate report
    #[arg(long, default_value_t = 1)]
    repetitions: u64,
    /// Per-repetition stats table destination (repetitions > 1)
    #[arg(long = "per-repetition")]
    per_repetition: Option<PathBuf>,
    /// BB84 channel passes per round: 1 one-way, 2 two-way fiber
    #[arg(long)]
    passes: Option<u32>,
}

#[derive(Args)]
struct OracleArgs {
    /// Attack kind: none, intercept_resend, or dos
    #[arg(long)]
    attack: Option<String>,
    #[arg(long = "attack-paths")]
    attack_paths: Option<String>,
    #[arg(long = "basis-policy")]
    basis_policy: Option<String>,
    /// Round mode to enumerate: mm or cm
    #[arg(long, default_value = "cm")]
    mode: String,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Args)]
struct DialogueArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Alice's message bits, e.g. 0110
    #[arg(long)]
    message: String,
    /// Bob's reply bits; must not exceed the delivered message length
    #[arg(long)]
    reply: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => run_protocol(args, ProtocolKind::Deterministic),
        Command::Bb84(args) => run_protocol(args, ProtocolKind::Bb84),
        Command::Oracle(args) => run_oracle(args),
        Command::Dialogue(args) => run_dialogue(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

/// Builds the session config: file first, then flag overrides.
fn build_config(common: &CommonArgs, protocol: ProtocolKind) -> Result<SessionConfig, Error> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        None => SessionConfig::default(),
    };
    config.protocol = protocol;
    if let Some(rounds) = common.rounds {
        config.n_rounds = rounds;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(c) = common.control_prob {
        config.control_probability = c;
    }
    if let Some(loss) = common.loss {
        config.channel.p_loss = loss;
    }
    if let Some(rate) = common.drift_rate {
        config.channel.drift_rate = rate;
    }
    if let Some(interval) = common.comp_interval {
        config.channel.compensation_interval = interval;
    }
    if let Some(rate) = common.round_rate {
        config.channel.round_rate = rate;
    }
    let attack = AttackBuilder {
        kind: common.attack.clone(),
        paths: common.attack_paths.clone(),
        basis_policy: common.basis_policy.clone(),
    };
    if !attack.is_empty() {
        config.attack = attack.build()?;
    }
    if let Some(source) = &common.message_source {
        config.message_source = parse_message_source(source)?;
    }
    config.validate()?;
    Ok(config)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn wants_json(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "json")
}

fn write_transcript(path: &Path, transcript: &Transcript) -> Result<(), Error> {
    let bytes = match (transcript, wants_json(path)) {
        (Transcript::Deterministic(records), true) => emit_transcript_json(records)?,
        (Transcript::Deterministic(records), false) => emit_transcript_csv(records)?,
        (Transcript::Bb84(rounds), true) => emit_bb84_transcript_json(rounds)?,
        (Transcript::Bb84(rounds), false) => emit_bb84_transcript_csv(rounds)?,
    };
    write_out(Some(path), &bytes)
}

fn run_protocol(args: RunArgs, protocol: ProtocolKind) -> Result<(), Error> {
    let mut config = build_config(&args.common, protocol)?;
    if let Some(passes) = args.passes {
        config.bb84_passes = passes;
        config.validate()?;
    }
    if args.repetitions == 1 {
        let output = run_once(&config)?;
        let report = emit_report(&output.stats, args.common.format)?;
        write_out(args.common.output.as_deref(), &report)?;
        if let Some(path) = &args.common.transcript {
            write_transcript(path, &output.transcript)?;
        }
        return Ok(());
    }
    if args.common.transcript.is_some() {
        return Err(Error::Config(pnp_core::config::ConfigError::InvalidField {
            field: "transcript",
            reason: "per-round transcripts require --repetitions 1".into(),
        }));
    }
    let campaign = run_campaign(&config, args.repetitions)?;
    let report = emit_report(&campaign.aggregate, args.common.format)?;
    write_out(args.common.output.as_deref(), &report)?;
    if let Some(path) = &args.per_repetition {
        let table = emit_report_table(&campaign.per_repetition, table_format(path))?;
        write_out(Some(path), &table)?;
    }
    Ok(())
}

fn table_format(path: &Path) -> ReportFormat {
    if wants_json(path) {
        ReportFormat::Json
    } else {
        ReportFormat::Csv
    }
}

#[derive(Serialize)]
struct OracleReport {
    mode: String,
    attack: String,
    outcomes: Vec<OracleRow>,
    p_control_fail: Option<String>,
    p_message_error: Option<String>,
    p_eve_correct: Option<String>,
}

#[derive(Serialize)]
struct OracleRow {
    label: String,
    probability: String,
    value: f64,
}

fn oracle_rows(outcomes: &[ExactOutcome]) -> Vec<OracleRow> {
    outcomes
        .iter()
        .map(|o| OracleRow {
            label: o.label.to_string(),
            probability: o.probability.to_string(),
            value: *o.probability.numer() as f64 / *o.probability.denom() as f64,
        })
        .collect()
}

fn run_oracle(args: OracleArgs) -> Result<(), Error> {
    let attack = AttackBuilder {
        kind: args.attack.clone(),
        paths: args.attack_paths.clone(),
        basis_policy: args.basis_policy.clone(),
    }
    .build()?;
    let mode = match args.mode.as_str() {
        "mm" | "message" => Mode::Message,
        "cm" | "control" => Mode::Control,
        other => {
            return Err(Error::Config(pnp_core::config::ConfigError::InvalidField {
                field: "mode",
                reason: format!("expected mm or cm, got '{other}'"),
            }))
        }
    };
    let outcomes = exact_event_probabilities(&attack, mode)?;
    let bytes = match args.format {
        ReportFormat::Json => {
            let report = OracleReport {
                mode: args.mode.clone(),
                attack: format!("{attack:?}"),
                outcomes: oracle_rows(&outcomes),
                p_control_fail: (mode == Mode::Control)
                    .then(|| p_control_fail(&outcomes).to_string()),
                p_message_error: (mode == Mode::Message)
                    .then(|| p_message_error(&outcomes).to_string()),
                p_eve_correct: p_eve_correct(&outcomes).map(|p| p.to_string()),
            };
            let mut bytes =
                serde_json::to_vec_pretty(&report).map_err(pnp_core::report::ReportError::from)?;
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Csv => {
            let mut text = String::from("label,probability,value\n");
            for row in oracle_rows(&outcomes) {
                text.push_str(&format!(
                    "{},{},{}\n",
                    row.label, row.probability, row.value
                ));
            }
            text.into_bytes()
        }
    };
    write_out(args.output.as_deref(), &bytes)
}

fn parse_bits(field: &'static str, text: &str) -> Result<Vec<u8>, Error> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Config(pnp_core::config::ConfigError::InvalidField {
                field,
                reason: format!("expected a bitstring of 0s and 1s, found '{other}'"),
            })),
        })
        .collect()
}

#[derive(Serialize)]
struct DialogueReport {
    message: String,
    delivered_to_bob: String,
    ciphertext: String,
    recovered_reply: String,
    stats: SessionStats,
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn run_dialogue(args: DialogueArgs) -> Result<(), Error> {
    let config = build_config(&args.common, ProtocolKind::Deterministic)?;
    let message = parse_bits("message", &args.message)?;
    let reply = parse_bits("reply", &args.reply)?;
    let outcome = quantum_dialogue(&config, &message, &reply)?;
    let report = DialogueReport {
        message: args.message.clone(),
        delivered_to_bob: bits_to_string(&outcome.delivered_message),
        ciphertext: bits_to_string(&outcome.ciphertext),
        recovered_reply: bits_to_string(&outcome.recovered_reply),
        stats: outcome.stats.clone(),
    };
    let mut bytes =
        serde_json::to_vec_pretty(&report).map_err(pnp_core::report::ReportError::from)?;
    bytes.push(b'\n');
    write_out(args.common.output.as_deref(), &bytes)?;
    if let Some(path) = &args.common.transcript {
        write_transcript(path, &Transcript::Deterministic(outcome.transcript))?;
    }
    Ok(())
}
