#![no_main]
use libfuzzer_sys::fuzz_target;
use pnp_core::report::{parse_transcript_csv, parse_transcript_json};

// Stored transcripts are re-read for replay verification; both decoders
// must reject malformed rows with an error instead of panicking.
fuzz_target!(|data: &[u8]| {
    let _ = parse_transcript_csv(data);
    let _ = parse_transcript_json(data);
});
