#![no_main]
use libfuzzer_sys::fuzz_target;

// Stats reports round-trip through parse_report (JSON or CSV,
// auto-detected). Arbitrary bytes must never panic the parser.
fuzz_target!(|data: &[u8]| {
    let _ = pnp_core::parse_report(data);
});
