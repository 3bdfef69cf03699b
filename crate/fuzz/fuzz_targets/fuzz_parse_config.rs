#![no_main]
use libfuzzer_sys::fuzz_target;

// Config files are the main untrusted input: both the key-value and the
// JSON form go through parse_config. Parsing must return an error, never
// panic, for arbitrary text.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = pnp_core::parse_config(text);
    }
});
