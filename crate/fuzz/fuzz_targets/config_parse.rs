//! Fuzz the config-file decoder: tokenizing and the typed conversion
//! behind it must reject bad input with errors, never panics.

#![no_main]

use libfuzzer_sys::fuzz_target;

use aqsim::harness::config::{parse_config_text, Overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(map) = parse_config_text(text) else {
        return;
    };
    // Parsing is deterministic.
    assert_eq!(
        map,
        parse_config_text(text).expect("second parse of accepted text"),
        "parse is not deterministic"
    );
    // The typed layer may still reject values; it must not panic.
    let _ = Overrides::from_map(&map);
});
