//! Fuzz the instance-file decoder: no panics on arbitrary input, and
//! accepted instances must survive a canonical-serialize round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use aqsim::instances::Ec3Instance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(inst) = Ec3Instance::from_json(text) else {
        return;
    };
    // Accessors on a validated instance never panic.
    let _ = inst.id();
    let _ = inst.m();
    if let Some(sol) = inst.solution() {
        assert!(
            inst.is_satisfied(sol),
            "stored solution fails its own clauses: {}",
            inst.id()
        );
    }
    let canonical = inst.to_canonical_json();
    let reparsed = Ec3Instance::from_json(&canonical)
        .expect("canonical serialization must parse back");
    assert_eq!(inst, reparsed, "round trip changed the instance");
});
