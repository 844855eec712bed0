#![no_main]

use libfuzzer_sys::fuzz_target;
use qdd::sequence::{switching_profile, PulseSchedule};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(p) = PulseSchedule::from_json(s) else { return };
    let again = PulseSchedule::from_json(&p.to_json()).expect("round trip");
    assert_eq!(again.to_json(), p.to_json());
    let _ = switching_profile(&p);
});
