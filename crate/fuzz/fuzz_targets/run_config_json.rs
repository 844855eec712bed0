#![no_main]

use libfuzzer_sys::fuzz_target;
use qdd_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(c) = RunConfig::from_json(s) else { return };
    assert_eq!(RunConfig::from_json(&c.to_json()).expect("round trip"), c);
    // Resolution must fail cleanly rather than panic; skip file access.
    if c.couplings_file.is_none() {
        let _ = c.cell();
        let _ = c.tau();
        let _ = c.directions_for(c.m.unwrap_or(3).min(10));
    }
});
