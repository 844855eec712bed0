#![no_main]

use libfuzzer_sys::fuzz_target;
use qdd_cli::PulseRange;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(r) = s.parse::<PulseRange>() {
        assert!(r.lo <= r.hi);
        assert_eq!(r.to_string().parse::<PulseRange>(), Ok(r));
    }
});
