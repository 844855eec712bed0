#![no_main]

use libfuzzer_sys::fuzz_target;
use qdd::model::{build_hamiltonian, CouplingSet};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(c) = CouplingSet::from_json(s) else { return };
    // Accepted sets must survive a round trip and, when small, assemble.
    let again = CouplingSet::from_json(&c.to_json()).expect("round trip");
    assert_eq!(again, c);
    if c.m <= 3 {
        let _ = build_hamiltonian(&c);
    }
});
