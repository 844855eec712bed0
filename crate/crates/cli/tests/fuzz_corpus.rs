//! Replays the checked-in fuzz seeds through the decoders they target.

use std::fs;
use std::path::PathBuf;

use qdd::model::CouplingSet;
use qdd::sequence::PulseSchedule;
use qdd_cli::{PulseRange, RunConfig};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn coupling_seeds() {
    for (name, text) in seeds("couplings_json") {
        let parsed = CouplingSet::from_json(&text);
        assert_eq!(parsed.is_ok(), name != "truncated.json", "{name}");
        if let Ok(c) = parsed {
            assert_eq!(CouplingSet::from_json(&c.to_json()).unwrap(), c, "{name}");
        }
    }
}

#[test]
fn schedule_seeds() {
    for (name, text) in seeds("schedule_json") {
        let p = PulseSchedule::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            PulseSchedule::from_json(&p.to_json()).unwrap().to_json(),
            p.to_json()
        );
    }
}

#[test]
fn run_config_seeds() {
    for (name, text) in seeds("run_config_json") {
        let c = RunConfig::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c, "{name}");
    }
}

#[test]
fn pulse_range_seeds() {
    for (name, text) in seeds("pulse_range") {
        let parsed = text.parse::<PulseRange>();
        assert_eq!(parsed.is_ok(), name != "reversed", "{name}");
    }
}
