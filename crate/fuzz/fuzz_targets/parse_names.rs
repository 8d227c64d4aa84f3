#![no_main]
use bflab::{preset, ExperimentKind};
use bflab_core::OracleMetric;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = s.parse::<OracleMetric>() {
        assert_eq!(m.name().parse::<OracleMetric>().unwrap(), m);
    }
    if let Ok(k) = s.parse::<ExperimentKind>() {
        assert_eq!(k.name(), s);
    }
    if let Ok(c) = preset(s) {
        c.validate().expect("presets are valid");
    }
});
