#![no_main]
use bflab_core::keyfile::{parse_key, write_key};
use libfuzzer_sys::fuzz_target;

/// Valid keys with huge circulants allocate gigabytes; skip them.
fn oversized(text: &str) -> bool {
    let header = text.lines().next().unwrap_or("");
    header.split_whitespace().skip(1).take(6).any(|f| f.parse::<u64>().map_or(false, |x| x > 1 << 16))
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if oversized(text) {
        return;
    }
    if let Ok(h) = parse_key(text) {
        let written = write_key(&h);
        let again = parse_key(&written).expect("written key parses");
        assert_eq!(write_key(&again), written);
    }
});
