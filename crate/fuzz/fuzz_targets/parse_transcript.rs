#![no_main]
use bflab_core::channel::{parse_transcript, write_transcript};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let n = n as usize + 1;
    if let Ok(entries) = parse_transcript(text, n) {
        let written = write_transcript(&entries);
        assert_eq!(parse_transcript(&written, n).expect("written transcript parses"), entries);
    }
});
