#![no_main]
use bflab_core::{decode, gen_qc, gen_regular, syndrome, DecoderConfig, ErrorVector};
use libfuzzer_sys::fuzz_target;

// Byte 0 picks the code, bytes 1-2 the decoder, the rest are error positions.
fuzz_target!(|data: &[u8]| {
    if data.len() < 3 {
        return;
    }
    let h = match data[0] % 3 {
        0 => gen_regular(24, 12, 3, 6, data[0] as u64),
        1 => gen_regular(40, 10, 2, 8, data[0] as u64),
        _ => gen_qc(13, 2, 3, data[0] as u64),
    }
    .unwrap();
    let cfg = DecoderConfig::new(1 + data[1] as u32 % 8, 1 + data[2] as u32 % h.v() as u32);
    let mut support: Vec<u32> = data[3..].iter().map(|&x| x as u32 % h.n() as u32).collect();
    support.sort_unstable();
    support.dedup();
    let e = ErrorVector::new(h.n(), support).unwrap();
    let s = syndrome(&h, &e).unwrap();
    let trace = decode(&h, &s, cfg, Some(&e)).unwrap();
    assert!(trace.iterations.len() <= cfg.i_max as usize);
    let estimate = ErrorVector::new(h.n(), trace.estimate.clone()).unwrap();
    assert_eq!(syndrome(&h, &estimate).unwrap() == s, !trace.failure);
    if let Some(last) = trace.iterations.last() {
        assert_eq!(last.residual_errors, Some(e.xor(&estimate).unwrap().weight()));
    }
});
