//! Sampling without replacement.

use std::collections::HashMap;

use rand::Rng;

/// Draws `t` distinct values uniformly from `0..m` by a partial Fisher–Yates
/// shuffle over the implicit identity permutation. Only displaced slots are
/// stored, so memory is O(t) regardless of `m`. The result is in draw order.
pub fn partial_fisher_yates<R: Rng + ?Sized>(rng: &mut R, m: u32, t: u32) -> Vec<u32> {
    assert!(t <= m, "cannot draw {t} distinct values from {m}");
    let mut out = Vec::with_capacity(t as usize);
    if t as usize <= SMALL {
        let mut swaps: Vec<(u32, u32)> = Vec::with_capacity(2 * t as usize);
        let lookup = |swaps: &[(u32, u32)], k: u32| {
            swaps.iter().rev().find(|(slot, _)| *slot == k).map_or(k, |&(_, v)| v)
        };
        for k in 0..t {
            let r = rng.gen_range(k..m);
            let at_r = lookup(&swaps, r);
            let at_k = lookup(&swaps, k);
            swaps.push((r, at_k));
            out.push(at_r);
        }
    } else {
        let mut swaps: HashMap<u32, u32> = HashMap::with_capacity(2 * t as usize);
        for k in 0..t {
            let r = rng.gen_range(k..m);
            let at_r = *swaps.get(&r).unwrap_or(&r);
            let at_k = *swaps.get(&k).unwrap_or(&k);
            swaps.insert(r, at_k);
            out.push(at_r);
        }
    }
    out
}

// Below this size a linear scan over the swap log beats hashing.
const SMALL: usize = 96;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn draws_are_distinct_and_in_range() {
        for (m, t) in [(10u32, 10u32), (100, 3), (1000, 200), (5, 0)] {
            let mut rng = stream(1, Domain::Synthetic, m as u64);
            let mut v = partial_fisher_yates(&mut rng, m, t);
            assert_eq!(v.len(), t as usize);
            assert!(v.iter().all(|&x| x < m));
            v.sort_unstable();
            v.dedup();
            assert_eq!(v.len(), t as usize);
        }
    }

    #[test]
    fn small_and_large_paths_agree() {
        // Same RNG stream, same draws: the two swap stores must implement the
        // same permutation.
        let m = 500;
        let t = 90;
        let mut r1 = stream(2, Domain::Synthetic, 0);
        let a = partial_fisher_yates(&mut r1, m, t);
        let mut r2 = stream(2, Domain::Synthetic, 0);
        let mut swaps: HashMap<u32, u32> = HashMap::new();
        let mut b = Vec::new();
        for k in 0..t {
            let r = r2.gen_range(k..m);
            let at_r = *swaps.get(&r).unwrap_or(&r);
            let at_k = *swaps.get(&k).unwrap_or(&k);
            swaps.insert(r, at_k);
            b.push(at_r);
        }
        assert_eq!(a, b);
    }
}
