//! Evaluator-side choice of scan targets. Stratifying by the true
//! intersection count needs the secret key, so none of this is reachable
//! from attack code.

use rand::Rng;

use bflab_core::rng::{stream, Domain};
use bflab_core::{GammaMatrix, QcPairKey};

use crate::error::{config_err, Result};

/// Per-`γ` quotas summing to `min(total, Σ counts)`: an even share for every
/// present `γ`, with the shortfall of rare values handed to the others in
/// turn.
pub fn quotas(counts: &[u64], total: usize) -> Vec<usize> {
    let present = counts.iter().filter(|&&c| c > 0).count();
    let mut out = vec![0usize; counts.len()];
    if present == 0 {
        return out;
    }
    let share = total.div_ceil(present);
    for (q, &c) in out.iter_mut().zip(counts) {
        *q = share.min(c as usize);
    }
    let mut left = total.saturating_sub(out.iter().sum());
    // Trim the overshoot from the top so the total is exact.
    let mut over = out.iter().sum::<usize>().saturating_sub(total);
    for q in out.iter_mut().rev() {
        let cut = over.min(q.saturating_sub(1));
        *q -= cut;
        over -= cut;
    }
    while left > 0 {
        let mut grew = false;
        for (q, &c) in out.iter_mut().zip(counts) {
            if left > 0 && (*q as u64) < c {
                *q += 1;
                left -= 1;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    out
}

/// Reservoir sampling of `quota[γ]` items per `γ` in one pass over
/// `items`; the result is sorted.
fn reservoir<I>(items: I, quota: &[usize], seed: u64) -> Vec<(u32, u32)>
where
    I: Iterator<Item = (u8, (u32, u32))>,
{
    let mut rng = stream(seed, Domain::Selection, 0);
    let mut seen = vec![0u64; quota.len()];
    let mut kept: Vec<Vec<(u32, u32)>> = quota.iter().map(|&q| Vec::with_capacity(q)).collect();
    for (g, pair) in items {
        let g = g as usize;
        if g >= quota.len() || quota[g] == 0 {
            continue;
        }
        let k = seen[g];
        seen[g] += 1;
        if (k as usize) < quota[g] {
            kept[g].push(pair);
        } else {
            let r = rng.gen_range(0..=k);
            if (r as usize) < quota[g] {
                kept[g][r as usize] = pair;
            }
        }
    }
    let mut out: Vec<(u32, u32)> = kept.into_iter().flatten().collect();
    out.sort_unstable();
    out
}

/// `total` column pairs spread evenly over the `γ ≤ gamma_max` values
/// present. For quasi-cyclic tables each pick is a same-block shift class
/// `(b·p, b·p + d)`.
pub fn stratified_pairs(gamma: &GammaMatrix, total: usize, gamma_max: Option<u8>, seed: u64) -> Result<Vec<(u32, u32)>> {
    let cap = gamma_max.map_or(usize::MAX, |g| g as usize);
    if gamma.is_folded() {
        let (p, n0) = gamma.qc_shape().expect("folded tables are quasi-cyclic");
        let classes = || {
            (0..n0).flat_map(move |b| {
                (1..=p / 2).map(move |d| {
                    let key = QcPairKey { block_a: b as u32, block_b: b as u32, shift: d as u32 };
                    let g = gamma.get_folded(key).expect("valid class");
                    (g, ((b * p) as u32, (b * p + d) as u32))
                })
            })
        };
        let mut counts = vec![0u64; gamma.v() + 1];
        for (g, _) in classes() {
            counts[g as usize] += 1;
        }
        counts.truncate(cap.saturating_add(1).min(counts.len()));
        let q = quotas(&counts, total);
        return finish(reservoir(classes(), &q, seed), total);
    }
    let n = gamma.n();
    let mut counts = gamma.histogram();
    counts.truncate(cap.saturating_add(1).min(counts.len()));
    let q = quotas(&counts, total);
    let items = (0..n).flat_map(|i| {
        (i + 1..n).map(move |j| (gamma.get(i, j).expect("in range"), (i as u32, j as u32)))
    });
    finish(reservoir(items, &q, seed), total)
}

fn finish(pairs: Vec<(u32, u32)>, total: usize) -> Result<Vec<(u32, u32)>> {
    if pairs.is_empty() && total > 0 {
        return Err(config_err("no pairs match the stratification"));
    }
    Ok(pairs)
}
