//! Cyclic distance spectra and quasi-cyclic pair folding.

use crate::error::{Error, Result};

/// Cyclic distance `min{±(a − b) mod p}`.
#[inline]
pub fn cyclic_distance(a: usize, b: usize, p: usize) -> usize {
    let delta = (a + p - b) % p;
    delta.min(p - delta)
}

/// Multiplicities of the cyclic distances between the ones of a length-`p`
/// vector. Distance `d` ranges over `1..=p/2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistanceSpectrum {
    p: usize,
    // mu[d] for d in 0..=p/2; mu[0] is always 0.
    mu: Vec<u32>,
}

impl DistanceSpectrum {
    pub fn empty(p: usize) -> Self {
        DistanceSpectrum { p, mu: vec![0; p / 2 + 1] }
    }

    /// Builds a spectrum from `mu[d - 1]` for `d = 1..=p/2`.
    pub fn from_multiplicities(p: usize, mu: &[u32]) -> Result<Self> {
        if mu.len() != p / 2 {
            return Err(Error::MissingClasses(format!(
                "expected {} distance classes, got {}",
                p / 2,
                mu.len()
            )));
        }
        let mut out = Self::empty(p);
        out.mu[1..].copy_from_slice(mu);
        Ok(out)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest distance class, `⌊p/2⌋`.
    pub fn max_distance(&self) -> usize {
        self.p / 2
    }

    /// `μ_d`; zero outside `1..=p/2`.
    pub fn multiplicity(&self, d: usize) -> u32 {
        self.mu.get(d).copied().unwrap_or(0)
    }

    /// The distance spectrum as a set: distances with non-zero multiplicity.
    pub fn distances(&self) -> Vec<usize> {
        (1..self.mu.len()).filter(|&d| self.mu[d] > 0).collect()
    }

    /// `(d, μ_d)` for every class `d = 1..=p/2`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.mu.iter().copied().enumerate().skip(1)
    }

    /// Number of support pairs accounted for.
    pub fn total_pairs(&self) -> u64 {
        self.mu.iter().map(|&m| m as u64).sum()
    }

    /// Distance classes on which the two spectra disagree.
    pub fn diff(&self, other: &DistanceSpectrum) -> Vec<usize> {
        let top = self.mu.len().max(other.mu.len());
        (1..top).filter(|&d| self.multiplicity(d) != other.multiplicity(d)).collect()
    }
}

/// Distance spectrum of a support set inside `0..p`.
pub fn distance_spectrum(support: &[u32], p: usize) -> Result<DistanceSpectrum> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if let Some(&last) = sorted.last() {
        if last as usize >= p {
            return Err(Error::InvalidSupport(format!("entry {last} not below p = {p}")));
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidSupport("duplicated entry".into()));
    }
    let mut out = DistanceSpectrum::empty(p);
    for (k, &a) in sorted.iter().enumerate() {
        for &b in &sorted[k + 1..] {
            out.mu[cyclic_distance(a as usize, b as usize, p)] += 1;
        }
    }
    Ok(out)
}

/// Turns same-block intersection counts `γ(p·i_p, p·i_p + d)`, given for
/// `d = 1..=p/2` as `gammas[d - 1]`, into the block's distance spectrum.
///
/// Each unordered pair of ones at distance `d < p/2` produces exactly one
/// overlap between columns `d` apart, so `μ_d = γ`. When `p` is even the
/// pair at distance `p/2` overlaps in both directions and `μ_{p/2} = γ / 2`.
pub fn spectrum_from_gamma(gammas: &[u32], p: usize) -> Result<DistanceSpectrum> {
    let mut mu = gammas.to_vec();
    if p % 2 == 0 && p >= 2 {
        if let Some(last) = mu.last_mut() {
            if *last % 2 != 0 {
                return Err(Error::InvalidSupport(format!(
                    "odd intersection count {} at the self-mirrored distance p/2",
                    *last
                )));
            }
            *last /= 2;
        }
    }
    DistanceSpectrum::from_multiplicities(p, &mu)
}

/// Canonical representative of a column pair of a quasi-cyclic matrix under
/// simultaneous cyclic shifts. Two pairs get the same key exactly when the
/// circulant structure forces their intersection counts to be equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QcPairKey {
    pub block_a: u32,
    pub block_b: u32,
    /// Same block: distance `1..=p/2`. Distinct blocks (`block_a < block_b`):
    /// offset `(y − x) mod p` from the column in `block_a` to the one in
    /// `block_b`.
    pub shift: u32,
}

impl QcPairKey {
    pub fn is_same_block(&self) -> bool {
        self.block_a == self.block_b
    }

    /// Position in a folded array of length `n0(n0+1)/2 · p`.
    pub fn slot(&self, p: usize, n0: usize) -> usize {
        block_pair_id(self.block_a as usize, self.block_b as usize, n0) * p + self.shift as usize
    }

    /// Inverse of [`QcPairKey::slot`]; `None` for unused slots (same-block
    /// shifts 0 and above `p/2`).
    pub fn from_slot(slot: usize, p: usize, n0: usize) -> Option<Self> {
        let id = slot / p;
        let shift = slot % p;
        let mut base = 0;
        for a in 0..n0 {
            let span = n0 - a;
            if id < base + span {
                let b = a + (id - base);
                if a == b && (shift == 0 || shift > p / 2) {
                    return None;
                }
                return Some(QcPairKey { block_a: a as u32, block_b: b as u32, shift: shift as u32 });
            }
            base += span;
        }
        None
    }
}

/// Index of the unordered block pair `a ≤ b` among `n0(n0+1)/2`.
#[inline]
pub fn block_pair_id(a: usize, b: usize, n0: usize) -> usize {
    debug_assert!(a <= b && b < n0);
    a * n0 - a * a.saturating_sub(1) / 2 + (b - a)
}

/// Folds the column pair `(i, j)`, `i ≠ j`, of a quasi-cyclic matrix with
/// `n0` blocks of size `p`.
pub fn fold_pair_qc(p: usize, n0: usize, i: usize, j: usize) -> Result<QcPairKey> {
    let n = p * n0;
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if i == j {
        return Err(Error::InvalidSupport("a column pair needs two distinct columns".into()));
    }
    Ok(fold_pair_unchecked(p, i, j))
}

#[inline]
pub(crate) fn fold_pair_unchecked(p: usize, i: usize, j: usize) -> QcPairKey {
    let (bi, xi) = (i / p, i % p);
    let (bj, xj) = (j / p, j % p);
    if bi == bj {
        QcPairKey { block_a: bi as u32, block_b: bi as u32, shift: cyclic_distance(xi, xj, p) as u32 }
    } else {
        let ((a, x), (b, y)) = if bi < bj { ((bi, xi), (bj, xj)) } else { ((bj, xj), (bi, xi)) };
        QcPairKey { block_a: a as u32, block_b: b as u32, shift: ((y + p - x) % p) as u32 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_spectrum(support: &[u32], p: usize) -> Vec<u32> {
        let mut mu = vec![0u32; p / 2 + 1];
        for (k, &a) in support.iter().enumerate() {
            for &b in &support[k + 1..] {
                let fwd = (a as i64 - b as i64).rem_euclid(p as i64) as usize;
                let bwd = (b as i64 - a as i64).rem_euclid(p as i64) as usize;
                mu[fwd.min(bwd)] += 1;
            }
        }
        mu
    }

    #[test]
    fn spectrum_of_013_mod_7() {
        let ds = distance_spectrum(&[0, 1, 3], 7).unwrap();
        assert_eq!(brute_spectrum(&[0, 1, 3], 7), vec![0, 1, 1, 1]);
        assert_eq!((ds.multiplicity(1), ds.multiplicity(2), ds.multiplicity(3)), (1, 1, 1));
        assert_eq!(ds.distances(), vec![1, 2, 3]);
    }

    #[test]
    fn singleton_has_empty_spectrum() {
        for p in [1, 2, 9] {
            let ds = distance_spectrum(&[0], p).unwrap();
            assert!(ds.distances().is_empty());
            assert_eq!(ds.total_pairs(), 0);
        }
    }

    #[test]
    fn half_distance_counts_once() {
        let ds = distance_spectrum(&[0, 5], 10).unwrap();
        assert_eq!(ds.multiplicity(5), 1);
        assert_eq!(ds.total_pairs(), 1);
    }

    #[test]
    fn bad_supports_rejected() {
        assert!(distance_spectrum(&[0, 7], 7).is_err());
        assert!(distance_spectrum(&[2, 2], 7).is_err());
    }

    #[test]
    fn spectrum_from_gamma_basic() {
        let ds = spectrum_from_gamma(&[1, 1, 1], 7).unwrap();
        assert_eq!(ds, distance_spectrum(&[0, 1, 3], 7).unwrap());
        assert!(spectrum_from_gamma(&[0, 0, 0], 7).unwrap().distances().is_empty());
        assert!(matches!(spectrum_from_gamma(&[1, 1], 7), Err(Error::MissingClasses(_))));
        assert_eq!(spectrum_from_gamma(&[0, 2], 4).unwrap().multiplicity(2), 1);
        assert!(spectrum_from_gamma(&[0, 1], 4).is_err());
    }

    #[test]
    fn same_block_folding() {
        let k = fold_pair_qc(7, 1, 2, 5).unwrap();
        assert_eq!(k.shift, 3);
        assert_eq!(k, fold_pair_qc(7, 1, 0, 3).unwrap());
        assert_eq!(fold_pair_qc(7, 1, 0, 1).unwrap(), fold_pair_qc(7, 1, 3, 4).unwrap());
        assert_eq!(fold_pair_qc(7, 1, 1, 0).unwrap(), fold_pair_qc(7, 1, 0, 1).unwrap());
        assert!(fold_pair_qc(7, 1, 3, 3).is_err());
        assert!(fold_pair_qc(7, 1, 3, 7).is_err());
    }

    #[test]
    fn cross_block_folding_is_shift_invariant() {
        let (p, n0) = (11, 3);
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            for x in 0..p {
                for y in 0..p {
                    let key = fold_pair_qc(p, n0, a * p + x, b * p + y).unwrap();
                    assert_eq!(key, fold_pair_qc(p, n0, b * p + y, a * p + x).unwrap());
                    for z in 0..p {
                        let shifted = fold_pair_qc(p, n0, a * p + (x + z) % p, b * p + (y + z) % p)
                            .unwrap();
                        assert_eq!(key, shifted);
                    }
                }
            }
        }
    }

    #[test]
    fn slots_are_a_bijection() {
        for (p, n0) in [(7usize, 1usize), (8, 2), (5, 4)] {
            let len = n0 * (n0 + 1) / 2 * p;
            let mut seen = vec![false; len];
            for i in 0..p * n0 {
                for j in i + 1..p * n0 {
                    let key = fold_pair_qc(p, n0, i, j).unwrap();
                    let slot = key.slot(p, n0);
                    assert!(slot < len);
                    assert_eq!(QcPairKey::from_slot(slot, p, n0), Some(key));
                    seen[slot] = true;
                }
            }
            for (slot, &s) in seen.iter().enumerate() {
                assert_eq!(s, QcPairKey::from_slot(slot, p, n0).is_some(), "slot {slot}");
            }
        }
    }
}
