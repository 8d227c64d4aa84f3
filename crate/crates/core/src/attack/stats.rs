//! Accumulators for pair-binned and distance-binned attack statistics.

use std::fmt::Write as _;

use crate::channel::OracleMetric;
use crate::error::{Error, Result};
use crate::gamma::{upper_tri_index, upper_tri_len, upper_tri_pair, GammaMatrix, MAX_DENSE_N};
use crate::spectrum::{cyclic_distance, fold_pair_unchecked, DistanceSpectrum, QcPairKey};

/// How column pairs are mapped to accumulator slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairIndex {
    /// One slot per unordered pair `j < l` of `n` columns.
    Dense { n: usize },
    /// One slot per quasi-cyclic pair class.
    QcFolded { p: usize, n0: usize },
    /// An explicit set of unordered pairs over `n` columns, stored sorted
    /// as `(min, max)`.
    List { n: usize, pairs: Vec<(u32, u32)> },
}

/// The pair or pair class a slot stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairKey {
    Pair(u32, u32),
    Folded(QcPairKey),
}

impl PairIndex {
    pub fn dense(n: usize) -> Result<Self> {
        if n > MAX_DENSE_N {
            return Err(Error::params(format!("dense pair statistics limited to n ≤ {MAX_DENSE_N}")));
        }
        Ok(PairIndex::Dense { n })
    }

    pub fn qc_folded(p: usize, n0: usize) -> Result<Self> {
        if p < 2 || n0 == 0 {
            return Err(Error::params(format!("folded index needs p ≥ 2 and n0 ≥ 1, got p = {p}, n0 = {n0}")));
        }
        Ok(PairIndex::QcFolded { p, n0 })
    }

    /// Explicit pair list; pairs are normalised, sorted and deduplicated.
    pub fn list(n: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidSupport(format!("pair ({a}, {a}) is on the diagonal")));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi as usize >= n {
                return Err(Error::IndexOutOfRange { index: hi as usize, len: n });
            }
            out.push((lo, hi));
        }
        out.sort_unstable();
        out.dedup();
        Ok(PairIndex::List { n, pairs: out })
    }

    /// Code length the index refers to.
    pub fn n(&self) -> usize {
        match self {
            PairIndex::Dense { n } | PairIndex::List { n, .. } => *n,
            PairIndex::QcFolded { p, n0 } => p * n0,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PairIndex::Dense { n } => upper_tri_len(*n),
            PairIndex::QcFolded { p, n0 } => n0 * (n0 + 1) / 2 * p,
            PairIndex::List { pairs, .. } => pairs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot of the pair `(i, j)`, `i ≠ j`; `None` for pairs a list index
    /// does not track.
    #[inline]
    pub fn slot(&self, i: u32, j: u32) -> Option<usize> {
        debug_assert_ne!(i, j);
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        match self {
            PairIndex::Dense { n } => Some(upper_tri_index(*n, lo as usize, hi as usize)),
            PairIndex::QcFolded { p, n0 } => {
                Some(fold_pair_unchecked(*p, lo as usize, hi as usize).slot(*p, *n0))
            }
            PairIndex::List { pairs, .. } => pairs.binary_search(&(lo, hi)).ok(),
        }
    }

    /// The pair a slot stands for; `None` for unused folded slots.
    pub fn key(&self, slot: usize) -> Option<PairKey> {
        match self {
            PairIndex::Dense { n } => {
                let (i, j) = upper_tri_pair(*n, slot);
                Some(PairKey::Pair(i as u32, j as u32))
            }
            PairIndex::QcFolded { p, n0 } => QcPairKey::from_slot(slot, *p, *n0).map(PairKey::Folded),
            PairIndex::List { pairs, .. } => pairs.get(slot).map(|&(a, b)| PairKey::Pair(a, b)),
        }
    }

    /// How many unordered column pairs fall in each slot.
    pub fn multiplicity(&self, slot: usize) -> u64 {
        match (self, self.key(slot)) {
            (PairIndex::QcFolded { p, .. }, Some(PairKey::Folded(k))) => {
                if k.is_same_block() && 2 * k.shift as usize == *p {
                    (*p / 2) as u64
                } else {
                    *p as u64
                }
            }
            (_, Some(PairKey::Pair(..))) => 1,
            _ => 0,
        }
    }
}

/// Checks that `n_queries` queries of weight `t` with replies at most
/// `max_reply` cannot overflow the counters of `index`.
pub fn check_budget(index: &PairIndex, n_queries: u64, t: usize, max_reply: u64) -> Result<()> {
    let pairs_per_query = (t as u64) * (t as u64).saturating_sub(1) / 2;
    // A dense or list slot is visited at most once per query. A folded class
    // holds at most one pair per support element.
    let visits_per_query = match index {
        PairIndex::QcFolded { .. } => pairs_per_query.min(t as u64),
        _ => pairs_per_query.min(1),
    };
    let max_visits = n_queries
        .checked_mul(visits_per_query)
        .ok_or_else(|| Error::Budget("visit count overflows u64".into()))?;
    if max_visits > u32::MAX as u64 {
        return Err(Error::Budget(format!(
            "{n_queries} queries may visit one slot {max_visits} times, beyond the 32-bit visit counters"
        )));
    }
    if max_visits.checked_mul(max_reply).is_none() {
        return Err(Error::Budget("metric sums may overflow the 64-bit accumulators".into()));
    }
    Ok(())
}

/// Per-pair metric sums `A` and visit counts `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairStats {
    index: PairIndex,
    metric: OracleMetric,
    a: Vec<u64>,
    b: Vec<u32>,
    queries: u64,
}

impl PairStats {
    pub fn new(index: PairIndex, metric: OracleMetric) -> Self {
        let len = index.len();
        PairStats { index, metric, a: vec![0; len], b: vec![0; len], queries: 0 }
    }

    pub fn index(&self) -> &PairIndex {
        &self.index
    }

    pub fn metric(&self) -> OracleMetric {
        self.metric
    }

    /// Number of queries recorded.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn sums(&self) -> &[u64] {
        &self.a
    }

    pub fn counts(&self) -> &[u32] {
        &self.b
    }

    /// Records one reply against every unordered pair of `support` that the
    /// index tracks.
    pub fn record_support(&mut self, support: &[u32], y: u64) {
        self.queries += 1;
        for (k, &i) in support.iter().enumerate() {
            for &j in &support[k + 1..] {
                if let Some(s) = self.index.slot(i, j) {
                    self.a[s] += y;
                    self.b[s] += 1;
                }
            }
        }
    }

    /// Records one reply against the single pair `(i, j)`.
    pub fn record_pair(&mut self, i: u32, j: u32, y: u64) {
        self.queries += 1;
        if let Some(s) = self.index.slot(i, j) {
            self.a[s] += y;
            self.b[s] += 1;
        }
    }

    /// Elementwise sum of two accumulators over the same index and metric.
    pub fn merge(&mut self, other: &PairStats) -> Result<()> {
        if self.index != other.index || self.metric != other.metric {
            return Err(Error::IncompatibleStats("index or metric differ".into()));
        }
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x = x
                .checked_add(*y)
                .ok_or_else(|| Error::Budget("visit counter overflow while merging".into()))?;
        }
        self.queries += other.queries;
        Ok(())
    }

    /// `A/B` for one slot; `None` when unvisited.
    pub fn mean(&self, slot: usize) -> Option<f64> {
        (self.b[slot] > 0).then(|| self.a[slot] as f64 / self.b[slot] as f64)
    }

    /// Total visits over all slots.
    pub fn total_visits(&self) -> u64 {
        self.b.iter().map(|&x| x as u64).sum()
    }

    /// Re-bins pair statistics of a quasi-cyclic code by pair class.
    pub fn fold_qc(&self, p: usize, n0: usize) -> Result<PairStats> {
        let folded = PairIndex::qc_folded(p, n0)?;
        if self.index.n() != folded.n() {
            return Err(Error::DimensionMismatch { expected: folded.n(), got: self.index.n() });
        }
        let mut out = PairStats::new(folded, self.metric);
        if let PairIndex::QcFolded { .. } = self.index {
            out.merge(self)?;
            return Ok(out);
        }
        for slot in 0..self.b.len() {
            if self.b[slot] == 0 {
                continue;
            }
            let Some(PairKey::Pair(i, j)) = self.index.key(slot) else { continue };
            let s = out.index.slot(i, j).expect("folded index covers every pair");
            out.a[s] += self.a[slot];
            out.b[s] = out.b[s]
                .checked_add(self.b[slot])
                .ok_or_else(|| Error::Budget("visit counter overflow while folding".into()))?;
        }
        out.queries = self.queries;
        Ok(out)
    }

    /// Sums `(A, B)` over the pairs of each true intersection count.
    /// Evaluation helper; needs the secret matrix.
    pub fn aggregate_by_gamma(&self, gamma: &GammaMatrix) -> Result<Vec<(u64, u64)>> {
        if gamma.n() != self.index.n() {
            return Err(Error::DimensionMismatch { expected: self.index.n(), got: gamma.n() });
        }
        let mut out: Vec<(u64, u64)> = Vec::new();
        for slot in 0..self.b.len() {
            if self.b[slot] == 0 {
                continue;
            }
            let g = true_gamma(gamma, &self.index, slot)? as usize;
            if out.len() <= g {
                out.resize(g + 1, (0, 0));
            }
            out[g].0 += self.a[slot];
            out[g].1 += self.b[slot] as u64;
        }
        Ok(out)
    }

    /// CSV dump, one row per visited slot. `truth` adds a `true_gamma`
    /// column.
    pub fn to_csv(&self, truth: Option<&GammaMatrix>) -> Result<String> {
        let mut out = String::new();
        let folded = matches!(self.index, PairIndex::QcFolded { .. });
        out.push_str(if folded { "block_a,block_b,shift_class" } else { "j,l" });
        out.push_str(",samples,metric_sum,mean");
        if truth.is_some() {
            out.push_str(",true_gamma");
        }
        out.push('\n');
        for slot in 0..self.b.len() {
            if self.b[slot] == 0 {
                continue;
            }
            match self.index.key(slot) {
                Some(PairKey::Pair(i, j)) => {
                    let _ = write!(out, "{i},{j}");
                }
                Some(PairKey::Folded(k)) => {
                    let _ = write!(out, "{},{},{}", k.block_a, k.block_b, k.shift);
                }
                None => continue,
            }
            let _ = write!(out, ",{},{},{:.6}", self.b[slot], self.a[slot], self.a[slot] as f64 / self.b[slot] as f64);
            if let Some(g) = truth {
                let _ = write!(out, ",{}", true_gamma(g, &self.index, slot)?);
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// `γ` of the pair (or of any pair in the class) behind a slot.
pub fn true_gamma(gamma: &GammaMatrix, index: &PairIndex, slot: usize) -> Result<u8> {
    match index.key(slot) {
        Some(PairKey::Pair(i, j)) => gamma.get(i as usize, j as usize),
        Some(PairKey::Folded(k)) => {
            let PairIndex::QcFolded { p, .. } = index else { unreachable!() };
            let i = k.block_a as usize * p;
            let j = k.block_b as usize * p + k.shift as usize;
            gamma.get(i, j)
        }
        None => Err(Error::IndexOutOfRange { index: slot, len: index.len() }),
    }
}

/// Per-block, per-distance metric sums `a⁽ʲ⁾` and counts `b⁽ʲ⁾`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDistanceStats {
    p: usize,
    n0: usize,
    metric: OracleMetric,
    // Row-major over (block, d − 1).
    a: Vec<u64>,
    b: Vec<u32>,
    queries: u64,
}

impl BlockDistanceStats {
    pub fn new(p: usize, n0: usize, metric: OracleMetric) -> Result<Self> {
        if p < 2 || n0 == 0 {
            return Err(Error::params(format!("need p ≥ 2 and n0 ≥ 1, got p = {p}, n0 = {n0}")));
        }
        let len = n0 * (p / 2);
        Ok(BlockDistanceStats { p, n0, metric, a: vec![0; len], b: vec![0; len], queries: 0 })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn metric(&self) -> OracleMetric {
        self.metric
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    fn at(&self, block: usize, d: usize) -> usize {
        block * (self.p / 2) + d - 1
    }

    /// `a⁽ʲ⁾_d`.
    pub fn sum(&self, block: usize, d: usize) -> u64 {
        self.a[self.at(block, d)]
    }

    /// `b⁽ʲ⁾_d`.
    pub fn count(&self, block: usize, d: usize) -> u32 {
        self.b[self.at(block, d)]
    }

    pub fn mean(&self, block: usize, d: usize) -> Option<f64> {
        let k = self.at(block, d);
        (self.b[k] > 0).then(|| self.a[k] as f64 / self.b[k] as f64)
    }

    /// Records one reply: every distance present in a block's part of the
    /// support is updated once, whatever its multiplicity.
    pub fn record(&mut self, support: &[u32], y: u64, seen: &mut Vec<bool>) {
        self.queries += 1;
        let p = self.p;
        seen.clear();
        seen.resize(p / 2 + 1, false);
        let mut start = 0;
        while start < support.len() {
            let block = support[start] as usize / p;
            let mut end = start;
            while end < support.len() && support[end] as usize / p == block {
                end += 1;
            }
            let part = &support[start..end];
            let mut touched = Vec::new();
            for (k, &x) in part.iter().enumerate() {
                for &z in &part[k + 1..] {
                    let d = cyclic_distance(x as usize % p, z as usize % p, p);
                    if !seen[d] {
                        seen[d] = true;
                        touched.push(d);
                    }
                }
            }
            for d in touched {
                seen[d] = false;
                let k = self.at(block, d);
                self.a[k] += y;
                self.b[k] += 1;
            }
            start = end;
        }
    }

    pub fn merge(&mut self, other: &BlockDistanceStats) -> Result<()> {
        if (self.p, self.n0, self.metric) != (other.p, other.n0, other.metric) {
            return Err(Error::IncompatibleStats("shape or metric differ".into()));
        }
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x = x
                .checked_add(*y)
                .ok_or_else(|| Error::Budget("visit counter overflow while merging".into()))?;
        }
        self.queries += other.queries;
        Ok(())
    }

    /// The same counts laid out as folded pair statistics (same-block
    /// classes only), for classification.
    pub fn to_pair_stats(&self) -> Result<PairStats> {
        let mut out = PairStats::new(PairIndex::qc_folded(self.p, self.n0)?, self.metric);
        for block in 0..self.n0 {
            for d in 1..=self.p / 2 {
                let key = QcPairKey { block_a: block as u32, block_b: block as u32, shift: d as u32 };
                let s = key.slot(self.p, self.n0);
                out.a[s] = self.sum(block, d);
                out.b[s] = self.count(block, d);
            }
        }
        out.queries = self.queries;
        Ok(out)
    }

    /// CSV dump with one row per `(block, distance)`. `truth` holds the true
    /// spectrum of every block.
    pub fn to_csv(&self, truth: Option<&[DistanceSpectrum]>) -> Result<String> {
        if let Some(t) = truth {
            if t.len() != self.n0 {
                return Err(Error::DimensionMismatch { expected: self.n0, got: t.len() });
            }
        }
        let mut out = String::from("block,distance,samples,metric_sum,mean");
        if truth.is_some() {
            out.push_str(",true_multiplicity");
        }
        out.push('\n');
        for block in 0..self.n0 {
            for d in 1..=self.p / 2 {
                let (a, b) = (self.sum(block, d), self.count(block, d));
                let mean = if b > 0 { a as f64 / b as f64 } else { f64::NAN };
                let _ = write!(out, "{block},{d},{b},{a},{mean:.6}");
                if let Some(t) = truth {
                    let _ = write!(out, ",{}", t[block].multiplicity(d));
                }
                out.push('\n');
            }
        }
        Ok(out)
    }
}
