//! Query campaigns against a decryption oracle.
//!
//! Query `k` of a campaign always uses the error vector drawn from stream
//! `(seed, first_query + k)`. Work is split into contiguous query ranges, one
//! per worker; every worker fills a private accumulator and the shards are
//! merged at the end. Accumulators hold integers only, so the result does
//! not depend on the number of workers.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::attack::stats::{check_budget, BlockDistanceStats, PairIndex, PairStats};
use crate::channel::{
    sample_error_unchecked, DecryptionOracle, EnsembleSpec, OracleMetric, TranscriptEntry,
};
use crate::error::{Error, Result};

/// Where query indices come from and how many threads to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Campaign {
    pub seed: u64,
    /// Stream index of the first query.
    pub first_query: u64,
    pub workers: usize,
}

impl Campaign {
    pub fn new(seed: u64, workers: usize) -> Self {
        Campaign { seed, first_query: 0, workers }
    }

    pub fn starting_at(self, first_query: u64) -> Self {
        Campaign { first_query, ..self }
    }
}

/// Splits `0..total` into at most `workers` contiguous ranges.
fn shards(total: u64, workers: usize) -> Vec<Range<u64>> {
    let k = (workers.max(1) as u64).min(total.max(1));
    (0..k).map(|i| (total * i / k)..(total * (i + 1) / k)).collect()
}

/// Runs `body` over the shards of `0..total` on `workers` threads and folds
/// the shard results with `merge` in shard order.
fn sharded<T, F, M>(total: u64, workers: usize, body: F, mut merge: M) -> Result<T>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
    M: FnMut(&mut T, T) -> Result<()>,
{
    let ranges = shards(total, workers);
    let parts: Vec<Result<T>> = if ranges.len() == 1 {
        vec![body(ranges[0].clone())]
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ranges.len())
            .build()
            .map_err(|e| Error::params(format!("thread pool: {e}")))?;
        pool.install(|| ranges.into_par_iter().map(&body).collect())
    };
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one shard")?;
    for part in iter {
        merge(&mut acc, part?)?;
    }
    Ok(acc)
}

fn check_oracle<O: DecryptionOracle + ?Sized>(oracle: &O, spec: &EnsembleSpec) -> Result<()> {
    spec.validate()?;
    if spec.n != oracle.code_length() {
        return Err(Error::DimensionMismatch { expected: oracle.code_length(), got: spec.n });
    }
    Ok(())
}

/// General statistical attack: every query updates all unordered pairs of
/// its support that `index` tracks.
pub fn run_gsa<O: DecryptionOracle + ?Sized>(
    oracle: &O,
    spec: &EnsembleSpec,
    n_queries: u64,
    index: PairIndex,
    campaign: Campaign,
) -> Result<PairStats> {
    if n_queries == 0 {
        return Err(Error::params("need at least one query"));
    }
    check_oracle(oracle, spec)?;
    if index.n() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, got: index.n() });
    }
    check_budget(&index, n_queries, spec.t, oracle.max_reply())?;
    let metric = oracle.metric();
    sharded(
        n_queries,
        campaign.workers,
        |range| {
            let mut stats = PairStats::new(index.clone(), metric);
            for k in range {
                let e = sample_error_unchecked(spec, campaign.seed, campaign.first_query + k);
                let y = oracle.query(&e)?;
                stats.record_support(e.support(), y);
            }
            Ok(stats)
        },
        |acc, part| acc.merge(&part),
    )
}

/// Distance-binned attack on a quasi-cyclic code with `n0` blocks of size
/// `p`: each query updates every distance present in each block once.
pub fn run_exgjs<O: DecryptionOracle + ?Sized>(
    oracle: &O,
    spec: &EnsembleSpec,
    n_queries: u64,
    p: usize,
    n0: usize,
    campaign: Campaign,
) -> Result<BlockDistanceStats> {
    if n_queries == 0 {
        return Err(Error::params("need at least one query"));
    }
    check_oracle(oracle, spec)?;
    if p.checked_mul(n0) != Some(spec.n) {
        return Err(Error::NotQuasiCyclic);
    }
    if n_queries > u32::MAX as u64 || n_queries.checked_mul(oracle.max_reply()).is_none() {
        return Err(Error::Budget(format!("{n_queries} queries exceed the distance counters")));
    }
    let metric = oracle.metric();
    sharded(
        n_queries,
        campaign.workers,
        |range| {
            let mut stats = BlockDistanceStats::new(p, n0, metric)?;
            let mut seen = Vec::new();
            for k in range {
                let e = sample_error_unchecked(spec, campaign.seed, campaign.first_query + k);
                let y = oracle.query(&e)?;
                stats.record(e.support(), y, &mut seen);
            }
            Ok(stats)
        },
        |acc, part| acc.merge(&part),
    )
}

/// Which pairs a pairwise scan credits with each reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScanAccumulation {
    /// Only the anchored pair `(i0, j)` the query was drawn for.
    Anchored,
    /// Every pair of the query's support tracked by the given index.
    AllPairs(PairIndex),
}

/// Scans the pairs `(i0, j)`, `j ∈ targets`, drawing `queries_per_pair`
/// error vectors from the ensemble of weight-`t` vectors containing both.
/// Target `k` (in the given order) uses query indices
/// `k·queries_per_pair ..` of the campaign.
#[allow(clippy::too_many_arguments)]
pub fn run_pairwise_scan<O: DecryptionOracle + ?Sized>(
    oracle: &O,
    t: usize,
    anchor: u32,
    targets: &[u32],
    queries_per_pair: u64,
    accumulation: ScanAccumulation,
    campaign: Campaign,
) -> Result<PairStats> {
    if targets.contains(&anchor) {
        return Err(Error::InfeasibleEnsemble(format!("anchor {anchor} is also a target")));
    }
    let pairs: Vec<(u32, u32)> = targets.iter().map(|&j| (anchor, j)).collect();
    run_pair_scan(oracle, t, &pairs, queries_per_pair, accumulation, campaign)
}

/// Like [`run_pairwise_scan`] for an arbitrary list of distinct pairs; pair
/// `k` uses query indices `k·queries_per_pair ..` of the campaign.
pub fn run_pair_scan<O: DecryptionOracle + ?Sized>(
    oracle: &O,
    t: usize,
    pairs: &[(u32, u32)],
    queries_per_pair: u64,
    accumulation: ScanAccumulation,
    campaign: Campaign,
) -> Result<PairStats> {
    let n = oracle.code_length();
    if queries_per_pair == 0 || pairs.is_empty() {
        return Err(Error::params("need at least one pair and one query per pair"));
    }
    let specs = pairs
        .iter()
        .map(|&(i, j)| {
            let spec = EnsembleSpec::fixed_pair(n, t, i, j);
            spec.validate().map(|_| spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = queries_per_pair
        .checked_mul(pairs.len() as u64)
        .ok_or_else(|| Error::Budget("query count overflows".into()))?;
    let index = match &accumulation {
        ScanAccumulation::Anchored => {
            let index = PairIndex::list(n, pairs.iter().copied())?;
            if index.len() != pairs.len() {
                return Err(Error::params("scanned pairs must be distinct"));
            }
            index
        }
        ScanAccumulation::AllPairs(index) => {
            if index.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: index.n() });
            }
            index.clone()
        }
    };
    check_budget(&index, total, t, oracle.max_reply())?;
    let all_pairs = matches!(accumulation, ScanAccumulation::AllPairs(_));
    let metric = oracle.metric();
    sharded(
        total,
        campaign.workers,
        |range| {
            let mut stats = PairStats::new(index.clone(), metric);
            for k in range {
                let target = (k / queries_per_pair) as usize;
                let e = sample_error_unchecked(&specs[target], campaign.seed, campaign.first_query + k);
                let y = oracle.query(&e)?;
                if all_pairs {
                    stats.record_support(e.support(), y);
                } else {
                    let (i, j) = pairs[target];
                    stats.record_pair(i, j, y);
                }
            }
            Ok(stats)
        },
        |acc, part| acc.merge(&part),
    )
}

/// Failures and trials per initial syndrome weight.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SyndromeWeightProfile {
    pub bins: BTreeMap<u64, (u64, u64)>,
}

impl SyndromeWeightProfile {
    pub fn trials(&self) -> u64 {
        self.bins.values().map(|b| b.1).sum()
    }

    pub fn failures(&self) -> u64 {
        self.bins.values().map(|b| b.0).sum()
    }

    fn merge(&mut self, other: SyndromeWeightProfile) {
        for (w, (f, n)) in other.bins {
            let e = self.bins.entry(w).or_default();
            e.0 += f;
            e.1 += n;
        }
    }

    /// `(weight, dfr, trials)` for bins with at least `min_trials` trials.
    pub fn populated(&self, min_trials: u64) -> Vec<(u64, f64, u64)> {
        self.bins
            .iter()
            .filter(|(_, &(_, n))| n >= min_trials)
            .map(|(&w, &(f, n))| (w, f as f64 / n as f64, n))
            .collect()
    }

    /// Trial-weighted Pearson correlation between syndrome weight and the
    /// failure rate over bins with at least `min_trials` trials.
    pub fn correlation(&self, min_trials: u64) -> Option<f64> {
        let bins = self.populated(min_trials);
        let total: f64 = bins.iter().map(|b| b.2 as f64).sum();
        if bins.len() < 2 || total == 0.0 {
            return None;
        }
        let mx = bins.iter().map(|b| b.0 as f64 * b.2 as f64).sum::<f64>() / total;
        let my = bins.iter().map(|b| b.1 * b.2 as f64).sum::<f64>() / total;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for &(w, d, n) in &bins {
            let (dx, dy) = (w as f64 - mx, d - my);
            sxy += n as f64 * dx * dy;
            sxx += n as f64 * dx * dx;
            syy += n as f64 * dy * dy;
        }
        (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("syndrome_weight,failures,trials,dfr\n");
        for (w, &(f, n)) in &self.bins {
            out.push_str(&format!("{w},{f},{n},{:.6e}\n", f as f64 / n as f64));
        }
        out
    }
}

/// Profiles the failure rate against the initial syndrome weight over uniform
/// queries. `weight_oracle` must report the initial syndrome weight and
/// `failure_oracle` the failure bit, both for the same secret key.
pub fn dfr_vs_syndrome_weight<W, F>(
    weight_oracle: &W,
    failure_oracle: &F,
    t: usize,
    n_queries: u64,
    campaign: Campaign,
) -> Result<SyndromeWeightProfile>
where
    W: DecryptionOracle + ?Sized,
    F: DecryptionOracle + ?Sized,
{
    if weight_oracle.metric() != OracleMetric::InitialSyndromeWeight
        || failure_oracle.metric() != OracleMetric::Failure
    {
        return Err(Error::params("needs a syndrome-weight oracle and a failure oracle"));
    }
    if n_queries == 0 {
        return Err(Error::params("need at least one query"));
    }
    let spec = EnsembleSpec::uniform(failure_oracle.code_length(), t);
    check_oracle(weight_oracle, &spec)?;
    check_oracle(failure_oracle, &spec)?;
    sharded(
        n_queries,
        campaign.workers,
        |range| {
            let mut profile = SyndromeWeightProfile::default();
            for k in range {
                let e = sample_error_unchecked(&spec, campaign.seed, campaign.first_query + k);
                let w = weight_oracle.query(&e)?;
                let f = failure_oracle.query(&e)?;
                let bin = profile.bins.entry(w).or_default();
                bin.0 += f;
                bin.1 += 1;
            }
            Ok(profile)
        },
        |acc, part| {
            acc.merge(part);
            Ok(())
        },
    )
}

/// Replays a campaign serially and logs every query.
pub fn collect_transcript<O: DecryptionOracle + ?Sized>(
    oracle: &O,
    spec: &EnsembleSpec,
    n_queries: u64,
    campaign: Campaign,
) -> Result<Vec<TranscriptEntry>> {
    check_oracle(oracle, spec)?;
    (0..n_queries)
        .map(|k| {
            let query_index = campaign.first_query + k;
            let error = sample_error_unchecked(spec, campaign.seed, query_index);
            let y = oracle.query(&error)?;
            Ok(TranscriptEntry { query_index, metric: oracle.metric(), y, error })
        })
        .collect()
}

/// Rebuilds pair statistics from a logged transcript.
pub fn pair_stats_from_transcript(entries: &[TranscriptEntry], index: PairIndex) -> Result<PairStats> {
    let metric = entries.first().map_or(OracleMetric::Failure, |e| e.metric);
    let mut stats = PairStats::new(index, metric);
    for e in entries {
        if e.metric != metric {
            return Err(Error::IncompatibleStats("transcript mixes metrics".into()));
        }
        if e.error.n() != stats.index().n() {
            return Err(Error::DimensionMismatch { expected: stats.index().n(), got: e.error.n() });
        }
        stats.record_support(e.error.support(), e.y);
    }
    Ok(stats)
}
