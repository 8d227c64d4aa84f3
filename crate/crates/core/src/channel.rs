//! Error-vector ensembles, syndromes and the decryption oracle.

use std::fmt;
use std::str::FromStr;

use crate::bits::BitVec;
use crate::code::ParityCheckMatrix;
use crate::decoder::{DecodeTrace, Decoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::rng::query_stream;
use crate::sample::partial_fisher_yates;

/// A weight-`t` error vector of length `n`, stored by its sorted support.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErrorVector {
    n: usize,
    support: Vec<u32>,
}

impl ErrorVector {
    /// Sorts `support` and checks that it is duplicate-free and in range.
    pub fn new(n: usize, mut support: Vec<u32>) -> Result<Self> {
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport("duplicated error position".into()));
        }
        if let Some(&last) = support.last() {
            if last as usize >= n {
                return Err(Error::IndexOutOfRange { index: last as usize, len: n });
            }
        }
        Ok(ErrorVector { n, support })
    }

    pub fn zero(n: usize) -> Self {
        ErrorVector { n, support: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, i: u32) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// Symmetric difference (sum over GF(2)).
    pub fn xor(&self, other: &ErrorVector) -> Result<ErrorVector> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut a = BitVec::from_support(self.n, &self.support);
        a.xor_assign(&BitVec::from_support(other.n, &other.support));
        Ok(ErrorVector { n: self.n, support: a.support() })
    }
}

/// Which error vectors an ensemble contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// All weight-`t` vectors.
    Uniform,
    /// Weight-`t` vectors whose support contains both positions.
    FixedPair(u32, u32),
}

/// An ensemble of weight-`t` length-`n` error vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub t: usize,
    pub constraint: Constraint,
}

impl EnsembleSpec {
    pub fn uniform(n: usize, t: usize) -> Self {
        EnsembleSpec { n, t, constraint: Constraint::Uniform }
    }

    pub fn fixed_pair(n: usize, t: usize, i0: u32, i1: u32) -> Self {
        EnsembleSpec { n, t, constraint: Constraint::FixedPair(i0, i1) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > u32::MAX as usize {
            return Err(Error::InfeasibleEnsemble(format!("n = {} too large", self.n)));
        }
        if self.t > self.n {
            return Err(Error::InfeasibleEnsemble(format!("t = {} exceeds n = {}", self.t, self.n)));
        }
        if let Constraint::FixedPair(i0, i1) = self.constraint {
            if i0 == i1 {
                return Err(Error::InfeasibleEnsemble("fixed pair needs two distinct positions".into()));
            }
            if i0 as usize >= self.n || i1 as usize >= self.n {
                return Err(Error::InfeasibleEnsemble(format!(
                    "fixed pair ({i0}, {i1}) outside 0..{}",
                    self.n
                )));
            }
            if self.t < 2 {
                return Err(Error::InfeasibleEnsemble("fixed pair needs t ≥ 2".into()));
            }
        }
        Ok(())
    }
}

/// Draws query `query_index` of the ensemble. The draw depends only on
/// `(master_seed, query_index, spec)`.
pub fn sample_error(spec: &EnsembleSpec, master_seed: u64, query_index: u64) -> Result<ErrorVector> {
    spec.validate()?;
    Ok(sample_error_unchecked(spec, master_seed, query_index))
}

pub(crate) fn sample_error_unchecked(
    spec: &EnsembleSpec,
    master_seed: u64,
    query_index: u64,
) -> ErrorVector {
    let mut rng = query_stream(master_seed, query_index);
    let mut support = match spec.constraint {
        Constraint::Uniform => partial_fisher_yates(&mut rng, spec.n as u32, spec.t as u32),
        Constraint::FixedPair(i0, i1) => {
            let (lo, hi) = if i0 < i1 { (i0, i1) } else { (i1, i0) };
            let mut free =
                partial_fisher_yates(&mut rng, spec.n as u32 - 2, spec.t as u32 - 2);
            // Map 0..n-2 onto 0..n with lo and hi skipped.
            for x in &mut free {
                if *x >= lo {
                    *x += 1;
                }
                if *x >= hi {
                    *x += 1;
                }
            }
            free.push(lo);
            free.push(hi);
            free
        }
    };
    support.sort_unstable();
    ErrorVector { n: spec.n, support }
}

/// `s = H·eᵀ`.
pub fn syndrome(h: &ParityCheckMatrix, e: &ErrorVector) -> Result<BitVec> {
    if e.n() != h.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), got: e.n() });
    }
    let mut s = BitVec::zeros(h.r());
    for &j in e.support() {
        s.toggle_all(h.col(j as usize));
    }
    Ok(s)
}

/// The quantity an oracle reveals about one decryption.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OracleMetric {
    /// 1 on decoding failure, 0 on success.
    Failure,
    IterationCount,
    InitialSyndromeWeight,
    /// `t′`, the residual error count after the first iteration.
    ResidualErrorsAfterIter1,
    /// Syndrome weight after the first iteration.
    SyndromeWeightAfterIter1,
    /// `|Ψ_1|`, the number of flips in the first iteration.
    FlipCountIter1,
}

impl OracleMetric {
    pub const ALL: [OracleMetric; 6] = [
        OracleMetric::Failure,
        OracleMetric::IterationCount,
        OracleMetric::InitialSyndromeWeight,
        OracleMetric::ResidualErrorsAfterIter1,
        OracleMetric::SyndromeWeightAfterIter1,
        OracleMetric::FlipCountIter1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OracleMetric::Failure => "failure",
            OracleMetric::IterationCount => "iterations",
            OracleMetric::InitialSyndromeWeight => "syndrome-weight",
            OracleMetric::ResidualErrorsAfterIter1 => "residual-errors",
            OracleMetric::SyndromeWeightAfterIter1 => "syndrome-weight-iter1",
            OracleMetric::FlipCountIter1 => "flips-iter1",
        }
    }

    /// Largest number of decoder iterations whose outcome the metric can
    /// depend on; `None` when the whole run matters.
    pub fn iterations_needed(&self) -> Option<u32> {
        match self {
            OracleMetric::Failure | OracleMetric::IterationCount => None,
            OracleMetric::InitialSyndromeWeight => Some(0),
            OracleMetric::ResidualErrorsAfterIter1
            | OracleMetric::SyndromeWeightAfterIter1
            | OracleMetric::FlipCountIter1 => Some(1),
        }
    }

    /// Upper bound on one reply, used for accumulator overflow checks.
    pub fn max_reply(&self, n: usize, r: usize, i_max: u32) -> u64 {
        match self {
            OracleMetric::Failure => 1,
            OracleMetric::IterationCount => i_max as u64,
            OracleMetric::InitialSyndromeWeight | OracleMetric::SyndromeWeightAfterIter1 => r as u64,
            OracleMetric::ResidualErrorsAfterIter1 | OracleMetric::FlipCountIter1 => n as u64,
        }
    }

    /// Extracts the metric from a trace. The trace must carry residual
    /// counts for [`OracleMetric::ResidualErrorsAfterIter1`].
    pub fn extract(&self, trace: &DecodeTrace) -> u64 {
        match self {
            OracleMetric::Failure => trace.failure as u64,
            OracleMetric::IterationCount => trace.iterations_run() as u64,
            OracleMetric::InitialSyndromeWeight => trace.initial_syndrome_weight as u64,
            OracleMetric::ResidualErrorsAfterIter1 => trace
                .first_residual_errors()
                .expect("residual errors need the true error vector") as u64,
            OracleMetric::SyndromeWeightAfterIter1 => trace.first_syndrome_weight() as u64,
            OracleMetric::FlipCountIter1 => trace.first_flip_count() as u64,
        }
    }
}

impl fmt::Display for OracleMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s {
            "failure" | "dfr" => OracleMetric::Failure,
            "iterations" => OracleMetric::IterationCount,
            "syndrome-weight" => OracleMetric::InitialSyndromeWeight,
            "residual-errors" | "t-prime" => OracleMetric::ResidualErrorsAfterIter1,
            "syndrome-weight-iter1" => OracleMetric::SyndromeWeightAfterIter1,
            "flips-iter1" => OracleMetric::FlipCountIter1,
            other => {
                let names: Vec<_> = OracleMetric::ALL.iter().map(|m| m.name()).collect();
                return Err(Error::parse(
                    0,
                    format!("unknown metric {other:?}; expected one of {}", names.join(", ")),
                ));
            }
        };
        Ok(m)
    }
}

/// One oracle answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleReply {
    pub y: u64,
    pub query_index: u64,
}

/// Runs the decoder on the syndrome of `e` and reports `metric`.
pub fn oracle_query(
    h: &ParityCheckMatrix,
    e: &ErrorVector,
    config: DecoderConfig,
    metric: OracleMetric,
    query_index: u64,
) -> Result<OracleReply> {
    let mut dec = Decoder::new(h);
    let y = query_with(&mut dec, h, e, config, metric)?;
    Ok(OracleReply { y, query_index })
}

fn query_with(
    dec: &mut Decoder<'_>,
    h: &ParityCheckMatrix,
    e: &ErrorVector,
    config: DecoderConfig,
    metric: OracleMetric,
) -> Result<u64> {
    let s = syndrome(h, e)?;
    if metric == OracleMetric::InitialSyndromeWeight {
        config.validate(h.v())?;
        return Ok(s.weight() as u64);
    }
    // Metrics read off the first iteration are unaffected by later ones.
    let run = match metric.iterations_needed() {
        Some(k) => DecoderConfig { i_max: config.i_max.min(k.max(1)), ..config },
        None => config,
    };
    let truth = (metric == OracleMetric::ResidualErrorsAfterIter1).then_some(e);
    let trace = dec.decode(&s, run, truth)?;
    Ok(metric.extract(&trace))
}

/// The attacker's view of a decryption oracle: it accepts error vectors and
/// answers with one metric, never exposing the secret matrix.
pub trait DecryptionOracle: Sync {
    fn code_length(&self) -> usize;
    fn metric(&self) -> OracleMetric;
    /// Answers one query.
    fn query(&self, e: &ErrorVector) -> Result<u64>;
    /// Upper bound on a single reply.
    fn max_reply(&self) -> u64;
}

/// In-process oracle holding the secret parity-check matrix.
pub struct SimulatedOracle<'a> {
    h: &'a ParityCheckMatrix,
    config: DecoderConfig,
    metric: OracleMetric,
}

impl<'a> SimulatedOracle<'a> {
    pub fn new(h: &'a ParityCheckMatrix, config: DecoderConfig, metric: OracleMetric) -> Result<Self> {
        config.validate(h.v())?;
        Ok(SimulatedOracle { h, config, metric })
    }

    pub fn config(&self) -> DecoderConfig {
        self.config
    }
}

impl DecryptionOracle for SimulatedOracle<'_> {
    fn code_length(&self) -> usize {
        self.h.n()
    }

    fn metric(&self) -> OracleMetric {
        self.metric
    }

    fn query(&self, e: &ErrorVector) -> Result<u64> {
        query_with(&mut Decoder::new(self.h), self.h, e, self.config, self.metric)
    }

    fn max_reply(&self) -> u64 {
        self.metric.max_reply(self.h.n(), self.h.r(), self.config.i_max)
    }
}

/// One logged query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub query_index: u64,
    pub metric: OracleMetric,
    pub y: u64,
    pub error: ErrorVector,
}

pub const TRANSCRIPT_HEADER: &str = "query_index,metric,y,weight,support";

/// CSV transcript: `query_index,metric,y,weight,support` with the support
/// joined by semicolons.
pub fn write_transcript(entries: &[TranscriptEntry]) -> String {
    let mut out = String::from(TRANSCRIPT_HEADER);
    out.push('\n');
    for e in entries {
        let support: Vec<String> = e.error.support().iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.query_index,
            e.metric,
            e.y,
            e.error.weight(),
            support.join(";")
        ));
    }
    out
}

/// Parses a transcript written by [`write_transcript`]. Lines starting with
/// `#` are ignored. `n` is the code length the supports refer to.
pub fn parse_transcript(text: &str, n: usize) -> Result<Vec<TranscriptEntry>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (k, line) in text.lines().enumerate() {
        let lno = k + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != TRANSCRIPT_HEADER {
                return Err(Error::parse(lno, "missing transcript header"));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::parse(lno, format!("expected 5 columns, found {}", cols.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(lno, format!("bad integer {s:?}")));
        let query_index = int(cols[0])?;
        let metric: OracleMetric = cols[1].parse().map_err(|_| Error::parse(lno, "bad metric"))?;
        let y = int(cols[2])?;
        let weight = int(cols[3])?;
        let support = if cols[4].is_empty() {
            Vec::new()
        } else {
            cols[4]
                .split(';')
                .map(|s| s.parse::<u32>().map_err(|_| Error::parse(lno, format!("bad position {s:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        if support.len() as u64 != weight {
            return Err(Error::parse(lno, "weight column disagrees with the support"));
        }
        if metric == OracleMetric::Failure && y > 1 {
            return Err(Error::parse(lno, "failure replies must be 0 or 1"));
        }
        let error = ErrorVector::new(n, support).map_err(|e| Error::parse(lno, e.to_string()))?;
        out.push(TranscriptEntry { query_index, metric, y, error });
    }
    if !saw_header {
        return Err(Error::parse(1, "missing transcript header"));
    }
    Ok(out)
}
