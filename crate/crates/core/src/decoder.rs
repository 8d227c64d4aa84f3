//! Out-of-place bit-flipping decoder with per-iteration instrumentation.
//!
//! Each iteration first computes every counter `σ_j` (the number of
//! unsatisfied parity checks touching column `j`) from the syndrome as it was
//! on entry, then flips every position with `σ_j ≥ b` and adds the flipped
//! columns to the syndrome. Decoding stops when the syndrome is zero or after
//! `i_max` iterations; a non-zero syndrome at exit is a decoding failure.

use crate::bits::BitVec;
use crate::channel::ErrorVector;
use crate::code::ParityCheckMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderConfig {
    /// Maximum number of iterations.
    pub i_max: u32,
    /// Flip threshold, constant across iterations.
    pub b: u32,
}

impl DecoderConfig {
    pub fn new(i_max: u32, b: u32) -> Self {
        DecoderConfig { i_max, b }
    }

    /// Checks `i_max ≥ 1` and `1 ≤ b ≤ v`.
    pub fn validate(&self, v: usize) -> Result<()> {
        if self.i_max == 0 {
            return Err(Error::InvalidDecoderConfig("i_max must be at least 1".into()));
        }
        if self.b == 0 || self.b as usize > v {
            return Err(Error::InvalidDecoderConfig(format!(
                "threshold b = {} outside 1..={v}",
                self.b
            )));
        }
        Ok(())
    }
}

/// What one decoder iteration did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    /// Positions flipped in this iteration, ascending.
    pub flips: Vec<u32>,
    /// Syndrome weight after the flips were applied.
    pub syndrome_weight: usize,
    /// `wt(e ⊕ e′)` after this iteration, when the true error was supplied.
    pub residual_errors: Option<usize>,
}

/// Full record of one decoder run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeTrace {
    pub failure: bool,
    pub initial_syndrome_weight: usize,
    pub iterations: Vec<IterationRecord>,
    /// Support of the final estimate `e′`, ascending.
    pub estimate: Vec<u32>,
    /// Weight of the true error vector, when supplied.
    pub true_weight: Option<usize>,
}

impl DecodeTrace {
    pub fn iterations_run(&self) -> usize {
        self.iterations.len()
    }

    /// `|Ψ_1|`; zero when the loop was never entered.
    pub fn first_flip_count(&self) -> usize {
        self.iterations.first().map_or(0, |it| it.flips.len())
    }

    /// Syndrome weight after the first iteration (the initial weight when no
    /// iteration ran).
    pub fn first_syndrome_weight(&self) -> usize {
        self.iterations.first().map_or(self.initial_syndrome_weight, |it| it.syndrome_weight)
    }

    /// `t′ = wt(e ⊕ e′_[1])`, or `wt(e)` when no iteration ran. `None` if the
    /// true error was not supplied.
    pub fn first_residual_errors(&self) -> Option<usize> {
        match self.iterations.first() {
            Some(it) => it.residual_errors,
            None => self.true_weight,
        }
    }
}

/// Unsatisfied-check counters `σ_j` for every column.
pub fn counters(h: &ParityCheckMatrix, s: &BitVec) -> Result<Vec<u8>> {
    if s.len() != h.r() {
        return Err(Error::DimensionMismatch { expected: h.r(), got: s.len() });
    }
    let mut sigma = vec![0u8; h.n()];
    fill_counters(h, s, &mut sigma);
    Ok(sigma)
}

#[inline]
fn fill_counters(h: &ParityCheckMatrix, s: &BitVec, sigma: &mut [u8]) {
    sigma.fill(0);
    for l in s.ones_iter() {
        for &j in h.row(l) {
            sigma[j as usize] += 1;
        }
    }
}

/// Runs the decoder on syndrome `s`. When `true_e` is given, the residual
/// error count is recorded after every iteration.
pub fn decode(
    h: &ParityCheckMatrix,
    s: &BitVec,
    config: DecoderConfig,
    true_e: Option<&ErrorVector>,
) -> Result<DecodeTrace> {
    Decoder::new(h).decode(s, config, true_e)
}

/// Reusable decoder workspace for one matrix. Not shared between threads.
pub struct Decoder<'a> {
    h: &'a ParityCheckMatrix,
    sigma: Vec<u8>,
}

impl<'a> Decoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix) -> Self {
        Decoder { h, sigma: vec![0; h.n()] }
    }

    pub fn decode(
        &mut self,
        s: &BitVec,
        config: DecoderConfig,
        true_e: Option<&ErrorVector>,
    ) -> Result<DecodeTrace> {
        let h = self.h;
        if s.len() != h.r() {
            return Err(Error::DimensionMismatch { expected: h.r(), got: s.len() });
        }
        config.validate(h.v())?;
        // Residual tracking: `diff` holds e ⊕ e′ as positions are flipped.
        let mut diff = match true_e {
            Some(e) => {
                if e.n() != h.n() {
                    return Err(Error::DimensionMismatch { expected: h.n(), got: e.n() });
                }
                Some((BitVec::from_support(h.n(), e.support()), e.weight()))
            }
            None => None,
        };
        let mut syndrome = s.clone();
        let mut estimate = BitVec::zeros(h.n());
        let initial_syndrome_weight = syndrome.weight();
        let mut weight = initial_syndrome_weight;
        let mut iterations = Vec::new();
        let b = config.b as u8;

        while weight > 0 && (iterations.len() as u32) < config.i_max {
            fill_counters(h, &syndrome, &mut self.sigma);
            let flips: Vec<u32> = self
                .sigma
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c >= b)
                .map(|(j, _)| j as u32)
                .collect();
            for &j in &flips {
                estimate.toggle(j as usize);
                syndrome.toggle_all(h.col(j as usize));
                if let Some((d, count)) = diff.as_mut() {
                    let was_error = d.get(j as usize);
                    d.toggle(j as usize);
                    if was_error {
                        *count -= 1;
                    } else {
                        *count += 1;
                    }
                }
            }
            weight = syndrome.weight();
            iterations.push(IterationRecord {
                flips,
                syndrome_weight: weight,
                residual_errors: diff.as_ref().map(|&(_, c)| c),
            });
        }

        Ok(DecodeTrace {
            failure: weight > 0,
            initial_syndrome_weight,
            iterations,
            estimate: estimate.support(),
            true_weight: true_e.map(ErrorVector::weight),
        })
    }
}
