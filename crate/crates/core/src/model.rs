//! Closed-form model of the first bit-flipping iteration on an error vector
//! that is known to contain two positions `i0`, `i1` whose columns overlap in
//! `γ` rows.
//!
//! The remaining `n − 2` positions are split into three sets by how they meet
//! the checks of `i0` and `i1`:
//!
//! * `𝒱₀`: bits sharing a check that contains both `i0` and `i1`;
//! * `𝒱₁`: bits sharing a check that contains exactly one of them;
//! * `𝒱₂`: bits touching neither.
//!
//! Each bit is assumed to sit in at most one check of the first two kinds and
//! its `v` checks are treated as independent, so its counter is a sum of
//! Bernoulli variables. All hypergeometric quantities are computed by
//! normalised ratio recurrences, which stay accurate at `n` in the thousands
//! without big integers.

use std::fmt::Write as _;

use crate::channel::OracleMetric;
use crate::code::ParityCheckMatrix;
use crate::error::{Error, Result};

/// Inputs of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelParams {
    pub n: usize,
    pub v: usize,
    pub w: usize,
    pub t: usize,
    pub b: usize,
    pub gamma: usize,
}

impl ModelParams {
    pub fn new(n: usize, v: usize, w: usize, t: usize, b: usize, gamma: usize) -> Self {
        ModelParams { n, v, w, t, b, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let &ModelParams { n, v, w, t, b, gamma } = self;
        let fail = |msg: String| Err(Error::ModelDomain(msg));
        if t < 2 || t > n {
            return fail(format!("need 2 ≤ t ≤ n, got t = {t}, n = {n}"));
        }
        if v == 0 {
            return fail("column weight v must be positive".into());
        }
        if gamma > v {
            return fail(format!("γ = {gamma} exceeds v = {v}"));
        }
        if b == 0 || b > v {
            return fail(format!("threshold b = {b} outside 1..={v}"));
        }
        if w < 3 {
            return fail(format!("row weight w = {w} below 3"));
        }
        if n <= w + 2 {
            return fail(format!("need n > w + 2, got n = {n}, w = {w}"));
        }
        PartitionSizes::new(self).map(|_| ())
    }
}

/// `|𝒱₀|, |𝒱₁|, |𝒱₂|` when every bit meets the checks of `i0`/`i1` at most once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionSizes {
    pub v0: usize,
    pub v1: usize,
    pub v2: usize,
}

impl PartitionSizes {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let v0 = p.gamma * p.w.saturating_sub(2);
        let v1 = (2 * p.v - 2 * p.gamma) * (p.w - 1);
        // n − 2 + γw − 2v(w − 1), evaluated without underflow.
        let plus = p.n - 2 + p.gamma * p.w;
        let minus = 2 * p.v * (p.w - 1);
        if plus < minus {
            return Err(Error::ModelDomain(format!(
                "partition 𝒱₂ would be negative: n − 2 + γw = {plus} < 2v(w − 1) = {minus}"
            )));
        }
        Ok(PartitionSizes { v0, v1, v2: plus - minus })
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.v0, self.v1, self.v2]
    }

    pub fn total(&self) -> usize {
        self.v0 + self.v1 + self.v2
    }
}

/// Measured `(|𝒱₀|, |𝒱₁|, |𝒱₂|)` for the pair `(i0, i1)` of an actual
/// matrix. `𝒱₀` and `𝒱₁` may overlap, so the sizes need not add up to
/// `n − 2`.
pub fn observed_partition(h: &ParityCheckMatrix, i0: usize, i1: usize) -> Result<[usize; 3]> {
    let n = h.n();
    if i0 >= n || i1 >= n || i0 == i1 {
        return Err(Error::params(format!("need two distinct columns below {n}, got {i0} and {i1}")));
    }
    let (a, b) = (h.col(i0), h.col(i1));
    // 0: untouched, bit 1: meets a shared check, bit 2: meets a single one.
    let mut mark = vec![0u8; n];
    for &l in a.iter().chain(b) {
        let shared = a.binary_search(&l).is_ok() && b.binary_search(&l).is_ok();
        for &j in h.row(l as usize) {
            mark[j as usize] |= if shared { 1 } else { 2 };
        }
    }
    let mut out = [0usize; 3];
    for (j, &m) in mark.iter().enumerate() {
        if j == i0 || j == i1 {
            continue;
        }
        out[0] += (m & 1 != 0) as usize;
        out[1] += (m & 2 != 0) as usize;
        out[2] += (m == 0) as usize;
    }
    Ok(out)
}

/// Probabilities that a single check is unsatisfied.
///
/// `p[i][d]` concerns a check in the `i`-th class seen from a bit of `𝒱ᵢ`
/// whose own error value is `d`; `p_e[i]` concerns a check seen from `i0` or
/// `i1` that contains `2 − i` of them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnsatProbs {
    pub p: [[f64; 2]; 3],
    pub p_e: [f64; 2],
}

/// Per-bit flip probabilities of the first iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipProbs {
    /// `p[i][d]`: bit in `𝒱ᵢ` with error value `d`.
    pub p: [[f64; 2]; 3],
    /// Either of `i0`, `i1`.
    pub p_e: f64,
}

impl FlipProbs {
    pub const NEVER: FlipProbs = FlipProbs { p: [[0.0; 2]; 3], p_e: 0.0 };
}

/// Everything the model predicts for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelPrediction {
    pub params: ModelParams,
    pub sizes: PartitionSizes,
    pub unsat: UnsatProbs,
    pub flip: FlipProbs,
    /// `E[t′]`.
    pub expected_residual: f64,
    /// `E[N_flip]`.
    pub expected_flips: f64,
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Default, Debug)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Sum::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Hypergeometric pmf: `k` successes when drawing `draws` items from a
/// population of `good + bad`. Returned as `(k_min, pmf)`; empty if the draw
/// is impossible.
pub fn hypergeometric_pmf(good: usize, bad: usize, draws: usize) -> (usize, Vec<f64>) {
    let total = good + bad;
    if draws > total {
        return (0, Vec::new());
    }
    let lo = draws.saturating_sub(bad);
    let hi = draws.min(good);
    // Unnormalised weights from the mode outwards keep every ratio near 1.
    let mode = {
        let m = ((draws + 1) as f64 * (good + 1) as f64 / (total + 2) as f64).floor() as usize;
        m.clamp(lo, hi)
    };
    let mut w = vec![0.0; hi - lo + 1];
    w[mode - lo] = 1.0;
    // w(k+1)/w(k) = (good − k)(draws − k) / ((k + 1)(bad − draws + k + 1))
    for k in mode..hi {
        let num = (good - k) as f64 * (draws - k) as f64;
        let den = (k + 1) as f64 * (bad + k + 1 - draws) as f64;
        w[k + 1 - lo] = w[k - lo] * num / den;
    }
    for k in (lo + 1..=mode).rev() {
        let num = k as f64 * (bad + k - draws) as f64;
        let den = (good - k + 1) as f64 * (draws - k + 1) as f64;
        w[k - 1 - lo] = w[k - lo] * num / den;
    }
    let z = sum(w.iter().copied());
    for x in &mut w {
        *x /= z;
    }
    (lo, w)
}

/// Probability that a hypergeometric count has the given parity.
fn hyper_parity(good: usize, bad: usize, draws: usize, odd: bool) -> f64 {
    let (lo, pmf) = hypergeometric_pmf(good, bad, draws);
    sum(pmf.iter().enumerate().filter(|(k, _)| ((lo + k) % 2 == 1) == odd).map(|(_, &x)| x))
}

/// Binomial pmf over `0..=m`.
pub fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    if p <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if p >= 1.0 {
        w[m] = 1.0;
        return w;
    }
    let mode = (((m + 1) as f64) * p).floor().min(m as f64) as usize;
    let odds = p / (1.0 - p);
    w[mode] = 1.0;
    for k in mode..m {
        w[k + 1] = w[k] * odds * (m - k) as f64 / (k + 1) as f64;
    }
    for k in (1..=mode).rev() {
        w[k - 1] = w[k] / odds * k as f64 / (m - k + 1) as f64;
    }
    let z = sum(w.iter().copied());
    for x in &mut w {
        *x /= z;
    }
    w
}

/// Unsatisfied-check probabilities for length `n`, row weight `w` and error
/// weight `t`. Probabilities about an erroneous third bit are 0 when `t = 2`.
pub fn unsat_probs(n: usize, w: usize, t: usize) -> Result<UnsatProbs> {
    if t < 2 || t > n {
        return Err(Error::ModelDomain(format!("need 2 ≤ t ≤ n, got t = {t}, n = {n}")));
    }
    if w < 3 || n <= w + 2 {
        return Err(Error::ModelDomain(format!("need w ≥ 3 and n > w + 2, got n = {n}, w = {w}")));
    }
    // A check of class i seen from a third bit j holds 2 − i of {i0, i1}
    // plus j itself; the other w − 3 + i positions are drawn from n − 3.
    let mut p = [[0.0; 2]; 3];
    for (i, row) in p.iter_mut().enumerate() {
        let good = w - 3 + i;
        let bad = n - w - i;
        // Unsatisfied when the total error count in the check is odd.
        let fixed = 2 - i;
        row[0] = hyper_parity(good, bad, t - 2, fixed % 2 == 0);
        row[1] = if t >= 3 { hyper_parity(good, bad, t - 3, fixed % 2 == 1) } else { 0.0 };
    }
    // Seen from i0: a class-0 check also holds i1, a class-1 check does not.
    let p_e = [
        hyper_parity(w - 2, n - w, t - 2, true),
        hyper_parity(w - 1, n - w - 1, t - 2, false),
    ];
    Ok(UnsatProbs { p, p_e })
}

/// Flip probabilities under the independent-check counter model.
pub fn flip_probs(params: &ModelParams) -> Result<FlipProbs> {
    params.validate()?;
    let u = unsat_probs(params.n, params.w, params.t)?;
    Ok(flip_probs_from(params, &u))
}

fn flip_probs_from(params: &ModelParams, u: &UnsatProbs) -> FlipProbs {
    let (v, b, g) = (params.v, params.b, params.gamma);
    let mut p = [[0.0; 2]; 3];
    for d in 0..2 {
        let others = binomial_pmf(v - 1, u.p[2][d]);
        let tail = sum(others[b.min(v)..].iter().copied());
        for (i, row) in p.iter_mut().enumerate().take(2) {
            row[d] = (others[b - 1] * u.p[i][d] + tail).min(1.0);
        }
        let all = binomial_pmf(v, u.p[2][d]);
        p[2][d] = sum(all[b..].iter().copied()).min(1.0);
    }
    let shared = binomial_pmf(g, u.p_e[0]);
    let single = binomial_pmf(v - g, u.p_e[1]);
    let mut p_e = Sum::default();
    for (l0, &a) in shared.iter().enumerate() {
        let start = b.saturating_sub(l0);
        if start < single.len() {
            p_e.add(a * sum(single[start..].iter().copied()));
        }
    }
    FlipProbs { p, p_e: p_e.value().clamp(0.0, 1.0) }
}

/// One term of the joint law of `(t⁽⁰⁾, t⁽¹⁾, t⁽²⁾)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionTerm {
    pub t: [usize; 3],
    pub prob: f64,
}

/// Joint multivariate hypergeometric law of how the `t − 2` free errors fall
/// into the three sets. Terms with zero probability are omitted.
pub fn partition_law(sizes: &PartitionSizes, t: usize) -> Vec<PartitionTerm> {
    let free = t.saturating_sub(2);
    let [a, b, c] = sizes.as_array();
    let mut out = Vec::new();
    let (lo0, first) = hypergeometric_pmf(a, b + c, free);
    for (k0, &p0) in first.iter().enumerate() {
        let t0 = lo0 + k0;
        let rest = free - t0;
        let (lo1, second) = hypergeometric_pmf(b, c, rest);
        for (k1, &p1) in second.iter().enumerate() {
            let t1 = lo1 + k1;
            let prob = p0 * p1;
            if prob > 0.0 {
                out.push(PartitionTerm { t: [t0, t1, rest - t1], prob });
            }
        }
    }
    out
}

/// `(E[t′], E[N_flip])` for given flip probabilities, averaged over the
/// partition law.
pub fn expectations_with(params: &ModelParams, flip: &FlipProbs) -> Result<(f64, f64)> {
    params.validate()?;
    let sizes = PartitionSizes::new(params)?;
    let v = sizes.as_array();
    let mut residual = Sum::default();
    let mut flips = Sum::default();
    for term in partition_law(&sizes, params.t) {
        let mut r = Sum::default();
        let mut f = Sum::default();
        for i in 0..3 {
            let ti = term.t[i] as f64;
            let clean = (v[i] - term.t[i]) as f64;
            r.add(ti * (1.0 - flip.p[i][1]));
            r.add(clean * flip.p[i][0]);
            f.add(ti * flip.p[i][1]);
            f.add(clean * flip.p[i][0]);
        }
        residual.add(term.prob * r.value());
        flips.add(term.prob * f.value());
    }
    residual.add(2.0 * (1.0 - flip.p_e));
    flips.add(2.0 * flip.p_e);
    Ok((residual.value(), flips.value()))
}

/// Full prediction for one parameter set.
pub fn predict(params: &ModelParams) -> Result<ModelPrediction> {
    params.validate()?;
    let sizes = PartitionSizes::new(params)?;
    let unsat = unsat_probs(params.n, params.w, params.t)?;
    let flip = flip_probs_from(params, &unsat);
    let (expected_residual, expected_flips) = expectations_with(params, &flip)?;
    Ok(ModelPrediction { params: *params, sizes, unsat, flip, expected_residual, expected_flips })
}

/// `E[t′]`, the expected number of errors left after the first iteration.
pub fn expected_residual(params: &ModelParams) -> Result<f64> {
    predict(params).map(|p| p.expected_residual)
}

/// `E[N_flip]`, the expected number of flips in the first iteration.
pub fn expected_flips(params: &ModelParams) -> Result<f64> {
    predict(params).map(|p| p.expected_flips)
}

/// How a column of the prediction table moves with `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    /// Not strictly monotone.
    Mixed,
    /// Fewer than two rows.
    Single,
}

pub fn trend(values: &[f64]) -> Trend {
    if values.len() < 2 {
        Trend::Single
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    }
}

/// Model predictions for `γ = 0..=γ_max` at fixed code and decoder parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    pub n: usize,
    pub v: usize,
    pub w: usize,
    pub t: usize,
    pub b: usize,
    pub rows: Vec<ModelPrediction>,
}

impl PredictionTable {
    pub fn gamma_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn residual_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.expected_residual).collect()
    }

    pub fn flips_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.expected_flips).collect()
    }

    pub fn residual_trend(&self) -> Trend {
        trend(&self.residual_column())
    }

    pub fn flips_trend(&self) -> Trend {
        trend(&self.flips_column())
    }

    /// Predicted mean reply per `γ` for metrics the model covers.
    pub fn metric_column(&self, metric: OracleMetric) -> Option<Vec<f64>> {
        match metric {
            OracleMetric::ResidualErrorsAfterIter1 => Some(self.residual_column()),
            OracleMetric::FlipCountIter1 => Some(self.flips_column()),
            _ => None,
        }
    }

    /// CSV with one row per `γ`, full double precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "gamma,E_t_prime,E_n_flip,p0_0u,p1_0u,p2_0u,p0_1u,p1_1u,p2_1u,pE0_u,pE1_u,\
             P0_0flip,P1_0flip,P2_0flip,P0_1flip,P1_1flip,P2_1flip,PE_flip,V0,V1,V2\n",
        );
        for r in &self.rows {
            let u = &r.unsat;
            let f = &r.flip;
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
                r.params.gamma,
                r.expected_residual,
                r.expected_flips,
                u.p[0][0],
                u.p[1][0],
                u.p[2][0],
                u.p[0][1],
                u.p[1][1],
                u.p[2][1],
                u.p_e[0],
                u.p_e[1],
                f.p[0][0],
                f.p[1][0],
                f.p[2][0],
                f.p[0][1],
                f.p[1][1],
                f.p[2][1],
                f.p_e,
                r.sizes.v0,
                r.sizes.v1,
                r.sizes.v2
            );
        }
        out
    }
}

pub fn prediction_table(
    n: usize,
    v: usize,
    w: usize,
    t: usize,
    b: usize,
    gamma_max: usize,
) -> Result<PredictionTable> {
    if gamma_max > v {
        return Err(Error::ModelDomain(format!("γ_max = {gamma_max} exceeds v = {v}")));
    }
    let rows = (0..=gamma_max)
        .map(|g| predict(&ModelParams::new(n, v, w, t, b, g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionTable { n, v, w, t, b, rows })
}
