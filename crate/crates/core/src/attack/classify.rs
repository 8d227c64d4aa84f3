//! Turning per-pair reply means into intersection-count estimates.

use rand::Rng;

use crate::attack::stats::{PairIndex, PairKey, PairStats};
use crate::error::{Error, Result};
use crate::gamma::GammaMatrix;
use crate::model::{trend, Trend};
use crate::rng::{stream, Domain};
use crate::spectrum::{spectrum_from_gamma, DistanceSpectrum, QcPairKey};

/// Default minimum number of samples before a pair is classified.
pub const DEFAULT_MIN_SAMPLES: u32 = 100;

/// Estimate for one pair or pair class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaEstimate {
    pub slot: usize,
    pub key: PairKey,
    /// `None` when the slot has fewer than the required samples.
    pub gamma: Option<u8>,
    /// Observed `A/B`, NaN when unvisited.
    pub mean: f64,
    pub samples: u32,
}

/// Estimates for every slot of a pair index.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaEstimates {
    pub index: PairIndex,
    pub entries: Vec<GammaEstimate>,
}

impl GammaEstimates {
    /// Every slot of `stats` left unclassified.
    pub fn unassigned(stats: &PairStats) -> Self {
        label_slots(stats, u32::MAX, |_| 0)
    }

    pub fn assigned(&self) -> impl Iterator<Item = &GammaEstimate> {
        self.entries.iter().filter(|e| e.gamma.is_some())
    }

    /// `(correct, assigned)` against the true intersection counts, restricted
    /// to slots whose true `γ` is at most `gamma_max`.
    pub fn accuracy(&self, truth: &GammaMatrix, gamma_max: u8) -> Result<(usize, usize)> {
        let mut correct = 0;
        let mut total = 0;
        for e in self.assigned() {
            let g = crate::attack::stats::true_gamma(truth, &self.index, e.slot)?;
            if g <= gamma_max {
                total += 1;
                correct += (e.gamma == Some(g)) as usize;
            }
        }
        Ok((correct, total))
    }

    /// CSV with one row per visited slot.
    pub fn to_csv(&self, truth: Option<&GammaMatrix>) -> Result<String> {
        let mut out = String::from("key,samples,mean,gamma_hat");
        if truth.is_some() {
            out.push_str(",true_gamma");
        }
        out.push('\n');
        for e in &self.entries {
            if e.samples == 0 {
                continue;
            }
            let key = match e.key {
                PairKey::Pair(i, j) => format!("{i}-{j}"),
                PairKey::Folded(k) => format!("{}-{}-{}", k.block_a, k.block_b, k.shift),
            };
            let g = e.gamma.map_or(String::new(), |g| g.to_string());
            out.push_str(&format!("{key},{},{:.6},{g}", e.samples, e.mean));
            if let Some(t) = truth {
                out.push_str(&format!(",{}", crate::attack::stats::true_gamma(t, &self.index, e.slot)?));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Index of the prediction nearest to `x`; ties go to the smaller index.
fn nearest(predictions: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (g, &p) in predictions.iter().enumerate().skip(1) {
        if (p - x).abs() < (predictions[best] - x).abs() {
            best = g;
        }
    }
    best
}

fn require_monotone(predictions: &[f64]) -> Result<Trend> {
    if predictions.is_empty() || predictions.len() > 256 || predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonMonotonePredictions);
    }
    match trend(predictions) {
        Trend::Mixed => Err(Error::NonMonotonePredictions),
        t => Ok(t),
    }
}

/// Assigns every slot with at least `min_samples` visits the `γ` whose
/// predicted mean reply is nearest to the observed one.
pub fn classify_gamma(stats: &PairStats, predictions: &[f64], min_samples: u32) -> Result<GammaEstimates> {
    require_monotone(predictions)?;
    Ok(label_slots(stats, min_samples, |m| nearest(predictions, m) as u8))
}

fn label_slots(stats: &PairStats, min_samples: u32, label: impl Fn(f64) -> u8) -> GammaEstimates {
    let index = stats.index().clone();
    let mut entries = Vec::new();
    for slot in 0..index.len() {
        let Some(key) = index.key(slot) else { continue };
        let samples = stats.counts()[slot];
        let mean = stats.mean(slot).unwrap_or(f64::NAN);
        let gamma = (samples >= min_samples.max(1)).then(|| label(mean));
        entries.push(GammaEstimate { slot, key, gamma, mean, samples });
    }
    GammaEstimates { index, entries }
}

/// Poisson prior over `γ = 0..=gamma_max` with mean `lambda`, renormalised.
pub fn poisson_prior(lambda: f64, gamma_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(gamma_max + 1);
    let mut term = (-lambda).exp();
    for k in 0..=gamma_max {
        if k > 0 {
            term *= lambda / k as f64;
        }
        out.push(term);
    }
    let z: f64 = out.iter().sum();
    out.iter().map(|x| x / z).collect()
}

/// Mean overlap of two columns of the same random circulant block.
pub fn mean_overlap_qc(p: usize, v: usize) -> f64 {
    (v * (v - 1)) as f64 / (p - 1) as f64
}

/// Mean overlap of two columns of a random `(v, w)`-regular matrix.
pub fn mean_overlap_regular(n: usize, v: usize, w: usize) -> f64 {
    (v * (w - 1)) as f64 / (n - 1) as f64
}

/// Affine correction `α + β·prediction` fitted to observed class means.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub offset: f64,
    pub scale: f64,
    /// Corrected predictions, one per `γ`.
    pub predictions: Vec<f64>,
    /// Fitted mixture weights per `γ`.
    pub weights: Vec<f64>,
    /// Fitted per-reply standard deviation.
    pub reply_sd: f64,
    pub iterations: usize,
}

/// Fits `mean ≈ α + β·predictions[γ]` to the well-sampled slots of `stats`
/// without knowing their `γ`.
///
/// The slot means are modelled as a Gaussian mixture with one component per
/// `γ`, centred on the corrected predictions, with variance `τ²/B` for a
/// slot of `B` samples. Components start from a rank split that follows
/// `prior`, then expectation-maximisation refines `α`, `β`, `τ` and the
/// mixture weights.
pub fn calibrate_predictions(
    stats: &PairStats,
    predictions: &[f64],
    prior: &[f64],
    min_samples: u32,
) -> Result<Calibration> {
    let direction = require_monotone(predictions)?;
    let k = predictions.len();
    if prior.len() != k || prior.iter().any(|&p| !(p >= 0.0)) || prior.iter().sum::<f64>() <= 0.0 {
        return Err(Error::params("prior must give one non-negative weight per γ"));
    }
    let mut points: Vec<(f64, f64)> = (0..stats.counts().len())
        .filter(|&s| stats.counts()[s] >= min_samples.max(1) && stats.index().key(s).is_some())
        .map(|s| (stats.mean(s).unwrap(), stats.counts()[s] as f64))
        .collect();
    if points.len() < 2 {
        return Err(Error::params("too few well-sampled slots to calibrate"));
    }
    // Sort along increasing γ and split by prior quantiles.
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if direction == Trend::Decreasing {
        points.reverse();
    }
    let z: f64 = prior.iter().sum();
    let mut weights: Vec<f64> = prior.iter().map(|p| p / z).collect();
    let mut resp = vec![0.0; points.len() * k];
    let mut cum = 0.0;
    let mut g = 0;
    for (s, _) in points.iter().enumerate() {
        let q = (s as f64 + 0.5) / points.len() as f64;
        while g + 1 < k && q > cum + weights[g] {
            cum += weights[g];
            g += 1;
        }
        resp[s * k + g] = 1.0;
    }

    let (mut offset, mut scale) = fit_affine(&points, &resp, predictions);
    let mut tau2 = residual_variance(&points, &resp, predictions, offset, scale);
    let mut iterations = 0;
    let mut last_ll = f64::NEG_INFINITY;
    for it in 1..=500 {
        iterations = it;
        // E step.
        let mut ll = 0.0;
        for (s, &(m, b)) in points.iter().enumerate() {
            let var = tau2 / b;
            let row = &mut resp[s * k..(s + 1) * k];
            let mut best = f64::NEG_INFINITY;
            for (g, r) in row.iter_mut().enumerate() {
                let mu = offset + scale * predictions[g];
                *r = if weights[g] > 0.0 { weights[g].ln() - (m - mu).powi(2) / (2.0 * var) } else { f64::NEG_INFINITY };
                best = best.max(*r);
            }
            let mut total = 0.0;
            for r in row.iter_mut() {
                *r = (*r - best).exp();
                total += *r;
            }
            for r in row.iter_mut() {
                *r /= total;
            }
            ll += best + total.ln() - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        }
        // M step.
        (offset, scale) = fit_affine(&points, &resp, predictions);
        tau2 = residual_variance(&points, &resp, predictions, offset, scale).max(1e-300);
        for (g, w) in weights.iter_mut().enumerate() {
            *w = (0..points.len()).map(|s| resp[s * k + g]).sum::<f64>() / points.len() as f64;
        }
        if (ll - last_ll).abs() <= 1e-10 * ll.abs().max(1.0) {
            break;
        }
        last_ll = ll;
    }
    let predictions = predictions.iter().map(|p| offset + scale * p).collect();
    Ok(Calibration { offset, scale, predictions, weights, reply_sd: tau2.sqrt(), iterations })
}

/// Weighted least squares for `y ≈ α + β·x` over soft labels, weighting each
/// slot by its sample count. Falls back to a pure offset when the labels do
/// not spread or the slope is not positive.
fn fit_affine(points: &[(f64, f64)], resp: &[f64], predictions: &[f64]) -> (f64, f64) {
    let k = predictions.len();
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, &(y, b)) in points.iter().enumerate() {
        for (g, &x) in predictions.iter().enumerate() {
            let w = resp[s * k + g] * b;
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
    }
    let var = sxx - sx * sx / sw;
    let cov = sxy - sx * sy / sw;
    let spread = predictions.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - predictions.iter().cloned().fold(f64::INFINITY, f64::min);
    if var > 1e-9 * spread * spread * sw && cov / var > 0.0 {
        let beta = cov / var;
        ((sy - beta * sx) / sw, beta)
    } else {
        ((sy - sx) / sw, 1.0)
    }
}

/// `τ²` estimate: mean of `B·(m − μ_γ)²` over slots and soft labels.
fn residual_variance(points: &[(f64, f64)], resp: &[f64], predictions: &[f64], offset: f64, scale: f64) -> f64 {
    let k = predictions.len();
    let mut acc = 0.0;
    for (s, &(m, b)) in points.iter().enumerate() {
        for (g, &x) in predictions.iter().enumerate() {
            acc += resp[s * k + g] * b * (m - offset - scale * x).powi(2);
        }
    }
    acc / points.len() as f64
}

/// Result of the model-free classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    /// Cluster centres, ordered by the `γ` they are mapped to.
    pub centers: Vec<f64>,
    pub gap: Vec<f64>,
    pub estimates: GammaEstimates,
}

/// Sample-weighted 1-D k-means with quantile initialisation.
fn kmeans_1d(xs: &[(f64, f64)], k: usize) -> (Vec<f64>, f64) {
    let mut sorted: Vec<f64> = xs.iter().map(|x| x.0).collect();
    sorted.sort_by(f64::total_cmp);
    let mut centers: Vec<f64> =
        (0..k).map(|c| sorted[((2 * c + 1) * sorted.len() / (2 * k)).min(sorted.len() - 1)]).collect();
    centers.dedup();
    let mut assign = vec![0usize; xs.len()];
    for _ in 0..200 {
        let mut changed = false;
        for (a, &(x, _)) in assign.iter_mut().zip(xs) {
            let c = nearest(&centers, x);
            changed |= *a != c;
            *a = c;
        }
        let mut sums = vec![(0.0, 0.0); centers.len()];
        for (&a, &(x, w)) in assign.iter().zip(xs) {
            sums[a].0 += w * x;
            sums[a].1 += w;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.1 > 0.0 {
                *c = s.0 / s.1;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = assign.iter().zip(xs).map(|(&a, &(x, w))| w * (x - centers[a]).powi(2)).sum();
    (centers, inertia)
}

/// Model-free classification: 1-D k-means on the slot means, with the
/// number of clusters chosen by the gap statistic over `1..=k_max`. The most
/// populated cluster is taken as `γ = 0` and labels grow away from it.
pub fn classify_gamma_kmeans(stats: &PairStats, k_max: usize, min_samples: u32, seed: u64) -> Result<KMeansFit> {
    let points: Vec<(f64, f64)> = (0..stats.counts().len())
        .filter(|&s| stats.counts()[s] >= min_samples.max(1) && stats.index().key(s).is_some())
        .map(|s| (stats.mean(s).unwrap(), 1.0))
        .collect();
    if points.len() < 2 || k_max == 0 {
        return Err(Error::params("too few well-sampled slots for clustering"));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let references = 10;
    let mut rng = stream(seed, Domain::Synthetic, 0);
    let mut gap = Vec::new();
    let mut spread = Vec::new();
    for k in 1..=k_max.min(points.len()) {
        let (_, w) = kmeans_1d(&points, k);
        let mut logs = Vec::with_capacity(references);
        for _ in 0..references {
            let reference: Vec<(f64, f64)> =
                points.iter().map(|_| (lo + (hi - lo) * rng.gen::<f64>(), 1.0)).collect();
            logs.push(kmeans_1d(&reference, k).1.max(f64::MIN_POSITIVE).ln());
        }
        let mean = logs.iter().sum::<f64>() / references as f64;
        let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / references as f64).sqrt();
        gap.push(mean - w.max(f64::MIN_POSITIVE).ln());
        spread.push(sd * (1.0 + 1.0 / references as f64).sqrt());
    }
    // Smallest k with gap(k) ≥ gap(k+1) − s(k+1).
    let mut k_best = gap.len();
    for k in 0..gap.len().saturating_sub(1) {
        if gap[k] >= gap[k + 1] - spread[k + 1] {
            k_best = k + 1;
            break;
        }
    }
    let (mut centers, _) = kmeans_1d(&points, k_best);
    centers.sort_by(f64::total_cmp);
    let mut sizes = vec![0usize; centers.len()];
    for &(x, _) in &points {
        sizes[nearest(&centers, x)] += 1;
    }
    let biggest = (0..centers.len()).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap();
    // γ = 0 sits at whichever end holds the biggest cluster.
    if biggest * 2 >= centers.len() {
        centers.reverse();
    }
    let estimates = label_slots(stats, min_samples, |m| nearest(&centers, m) as u8);
    Ok(KMeansFit { centers, gap, estimates })
}

/// Per-block spectra from folded estimates. Fails if any same-block class
/// lacks an estimate.
pub fn reconstruct_spectra(estimates: &GammaEstimates) -> Result<Vec<DistanceSpectrum>> {
    let partial = reconstruct_spectra_partial(estimates)?;
    let p = match estimates.index {
        PairIndex::QcFolded { p, .. } => p,
        _ => unreachable!(),
    };
    partial
        .into_iter()
        .enumerate()
        .map(|(block, classes)| {
            let missing = classes.iter().filter(|c| c.is_none()).count();
            if missing > 0 {
                return Err(Error::IncompleteCoverage { block, missing, total: classes.len() });
            }
            let gammas: Vec<u32> = classes.into_iter().map(|c| c.unwrap() as u32).collect();
            spectrum_from_gamma(&gammas, p)
        })
        .collect()
}

/// Per block, `γ̂` at distances `1..=p/2` (index `d − 1`), `None` where no
/// estimate exists.
pub fn reconstruct_spectra_partial(estimates: &GammaEstimates) -> Result<Vec<Vec<Option<u8>>>> {
    let PairIndex::QcFolded { p, n0 } = estimates.index else {
        return Err(Error::NotQuasiCyclic);
    };
    let mut out = vec![vec![None; p / 2]; n0];
    for e in &estimates.entries {
        if let PairKey::Folded(QcPairKey { block_a, block_b, shift }) = e.key {
            if block_a == block_b {
                out[block_a as usize][shift as usize - 1] = e.gamma;
            }
        }
    }
    Ok(out)
}
