//! Attack summaries for the evaluator.

use std::fmt::Write as _;
use std::time::Duration;

use bflab_core::attack::Calibration;

/// Mean reply over all pairs of one true intersection count.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMean {
    pub gamma: u8,
    pub samples: u64,
    pub metric_sum: u64,
    pub mean: f64,
    /// Model prediction for this `γ`, when the metric has one.
    pub predicted: Option<f64>,
}

/// Reconstruction errors for one circulant block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDiff {
    pub block: usize,
    /// Distance classes without an estimate.
    pub missing: usize,
    /// Distances whose reconstructed multiplicity is wrong.
    pub wrong: Vec<usize>,
    /// Distances that were scanned directly.
    pub scanned: usize,
    /// Wrong distances among the scanned ones.
    pub wrong_scanned: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttackReport {
    pub queries: u64,
    /// Queries the configuration asked for.
    pub expected_queries: u64,
    pub wall_time: Duration,
    pub classes: Vec<ClassMean>,
    pub calibration: Option<Calibration>,
    /// `(correct, total)` over scanned pairs with true `γ ≤ γ_max`.
    pub scanned_accuracy: Option<(usize, usize)>,
    /// `(correct, total)` over every classified slot with true `γ ≤ γ_max`.
    pub overall_accuracy: Option<(usize, usize)>,
    pub gamma_max: Option<u8>,
    pub spectra: Vec<BlockDiff>,
    /// Syndrome-weight profiles only: weighted correlation between weight
    /// and failure rate, and the larger-over-smaller failure rate of the
    /// lowest- and highest-weight populated bins.
    pub correlation: Option<f64>,
    pub dfr_ratio: Option<f64>,
}

fn pct((c, t): (usize, usize)) -> String {
    if t == 0 {
        "n/a".into()
    } else {
        format!("{c}/{t} ({:.2}%)", 100.0 * c as f64 / t as f64)
    }
}

impl AttackReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "queries: {} of {}", self.queries, self.expected_queries);
        let _ = writeln!(out, "wall time: {:.3} s", self.wall_time.as_secs_f64());
        if !self.classes.is_empty() {
            let _ = writeln!(out, "gamma  samples  mean  predicted");
            for c in &self.classes {
                let pred = c.predicted.map_or("-".into(), |p| format!("{p:.4}"));
                let _ = writeln!(out, "{:>5}  {:>7}  {:.4}  {pred}", c.gamma, c.samples, c.mean);
            }
        }
        if let Some(c) = &self.calibration {
            let _ = writeln!(out, "calibration: offset {:.4}, scale {:.4}, reply sd {:.3}", c.offset, c.scale, c.reply_sd);
        }
        if let Some(a) = self.scanned_accuracy {
            let _ = writeln!(out, "scanned accuracy: {}", pct(a));
        }
        if let Some(a) = self.overall_accuracy {
            let _ = writeln!(out, "overall accuracy: {}", pct(a));
        }
        for b in &self.spectra {
            let _ = writeln!(
                out,
                "block {}: {} missing, {} wrong, {} of {} scanned wrong",
                b.block,
                b.missing,
                b.wrong.len(),
                b.wrong_scanned.len(),
                b.scanned
            );
        }
        if let Some(r) = self.correlation {
            let _ = writeln!(out, "syndrome weight vs failure correlation: {r:.4}");
        }
        if let Some(r) = self.dfr_ratio {
            let _ = writeln!(out, "extreme-bin failure-rate ratio: {r:.3}");
        }
        out
    }
}
