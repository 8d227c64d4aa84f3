//! Named configurations for the published experiments at desk scale.
//!
//! | preset            | experiment | code                       | metric                  | budget              |
//! |-------------------|------------|----------------------------|-------------------------|---------------------|
//! | `fig1a`, `fig1b`  | dfr-vs-ws  | (25,50) / (20,40), n=5000  | failure                 | 10⁶ (was 10⁷)       |
//! | `fig2a`, `fig2b`  | pairwise   | (25,50) / (20,40)          | failure                 | 10⁴/pair × 200 pairs |
//! | `fig3a`, `fig3b`  | pairwise   | (25,50) / (20,40)          | residual errors         | 10⁴/pair × 200 pairs |
//! | `fig4a`, `fig4b`  | pairwise   | QC p=4801, n0=2, v=45      | residual / syndrome wt. | 10⁴/pair × 200 classes |
//! | `table1a`, `table1b` | pairwise | (25,50) / (20,40)         | residual errors         | 10⁶ per γ           |
//!
//! The pairwise scans replace the full sweeps of 10⁹ and 10⁸ decodings by
//! a target subset stratified by intersection count.

use bflab_core::{DecoderConfig, OracleMetric};

use crate::config::{CodeSource, ExperimentConfig, ExperimentKind, PairPolicy};
use crate::error::{LabError, Result};

pub const PRESETS: [&str; 10] =
    ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "table1a", "table1b"];

/// Seed of the generated code behind every preset.
pub const CODE_SEED: u64 = 1;

/// `(25, 50)`-regular code of length 5000.
pub fn code_a() -> CodeSource {
    CodeSource::Regular { n: 5000, r: 2500, v: 25, w: 50, seed: CODE_SEED }
}

/// `(20, 40)`-regular code of length 5000.
pub fn code_b() -> CodeSource {
    CodeSource::Regular { n: 5000, r: 2500, v: 20, w: 40, seed: CODE_SEED }
}

/// Quasi-cyclic code with two circulant blocks of size 4801 and column
/// weight 45.
pub fn code_qc() -> CodeSource {
    CodeSource::Qc { p: 4801, n0: 2, v: 45, seed: CODE_SEED }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (kind, code, metric) = match name {
        "fig1a" => (ExperimentKind::DfrVsWs, code_a(), OracleMetric::Failure),
        "fig1b" => (ExperimentKind::DfrVsWs, code_b(), OracleMetric::Failure),
        "fig2a" => (ExperimentKind::Pairwise, code_a(), OracleMetric::Failure),
        "fig2b" => (ExperimentKind::Pairwise, code_b(), OracleMetric::Failure),
        "fig3a" | "table1a" => (ExperimentKind::Pairwise, code_a(), OracleMetric::ResidualErrorsAfterIter1),
        "fig3b" | "table1b" => (ExperimentKind::Pairwise, code_b(), OracleMetric::ResidualErrorsAfterIter1),
        "fig4a" => (ExperimentKind::Pairwise, code_qc(), OracleMetric::ResidualErrorsAfterIter1),
        "fig4b" => (ExperimentKind::Pairwise, code_qc(), OracleMetric::SyndromeWeightAfterIter1),
        other => return Err(LabError::UnknownPreset(other.into(), PRESETS.join(", "))),
    };
    let mut c = ExperimentConfig::new(kind, code);
    c.metric = metric;
    c.seed = 1;
    if name.starts_with("fig4") {
        c.t = 84;
        c.decoder = DecoderConfig::new(5, 28);
    }
    match name {
        // Five pairs per γ at 2·10⁵ queries each: 10⁶ samples per γ.
        "table1a" => {
            c.pairs = PairPolicy::Stratified { pairs: 25, gamma_max: Some(4) };
            c.gamma_max = Some(4);
            c.budget = 200_000;
        }
        "table1b" => {
            c.pairs = PairPolicy::Stratified { pairs: 20, gamma_max: Some(3) };
            c.gamma_max = Some(3);
            c.budget = 200_000;
        }
        _ => {}
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_parameters() {
        let c = preset("fig2a").unwrap();
        assert_eq!(c.code, CodeSource::Regular { n: 5000, r: 2500, v: 25, w: 50, seed: CODE_SEED });
        assert_eq!((c.t, c.decoder.i_max, c.decoder.b), (58, 5, 15));
        assert_eq!(c.metric, OracleMetric::Failure);

        let c = preset("fig4b").unwrap();
        assert_eq!(c.code, CodeSource::Qc { p: 4801, n0: 2, v: 45, seed: CODE_SEED });
        assert_eq!((c.t, c.decoder.b), (84, 28));
        assert_eq!(c.metric, OracleMetric::SyndromeWeightAfterIter1);

        let c = preset("table1b").unwrap();
        assert_eq!(c.code, CodeSource::Regular { n: 5000, r: 2500, v: 20, w: 40, seed: CODE_SEED });
        assert_eq!((c.t, c.decoder.b), (58, 15));
        assert_eq!(c.metric, OracleMetric::ResidualErrorsAfterIter1);
        assert_eq!(c.budget * 5, 1_000_000);

        let c = preset("fig1a").unwrap();
        assert_eq!((c.kind, c.budget), (ExperimentKind::DfrVsWs, 1_000_000));
    }

    #[test]
    fn every_preset_validates_and_unknown_fails() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        let err = preset("fig5").unwrap_err().to_string();
        assert!(err.contains("fig5") && err.contains("table1b"));
    }
}
