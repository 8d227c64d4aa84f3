//! Statistical reaction and timing attacks.
//!
//! Attack code sees the secret key only through [`DecryptionOracle`]; the
//! evaluation helpers that compare against the truth take the
//! [`GammaMatrix`] explicitly.
//!
//! [`DecryptionOracle`]: crate::channel::DecryptionOracle
//! [`GammaMatrix`]: crate::gamma::GammaMatrix

pub mod classify;
pub mod run;
pub mod stats;

pub use classify::{
    calibrate_predictions, classify_gamma, classify_gamma_kmeans, reconstruct_spectra,
    reconstruct_spectra_partial, Calibration, GammaEstimate, GammaEstimates, DEFAULT_MIN_SAMPLES,
};
pub use run::{
    collect_transcript, dfr_vs_syndrome_weight, pair_stats_from_transcript, run_exgjs, run_gsa,
    run_pair_scan, run_pairwise_scan, Campaign, ScanAccumulation, SyndromeWeightProfile,
};
pub use stats::{check_budget, BlockDistanceStats, PairIndex, PairKey, PairStats};
