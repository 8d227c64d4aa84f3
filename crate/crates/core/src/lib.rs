//! Simulation of bit-flipping decoding for sparse parity-check codes and of
//! the reaction and timing attacks that exploit its data-dependent behaviour.
//!
//! The crate is organised bottom-up:
//!
//! * [`code`], [`gamma`], [`spectrum`], [`keyfile`]: regular and
//!   quasi-cyclic parity-check matrices, column intersection counts, cyclic
//!   distance spectra and the text key format.
//! * [`channel`]: error-vector ensembles, syndromes and the decryption oracle.
//! * [`decoder`]: the instrumented out-of-place bit-flipping decoder.
//! * [`attack`]: pair- and distance-binned statistics, scans and
//!   classification of intersection counts.
//! * [`model`]: closed-form first-iteration predictions.

pub mod attack;
pub mod bits;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod gamma;
pub mod keyfile;
pub mod model;
pub mod rng;
pub mod sample;
pub mod spectrum;

pub use bits::BitVec;
pub use channel::{
    oracle_query, sample_error, syndrome, Constraint, DecryptionOracle, EnsembleSpec, ErrorVector,
    OracleMetric, OracleReply, SimulatedOracle,
};
pub use code::{gen_qc, gen_regular, ParityCheckMatrix, Structure};
pub use decoder::{counters, decode, DecodeTrace, DecoderConfig, IterationRecord};
pub use error::{Error, Result};
pub use gamma::GammaMatrix;
pub use spectrum::{distance_spectrum, fold_pair_qc, spectrum_from_gamma, DistanceSpectrum, QcPairKey};
