//! Scenario identification for time-varying multipath fading channels.
//!
//! The crate is organized along the processing chain:
//!
//! - [`scenario_sim`]: the six tapped-delay-line scenarios, Doppler-shaped
//!   fading, channel application, AWGN and QPSK pilot frames.
//! - [`sounding`]: m-sequence probes, channel order estimation from the
//!   correlation peak spectrum and the iterative frequency-domain
//!   delay/amplitude estimator.
//! - [`channel_est`]: Slepian (DPSS) bases and basis-expansion least-squares
//!   estimation of time-varying tap gains.
//! - [`features`]: delay-discrete probability distribution plots (D-DPDPs)
//!   and their flattened feature vectors.
//! - [`classifier`]: a tanh multilayer perceptron trained with momentum SGD.
//! - [`pipeline`]: dataset generation, the train/test protocol, evaluation
//!   reports and the sounding flow.

pub mod channel_est;
pub mod classifier;
pub mod error;
pub mod features;
pub mod pipeline;
pub mod scenario_sim;
pub mod seed;
pub mod sounding;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Lowercase hex SHA-256 digest.
pub(crate) fn sha256_hex(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
