//! Channel sounding with m-sequence probes.
//!
//! Order estimation correlates the received probe with the local chips and
//! counts the peaks of the correlation magnitude. Delays and complex
//! amplitudes are then refined by an iterative relaxation in the frequency
//! domain, where each path is re-fit against the residual of all others.

mod mseq;
mod order;
mod relax;

pub use mseq::{generate_mseq, default_polynomial, MSequence, Polynomial};
pub use order::{
    correlation_spectrum, estimate_order, estimate_order_with, OrderEstimate, PeakRule,
};
pub use relax::{
    amplitude_given_delay, delay_argmax, probe_spectrum, relax_cost, relax_estimate,
    DelayAmplitudeEstimate, FrequencyData, PathEstimate, RelaxConfig,
};

/// Above this Doppler-times-probe-length product the amplitudes can no
/// longer be treated as constant over one probe.
pub const COHERENCE_LIMIT: f64 = 0.1;

/// Returns false (and logs a warning) when `doppler_per_sample * probe_len`
/// is too large for the constant-amplitude model of a single probe.
pub fn check_coherence(doppler_per_sample: f64, probe_len: usize) -> bool {
    let product = doppler_per_sample * probe_len as f64;
    if product > COHERENCE_LIMIT {
        log::warn!(
            "probe spans {product:.3} Doppler cycles; path amplitudes will drift within one probe"
        );
        false
    } else {
        true
    }
}
