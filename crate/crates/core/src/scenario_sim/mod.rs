//! Time-varying multipath channel simulation for the six reference
//! scenarios.

mod channel;
mod fading;
pub mod profile;
mod qpsk;

pub use channel::{add_awgn, apply_channel, signal_power};
pub use fading::{doppler_bin_powers, fft_length_for, generate_fading};
pub use profile::{
    load_profile, registry, DopplerSpectrum, GaussianLobe, ScenarioProfile, DELAY_UNIT_US,
    MAX_TAPS, SCENARIO_COUNT,
};
pub use qpsk::{modulate_qpsk, qpsk_symbol, PilotSpec, QpskFrame};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub symbol_rate_hz: f64,
    /// Maximum Doppler frequency times the symbol period.
    pub normalized_doppler: f64,
    pub samples_per_symbol: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 1e5,
            normalized_doppler: 0.004,
            samples_per_symbol: 1,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Checks the configuration. A normalized Doppler of exactly zero is
    /// accepted and yields frozen (static) taps.
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate_hz > 0.0 && self.symbol_rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "symbol_rate_hz must be positive, got {}",
                self.symbol_rate_hz
            )));
        }
        if !(0.0..0.5).contains(&self.normalized_doppler) {
            return Err(Error::InvalidArgument(format!(
                "normalized_doppler must lie in [0, 0.5), got {}",
                self.normalized_doppler
            )));
        }
        if self.samples_per_symbol == 0 {
            return Err(Error::InvalidArgument("samples_per_symbol must be >= 1".into()));
        }
        Ok(())
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / (self.symbol_rate_hz * self.samples_per_symbol as f64)
    }

    pub fn max_doppler_hz(&self) -> f64 {
        self.normalized_doppler * self.symbol_rate_hz
    }

    /// Maximum Doppler frequency in cycles per sample.
    pub fn doppler_per_sample(&self) -> f64 {
        self.normalized_doppler / self.samples_per_symbol as f64
    }

    /// Tap delay in whole samples.
    pub fn delay_units(&self, delay_us: f64) -> usize {
        (delay_us * 1e-6 / self.sample_period_s()).round() as usize
    }
}

/// Signal-to-noise ratio, or no noise at all. Serialized as a number in dB
/// or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Snr {
    Noiseless,
    Db(f64),
}

impl Snr {
    pub fn is_noiseless(&self) -> bool {
        matches!(self, Snr::Noiseless)
    }

    pub fn db(&self) -> Option<f64> {
        match self {
            Snr::Noiseless => None,
            Snr::Db(db) => Some(*db),
        }
    }

    /// Stable integer key, used for seeding and grouping.
    pub fn key(&self) -> u64 {
        match self {
            Snr::Noiseless => u64::MAX,
            Snr::Db(db) => db.to_bits(),
        }
    }
}

impl From<Option<f64>> for Snr {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Snr::Noiseless, Snr::Db)
    }
}

impl From<Snr> for Option<f64> {
    fn from(s: Snr) -> Self {
        s.db()
    }
}

impl std::fmt::Display for Snr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Snr::Noiseless => write!(f, "noiseless"),
            Snr::Db(db) => write!(f, "{db} dB"),
        }
    }
}

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<C64>,
    sample_period_s: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<C64>, sample_period_s: f64) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        if !(sample_period_s > 0.0 && sample_period_s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be positive, got {sample_period_s}"
            )));
        }
        Ok(Self {
            samples,
            sample_period_s,
        })
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    /// Samples `start..end` as a new signal.
    pub fn slice(&self, start: usize, end: usize) -> ComplexSignal {
        ComplexSignal {
            samples: self.samples[start..end].to_vec(),
            sample_period_s: self.sample_period_s,
        }
    }
}

/// Tap gain trajectories `gains[l][n]` of a tapped delay line.
#[derive(Debug, Clone, PartialEq)]
pub struct CirMatrix {
    gains: Vec<Vec<C64>>,
    sample_period_s: f64,
    delay_units: Vec<usize>,
}

impl CirMatrix {
    pub fn new(gains: Vec<Vec<C64>>, delay_units: Vec<usize>, sample_period_s: f64) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidArgument("CIR needs at least one tap".into()));
        }
        let n = gains[0].len();
        if n == 0 || gains.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(
                "CIR rows must be nonempty and of equal length".into(),
            ));
        }
        if delay_units.len() != gains.len() {
            return Err(Error::Dimension(format!(
                "{} delays for {} taps",
                delay_units.len(),
                gains.len()
            )));
        }
        Ok(Self {
            gains,
            sample_period_s,
            delay_units,
        })
    }

    /// A channel whose taps do not change over `n_samples`.
    pub fn frozen(taps: &[C64], delay_units: Vec<usize>, n_samples: usize, sample_period_s: f64) -> Result<Self> {
        let gains = taps.iter().map(|&g| vec![g; n_samples]).collect();
        Self::new(gains, delay_units, sample_period_s)
    }

    pub fn gains(&self) -> &[Vec<C64>] {
        &self.gains
    }

    pub fn delay_units(&self) -> &[usize] {
        &self.delay_units
    }

    pub fn tap_count(&self) -> usize {
        self.gains.len()
    }

    pub fn sample_count(&self) -> usize {
        self.gains[0].len()
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    /// Samples `start..end` of every tap.
    pub fn slice(&self, start: usize, end: usize) -> CirMatrix {
        CirMatrix {
            gains: self.gains.iter().map(|row| row[start..end].to_vec()).collect(),
            sample_period_s: self.sample_period_s,
            delay_units: self.delay_units.clone(),
        }
    }
}
