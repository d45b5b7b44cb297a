//! Delay-discrete probability distribution plots (D-DPDPs).
//!
//! Row `l` of a D-DPDP is the empirical distribution of the estimated
//! envelope `|mu_l[n]|` of the tap at delay `l` (10 us per row), over 400
//! equal bins covering `[0, 2)`. Envelopes at or beyond 2 land in the last
//! bin. Every row sums to one.

use serde::{Deserialize, Serialize};

use crate::channel_est::CirEstimate;
use crate::scenario_sim::{DELAY_UNIT_US, SCENARIO_COUNT};
use crate::{Error, Result};

pub const BIN_COUNT: usize = 400;
pub const ENVELOPE_MAX: f64 = 2.0;
pub const BIN_WIDTH: f64 = ENVELOPE_MAX / BIN_COUNT as f64;
/// Fewer samples than this cannot populate a row meaningfully.
pub const MIN_SAMPLES: usize = BIN_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct Ddpdp {
    /// `rows x BIN_COUNT`.
    pub bins: Vec<Vec<f64>>,
    pub delay_unit_us: f64,
}

impl Ddpdp {
    pub fn rows(&self) -> usize {
        self.bins.len()
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        self.bins
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.row_sum_error() <= tol && self.bins.iter().flatten().all(|&v| v >= 0.0)
    }
}

/// Bin index of an envelope value; values at or past the range clip into
/// the last bin.
pub fn bin_index(envelope: f64) -> usize {
    ((envelope / BIN_WIDTH).floor().max(0.0) as usize).min(BIN_COUNT - 1)
}

pub fn build_ddpdp(cir: &CirEstimate) -> Result<Ddpdp> {
    let n = cir.sample_count();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples per row, need at least {MIN_SAMPLES}"
        )));
    }
    let bins = cir
        .gains
        .iter()
        .map(|row| {
            let mut counts = vec![0u64; BIN_COUNT];
            for g in row {
                counts[bin_index(g.norm())] += 1;
            }
            counts.iter().map(|&c| c as f64 / n as f64).collect()
        })
        .collect();
    Ok(Ddpdp {
        bins,
        delay_unit_us: DELAY_UNIT_US,
    })
}

/// Classifier input: the D-DPDP rows concatenated, delay 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<u8>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Inverse of [`flatten`].
    pub fn reshape(&self) -> Result<Ddpdp> {
        if self.values.is_empty() || self.values.len() % BIN_COUNT != 0 {
            return Err(Error::Dimension(format!(
                "{} values is not a whole number of {BIN_COUNT}-bin rows",
                self.values.len()
            )));
        }
        Ok(Ddpdp {
            bins: self.values.chunks(BIN_COUNT).map(<[f64]>::to_vec).collect(),
            delay_unit_us: DELAY_UNIT_US,
        })
    }
}

pub fn flatten(ddpdp: &Ddpdp) -> FeatureVector {
    FeatureVector {
        values: ddpdp.bins.iter().flatten().copied().collect(),
        label: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHotLabel(pub [u8; SCENARIO_COUNT]);

impl OneHotLabel {
    pub fn as_f64(&self) -> [f64; SCENARIO_COUNT] {
        self.0.map(f64::from)
    }
}

pub fn one_hot(label: u8) -> Result<OneHotLabel> {
    if !(1..=SCENARIO_COUNT as u8).contains(&label) {
        return Err(Error::InvalidArgument(format!(
            "label {label} outside 1..={SCENARIO_COUNT}"
        )));
    }
    let mut v = [0; SCENARIO_COUNT];
    v[label as usize - 1] = 1;
    Ok(OneHotLabel(v))
}
