//! Maximal channel order from the correlation peak spectrum.
//!
//! In the analog receiver the per-path carrier phases are removed by an
//! adaptive phase-correction loop before envelope detection and despreading.
//! In complex baseband the same phase-insensitive per-path magnitude is the
//! modulus of the circular cross-correlation between the received probe and
//! the local chips, which is what is computed here. Peak positions match the
//! analog chain; peak heights are `|mu_l|` rather than `mu_l^2`.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::MSequence;
use crate::scenario_sim::ComplexSignal;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakRule {
    /// A lag is a peak when its correlation magnitude is at least this
    /// fraction of the largest one.
    pub threshold_factor: f64,
    /// ...and at least this multiple of the median magnitude, which tracks
    /// the noise floor when paths occupy a small fraction of the lags.
    pub floor_factor: f64,
}

impl Default for PeakRule {
    fn default() -> Self {
        Self {
            threshold_factor: 0.5,
            floor_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub order: usize,
    pub peak_lags: Vec<usize>,
    pub peak_values: Vec<f64>,
    pub threshold: f64,
    /// Correlation magnitude at every lag.
    pub spectrum: Vec<f64>,
}

fn period_average(received: &ComplexSignal, period: usize) -> Result<Vec<C64>> {
    let n = received.len();
    if n < period {
        return Err(Error::InsufficientData(format!(
            "{n} samples, probe period is {period}"
        )));
    }
    if n % period != 0 {
        return Err(Error::Dimension(format!(
            "{n} samples is not a whole number of {period}-chip periods"
        )));
    }
    let periods = n / period;
    let mut avg = vec![C64::new(0.0, 0.0); period];
    for chunk in received.samples().chunks_exact(period) {
        for (a, s) in avg.iter_mut().zip(chunk) {
            *a += s;
        }
    }
    avg.iter_mut().for_each(|a| *a /= periods as f64);
    Ok(avg)
}

/// `|c[tau]|` with `c[tau] = (1/N) sum_n r[n] m[(n - tau) mod N]`, after
/// averaging the received periods.
pub fn correlation_spectrum(received: &ComplexSignal, local: &MSequence) -> Result<Vec<f64>> {
    let n = local.period();
    let mut r = period_average(received, n)?;
    let mut m: Vec<C64> = local.chips.iter().map(|&c| C64::new(c as f64, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut r);
    fft.process(&mut m);
    let mut prod: Vec<C64> = r.iter().zip(&m).map(|(a, b)| a * b.conj()).collect();
    planner.plan_fft_inverse(n).process(&mut prod);
    let scale = 1.0 / (n as f64 * n as f64);
    Ok(prod.iter().map(|c| c.norm() * scale).collect())
}

pub fn estimate_order(received: &ComplexSignal, local: &MSequence, threshold_factor: f64) -> Result<OrderEstimate> {
    estimate_order_with(
        received,
        local,
        &PeakRule {
            threshold_factor,
            ..PeakRule::default()
        },
    )
}

pub fn estimate_order_with(received: &ComplexSignal, local: &MSequence, rule: &PeakRule) -> Result<OrderEstimate> {
    if !(rule.threshold_factor > 0.0 && rule.threshold_factor <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold factor must lie in (0, 1], got {}",
            rule.threshold_factor
        )));
    }
    let spectrum = correlation_spectrum(received, local)?;
    let max = spectrum.iter().cloned().fold(0.0, f64::max);
    let rms = crate::scenario_sim::signal_power(received.samples()).sqrt();
    if !(max > 1e-12 * rms) || max == 0.0 {
        return Err(Error::InsufficientSignal(
            "no correlation peak above the numeric floor".into(),
        ));
    }
    let mut sorted = spectrum.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = (rule.threshold_factor * max).max(rule.floor_factor * median);

    let (peak_lags, peak_values): (Vec<usize>, Vec<f64>) = spectrum
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(lag, &v)| (lag, v))
        .unzip();
    Ok(OrderEstimate {
        order: peak_lags.len(),
        peak_lags,
        peak_values,
        threshold,
        spectrum,
    })
}
