use rand_distr::{Distribution, StandardNormal};

use super::{CirMatrix, ComplexSignal, Snr};
use crate::{seed, Error, Result, C64};

/// Passes `signal` through the tapped delay line:
/// `out[n] = sum_l gains[l][n] * signal[n - delay_l]`, zero before the start.
pub fn apply_channel(signal: &ComplexSignal, cir: &CirMatrix) -> Result<ComplexSignal> {
    let n = signal.len();
    if n != cir.sample_count() {
        return Err(Error::Dimension(format!(
            "signal has {n} samples, channel has {}",
            cir.sample_count()
        )));
    }
    if let Some(&d) = cir.delay_units().iter().find(|&&d| d >= n) {
        return Err(Error::Dimension(format!(
            "tap delay {d} not shorter than signal length {n}"
        )));
    }
    let x = signal.samples();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (row, &delay) in cir.gains().iter().zip(cir.delay_units()) {
        for i in delay..n {
            out[i] += row[i] * x[i - delay];
        }
    }
    ComplexSignal::new(out, signal.sample_period_s())
}

/// Mean squared magnitude of the samples.
pub fn signal_power(samples: &[C64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Adds circular complex white Gaussian noise at `snr` relative to the
/// measured power of `signal`.
pub fn add_awgn(signal: &ComplexSignal, snr: Snr, seed: u64) -> Result<ComplexSignal> {
    let snr_db = match snr {
        Snr::Noiseless => return Ok(signal.clone()),
        Snr::Db(db) => db,
    };
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("SNR must be finite, got {snr_db}")));
    }
    let power = signal_power(signal.samples());
    if power <= 0.0 {
        return Err(Error::DegenerateInput(
            "cannot set an SNR on a zero-power signal".into(),
        ));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = seed::rng(seed);
    let noisy = signal
        .samples()
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + C64::new(re, im) * sigma
        })
        .collect();
    ComplexSignal::new(noisy, signal.sample_period_s())
}
