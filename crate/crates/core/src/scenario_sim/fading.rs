//! Doppler-shaped Rayleigh fading by spectral filtering of white complex
//! Gaussian noise.
//!
//! Each tap is synthesized in the frequency domain: the power of DFT bin `k`
//! is the Doppler spectrum integrated over that bin (through the spectrum's
//! CDF, which copes with the integrable edge singularity of the classical
//! spectrum), every bin gets an independent CN(0, 1) weight and an inverse
//! FFT returns the tap trajectory. The result is a circularly stationary
//! complex Gaussian process whose autocorrelation is exactly the inverse DFT
//! of the bin powers.

use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::{CirMatrix, DopplerSpectrum, ScenarioProfile, SimConfig};
use crate::{seed, Error, Result, C64};

/// Minimum number of DFT bins spanned by the maximum Doppler frequency.
const MIN_DOPPLER_BINS: f64 = 128.0;
const MAX_FFT_LEN: usize = 1 << 22;

/// FFT length used to synthesize `n_samples` of fading at `doppler` cycles
/// per sample.
pub fn fft_length_for(n_samples: usize, doppler: f64) -> usize {
    let mut len = n_samples.max(1).next_power_of_two();
    if doppler > 0.0 {
        let wanted = (MIN_DOPPLER_BINS / doppler).ceil() as usize;
        len = len.max(wanted.min(MAX_FFT_LEN).next_power_of_two());
    }
    len
}

/// Normalized per-bin powers of `spectrum` on an `fft_len`-point grid, in
/// FFT order (bin `k` and bin `k - fft_len` coincide). `doppler` is the
/// maximum Doppler frequency in cycles per sample.
pub fn doppler_bin_powers(spectrum: &DopplerSpectrum, doppler: f64, fft_len: usize) -> Vec<f64> {
    let mut powers = vec![0.0; fft_len];
    if doppler <= 0.0 {
        powers[0] = 1.0;
        return powers;
    }
    let fd_bins = doppler * fft_len as f64;
    let half = fft_len as i64 / 2;
    for (k, p) in powers.iter_mut().enumerate() {
        let signed = if (k as i64) < half { k as i64 } else { k as i64 - fft_len as i64 };
        let lo = (signed as f64 - 0.5) / fd_bins;
        let hi = (signed as f64 + 0.5) / fd_bins;
        *p = (spectrum.cdf(hi) - spectrum.cdf(lo)).max(0.0);
    }
    let total: f64 = powers.iter().sum();
    powers.iter_mut().for_each(|p| *p /= total);
    powers
}

/// Generates `n_samples` of tap gains for every tap of `profile`.
///
/// Taps use seeds derived from `seed` and the tap index, so they are
/// mutually independent and the whole matrix is a pure function of the
/// arguments.
pub fn generate_fading(
    profile: &ScenarioProfile,
    n_samples: usize,
    config: &SimConfig,
    seed: u64,
) -> Result<CirMatrix> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    config.validate()?;
    let doppler = config.doppler_per_sample();
    let fft_len = fft_length_for(n_samples, doppler);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(fft_len);
    let gains_linear = profile.tap_gains_linear();

    let mut rows = Vec::with_capacity(profile.tap_count());
    for (tap, spectrum) in profile.doppler_spectra.iter().enumerate() {
        let powers = doppler_bin_powers(spectrum, doppler, fft_len);
        let mut rng = seed::rng(seed::derive(seed, &[tap as u64]));
        let scale = (gains_linear[tap] / 2.0).sqrt();
        let mut buf: Vec<C64> = powers
            .iter()
            .map(|&p| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * (p.sqrt() * scale)
            })
            .collect();
        ifft.process(&mut buf);
        buf.truncate(n_samples);
        rows.push(buf);
    }
    let delays = profile
        .tap_delays_us
        .iter()
        .map(|&d| config.delay_units(d))
        .collect();
    CirMatrix::new(rows, delays, config.sample_period_s())
}
