//! Iterative frequency-domain delay/amplitude estimation.
//!
//! With `R[k]` the spectrum of the received probe and `M[k]` that of the
//! local chips, a path `(mu, tau)` contributes `mu M[k] exp(-j 2 pi tau k / N)`.
//! For a residual spectrum `Z` the single-path fit is
//!
//! ```text
//! tau = argmax_tau |alpha(tau)^H (M^* Z)|^2
//! mu  = alpha(tau)^H (M^* Z) / ||M||_F^2
//! ```
//!
//! Since `||M alpha(tau)||` does not depend on `tau`, this is the exact
//! minimizer of `||Z - mu M alpha(tau)||^2`, so re-fitting one path at a time
//! against the residual of the others never increases the total cost.
//!
//! Spectra are stored in FFT order `k = 0..N`. The symmetric range
//! `-N/2..N/2` covers the same bins modulo `N`, and every sum here runs over
//! a full period, so the two orderings give identical results for integer
//! delays.

use std::ops::Range;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::MSequence;
use crate::scenario_sim::ComplexSignal;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyData {
    /// Spectrum of the (period-averaged) received probe.
    pub received: Vec<C64>,
    /// Spectrum of the local chips; the diagonal of the model matrix.
    pub local: Vec<C64>,
    /// `||M||_F^2`.
    pub local_energy: f64,
}

impl FrequencyData {
    pub fn new(received: Vec<C64>, local: Vec<C64>) -> Result<Self> {
        if received.len() != local.len() || received.is_empty() {
            return Err(Error::Dimension(format!(
                "spectra of length {} and {}",
                received.len(),
                local.len()
            )));
        }
        let local_energy = local.iter().map(|m| m.norm_sqr()).sum();
        Ok(Self {
            received,
            local,
            local_energy,
        })
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }

    /// `mu M[k] alpha_k(tau)` added into `acc`, scaled by `sign`.
    fn accumulate_path(&self, acc: &mut [C64], delay: usize, amplitude: C64, sign: f64) {
        let n = self.len();
        for (k, (a, m)) in acc.iter_mut().zip(&self.local).enumerate() {
            let phase = -2.0 * std::f64::consts::PI * ((delay * k) % n) as f64 / n as f64;
            *a += C64::from_polar(sign, phase) * amplitude * m;
        }
    }

    /// Model spectrum of a set of paths.
    pub fn model(&self, paths: &[PathEstimate]) -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); self.len()];
        for p in paths {
            self.accumulate_path(&mut acc, p.delay_units, p.amplitude, 1.0);
        }
        acc
    }
}

/// DFTs of the received probe and the local chips. A received signal
/// spanning several periods is averaged coherently first.
pub fn probe_spectrum(received: &ComplexSignal, local: &MSequence) -> Result<FrequencyData> {
    let n = local.period();
    if received.len() < n || received.len() % n != 0 {
        return Err(Error::Dimension(format!(
            "received length {} is not a whole number of {n}-chip periods",
            received.len()
        )));
    }
    let periods = (received.len() / n) as f64;
    let mut r = vec![C64::new(0.0, 0.0); n];
    for chunk in received.samples().chunks_exact(n) {
        for (a, s) in r.iter_mut().zip(chunk) {
            *a += s / periods;
        }
    }
    let mut m: Vec<C64> = local.chips.iter().map(|&c| C64::new(c as f64, 0.0)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    fft.process(&mut r);
    fft.process(&mut m);
    FrequencyData::new(r, m)
}

/// `z[tau] = alpha(tau)^H (M^* Z)` for every `tau` in `0..N`.
fn matched_outputs(freq: &FrequencyData, residual: &[C64]) -> Vec<C64> {
    let mut z: Vec<C64> = freq
        .local
        .iter()
        .zip(residual)
        .map(|(m, r)| m.conj() * r)
        .collect();
    // Unnormalized inverse DFT: sum_k x[k] exp(+j 2 pi k tau / N).
    FftPlanner::<f64>::new()
        .plan_fft_inverse(z.len())
        .process(&mut z);
    z
}

fn check_residual(freq: &FrequencyData, residual: &[C64]) -> Result<()> {
    if residual.len() != freq.len() {
        return Err(Error::Dimension(format!(
            "residual length {} vs probe length {}",
            residual.len(),
            freq.len()
        )));
    }
    Ok(())
}

/// Least-squares amplitude of a path at `delay` given the residual spectrum.
pub fn amplitude_given_delay(freq: &FrequencyData, residual: &[C64], delay: usize) -> Result<C64> {
    check_residual(freq, residual)?;
    let n = freq.len();
    let acc: C64 = freq
        .local
        .iter()
        .zip(residual)
        .enumerate()
        .map(|(k, (m, r))| {
            let phase = 2.0 * std::f64::consts::PI * ((delay * k) % n) as f64 / n as f64;
            C64::from_polar(1.0, phase) * m.conj() * r
        })
        .sum();
    Ok(acc / freq.local_energy)
}

fn argmax_excluding(z: &[C64], candidates: &Range<usize>, excluded: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for tau in candidates.clone() {
        if excluded.contains(&tau) {
            continue;
        }
        let v = z[tau].norm_sqr();
        // strict comparison: ties keep the smaller delay
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((tau, v));
        }
    }
    best.map(|(tau, _)| tau)
}

fn check_candidates(freq: &FrequencyData, candidates: &Range<usize>) -> Result<()> {
    if candidates.is_empty() || candidates.end > freq.len() {
        return Err(Error::InvalidArgument(format!(
            "candidate delays {candidates:?} must be a nonempty range within 0..{}",
            freq.len()
        )));
    }
    Ok(())
}

/// Delay maximizing `|alpha(tau)^H (M^* Z)|^2` over `candidates`; ties go to
/// the smallest delay.
pub fn delay_argmax(freq: &FrequencyData, residual: &[C64], candidates: Range<usize>) -> Result<usize> {
    check_residual(freq, residual)?;
    check_candidates(freq, &candidates)?;
    let z = matched_outputs(freq, residual);
    Ok(argmax_excluding(&z, &candidates, &[]).expect("nonempty candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub delay_units: usize,
    pub amplitude: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayAmplitudeEstimate {
    /// Paths sorted by delay.
    pub paths: Vec<PathEstimate>,
    /// Frequency-domain least-squares cost at the returned parameters.
    pub residual_cost: f64,
    /// Outer sweeps performed across all stages.
    pub iterations: usize,
    /// Cost after each path insertion and each outer sweep, in order.
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxConfig {
    pub max_outer_iters: usize,
    /// Relative cost decrease below which a stage is considered converged.
    pub tol: f64,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            tol: 1e-8,
        }
    }
}

/// `sum_k |R[k] - M[k] sum_l mu_l exp(-j 2 pi tau_l k / N)|^2`.
pub fn relax_cost(freq: &FrequencyData, paths: &[PathEstimate]) -> f64 {
    let model = freq.model(paths);
    freq.received
        .iter()
        .zip(&model)
        .map(|(r, m)| (r - m).norm_sqr())
        .sum()
}

/// Staged relaxation: fit one path, then grow the model one path at a time,
/// re-fitting every path against the residual of the others after each
/// insertion until the cost stalls.
pub fn relax_estimate(
    freq: &FrequencyData,
    order: usize,
    candidates: Range<usize>,
    config: &RelaxConfig,
) -> Result<DelayAmplitudeEstimate> {
    check_candidates(freq, &candidates)?;
    if order == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    if order > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "order {order} exceeds the {} candidate delays",
            candidates.len()
        )));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", config.tol)));
    }

    let mut paths: Vec<PathEstimate> = Vec::with_capacity(order);
    // Running residual R - model(paths).
    let mut residual = freq.received.clone();
    let mut history = Vec::new();
    let mut iterations = 0;

    for stage in 1..=order {
        let taken: Vec<usize> = paths.iter().map(|p| p.delay_units).collect();
        let z = matched_outputs(freq, &residual);
        let delay = argmax_excluding(&z, &candidates, &taken).expect("order <= candidates");
        let amplitude = z[delay] / freq.local_energy;
        freq.accumulate_path(&mut residual, delay, amplitude, -1.0);
        paths.push(PathEstimate {
            delay_units: delay,
            amplitude,
        });
        let mut cost = residual.iter().map(|r| r.norm_sqr()).sum::<f64>();
        history.push(cost);
        if stage == 1 {
            continue;
        }

        for _ in 0..config.max_outer_iters {
            let snapshot = (paths.clone(), residual.clone());
            for i in 0..paths.len() {
                let old = paths[i];
                freq.accumulate_path(&mut residual, old.delay_units, old.amplitude, 1.0);
                let others: Vec<usize> = paths
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| p.delay_units)
                    .collect();
                let z = matched_outputs(freq, &residual);
                let delay = argmax_excluding(&z, &candidates, &others).expect("candidates remain");
                let amplitude = z[delay] / freq.local_energy;
                freq.accumulate_path(&mut residual, delay, amplitude, -1.0);
                paths[i] = PathEstimate {
                    delay_units: delay,
                    amplitude,
                };
            }
            iterations += 1;
            let new_cost = residual.iter().map(|r| r.norm_sqr()).sum::<f64>();
            if new_cost > cost * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                // Rounding pushed the cost up: keep the previous sweep.
                (paths, residual) = snapshot;
                break;
            }
            let decrease = cost - new_cost;
            cost = new_cost;
            history.push(cost);
            if decrease <= config.tol * cost.max(f64::MIN_POSITIVE) || cost == 0.0 {
                break;
            }
        }
    }

    paths.sort_by_key(|p| p.delay_units);
    let residual_cost = relax_cost(freq, &paths);
    Ok(DelayAmplitudeEstimate {
        paths,
        residual_cost,
        iterations,
        cost_history: history,
    })
}
