//! Basis-expansion least-squares (BEM-LS) estimation of time-varying taps.
//!
//! Within an observation window of `N` samples each tap gain is modelled as
//! `mu_l[n] = sum_d c_{l,d} u_d[n]` with `u_d` the Slepian sequences. The
//! received samples whose regressors are all known pilots give the linear
//! system
//!
//! ```text
//! y[n] = sum_l sum_d c_{l,d} u_d[n] x[n - tau_l]
//! ```
//!
//! solved in the least-squares sense through a thin QR factorization. The
//! resulting pseudo-inverse depends only on the pilots, the delay grid and
//! the basis, so an estimator can be reused across windows that carry the
//! same pilot block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dpss::{basis_dimension, dpss_cached, DpssBasis};
use crate::scenario_sim::{CirMatrix, ComplexSignal};
use crate::{Error, Result, C64};

/// Transmitted symbols as seen by the receiver. `received[n]` lines up with
/// `symbols[n + offset]`, so the symbol reaching sample `n` through a tap of
/// delay `tau` is `symbols[n + offset - tau]`. Unknown (data) symbols are
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotFrame {
    pub symbols: Vec<Option<C64>>,
    pub offset: usize,
}

impl PilotFrame {
    /// A frame where every symbol is known.
    pub fn all_known(symbols: &[C64], offset: usize) -> Self {
        Self {
            symbols: symbols.iter().copied().map(Some).collect(),
            offset,
        }
    }

    fn symbol_at(&self, n: usize, delay: usize) -> Option<C64> {
        let idx = (n + self.offset).checked_sub(delay)?;
        self.symbols.get(idx).copied().flatten()
    }

    /// The symbols needed by a window of `len` samples starting at `start`,
    /// as a frame with the same alignment.
    pub fn window(&self, start: usize, len: usize, max_delay: usize) -> PilotFrame {
        let first = (start + self.offset).saturating_sub(max_delay);
        let last = (start + len + self.offset).min(self.symbols.len());
        PilotFrame {
            symbols: self.symbols[first..last.max(first)].to_vec(),
            offset: start + self.offset - first,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirSource {
    TrueSim,
    BemLs,
}

/// Per-tap basis coefficients, `coefficients[l][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BemCoefficients {
    pub coefficients: Vec<Vec<C64>>,
}

/// Tap gains on a fixed delay grid, `gains[l][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirEstimate {
    pub gains: Vec<Vec<C64>>,
    pub delay_grid: Vec<usize>,
    pub source: CirSource,
}

impl CirEstimate {
    pub fn sample_count(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// Ground-truth gains placed on `delay_grid`; grid delays without a tap
    /// get an all-zero row.
    pub fn from_truth(cir: &CirMatrix, delay_grid: &[usize]) -> Result<Self> {
        let n = cir.sample_count();
        let mut gains = vec![vec![C64::new(0.0, 0.0); n]; delay_grid.len()];
        for (row, &delay) in cir.gains().iter().zip(cir.delay_units()) {
            let slot = delay_grid.iter().position(|&d| d == delay).ok_or_else(|| {
                Error::InvalidArgument(format!("tap delay {delay} is not on the delay grid"))
            })?;
            for (g, v) in gains[slot].iter_mut().zip(row) {
                *g += v;
            }
        }
        Ok(Self {
            gains,
            delay_grid: delay_grid.to_vec(),
            source: CirSource::TrueSim,
        })
    }

    /// Normalized squared error against `truth` over all rows.
    pub fn nmse(&self, truth: &[Vec<C64>]) -> f64 {
        let mut err = 0.0;
        let mut energy = 0.0;
        for (est, tru) in self.gains.iter().zip(truth) {
            for (a, b) in est.iter().zip(tru) {
                err += (a - b).norm_sqr();
                energy += b.norm_sqr();
            }
        }
        err / energy
    }
}

/// Precomputed least-squares solver for one window geometry.
#[derive(Debug, Clone)]
pub struct BemLsEstimator {
    basis: std::sync::Arc<DpssBasis>,
    delay_grid: Vec<usize>,
    /// Sample indices that enter the system.
    rows: Vec<usize>,
    /// Regressor matrix, `rows x (L * D)`.
    regressor: DMatrix<C64>,
    /// `(L * D) x rows` pseudo-inverse.
    pinv: DMatrix<C64>,
}

impl BemLsEstimator {
    pub fn new(frame: &PilotFrame, delay_grid: &[usize], basis: std::sync::Arc<DpssBasis>) -> Result<Self> {
        if delay_grid.is_empty() {
            return Err(Error::InvalidArgument("delay grid is empty".into()));
        }
        let n = basis.length;
        let d = basis.count();
        let unknowns = delay_grid.len() * d;
        let rows: Vec<usize> = (0..n)
            .filter(|&i| delay_grid.iter().all(|&tau| frame.symbol_at(i, tau).is_some()))
            .collect();
        if rows.len() < unknowns {
            return Err(Error::Identifiability(format!(
                "{} usable pilot observations for {} delays x {} basis sequences = {unknowns} unknowns",
                rows.len(),
                delay_grid.len(),
                d
            )));
        }
        let regressor = DMatrix::from_fn(rows.len(), unknowns, |r, c| {
            let (l, k) = (c / d, c % d);
            let i = rows[r];
            frame.symbol_at(i, delay_grid[l]).expect("row filtered") * basis.sequences[k][i]
        });
        let qr = regressor.clone().qr();
        let r = qr.r();
        let scale = (0..unknowns).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        if let Some(i) = (0..unknowns).find(|&i| r[(i, i)].norm() <= 1e-10 * scale) {
            return Err(Error::Identifiability(format!(
                "rank-deficient regressor ({} x {unknowns}): column for delay {} / basis index {} is dependent",
                rows.len(),
                delay_grid[i / d],
                i % d
            )));
        }
        let pinv = r
            .solve_upper_triangular(&qr.q().adjoint())
            .ok_or_else(|| Error::Identifiability("triangular solve failed".into()))?;
        Ok(Self {
            basis,
            delay_grid: delay_grid.to_vec(),
            rows,
            regressor,
            pinv,
        })
    }

    pub fn window_len(&self) -> usize {
        self.basis.length
    }

    pub fn observation_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn regressor(&self) -> &DMatrix<C64> {
        &self.regressor
    }

    /// Least-squares coefficients for one window of received samples.
    pub fn coefficients(&self, window: &[C64]) -> Result<BemCoefficients> {
        if window.len() != self.basis.length {
            return Err(Error::Dimension(format!(
                "window of {} samples, basis length {}",
                window.len(),
                self.basis.length
            )));
        }
        let y = DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&i| window[i]));
        let c = &self.pinv * y;
        let d = self.basis.count();
        Ok(BemCoefficients {
            coefficients: (0..self.delay_grid.len())
                .map(|l| (0..d).map(|k| c[l * d + k]).collect())
                .collect(),
        })
    }

    /// Tap trajectories `mu_l[n] = sum_d c_{l,d} u_d[n]` over the window.
    pub fn reconstruct(&self, coefficients: &BemCoefficients) -> Vec<Vec<C64>> {
        coefficients
            .coefficients
            .iter()
            .map(|row| {
                (0..self.basis.length)
                    .map(|n| {
                        row.iter()
                            .zip(&self.basis.sequences)
                            .map(|(c, u)| c * u[n])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Single-window BEM-LS estimate. The basis length must equal the received
/// length.
pub fn bem_ls_estimate(
    received: &ComplexSignal,
    pilots: &PilotFrame,
    delay_grid: &[usize],
    basis: std::sync::Arc<DpssBasis>,
) -> Result<(BemCoefficients, CirEstimate)> {
    if basis.length != received.len() {
        return Err(Error::Dimension(format!(
            "basis length {} vs received length {}",
            basis.length,
            received.len()
        )));
    }
    let estimator = BemLsEstimator::new(pilots, delay_grid, basis)?;
    let coefficients = estimator.coefficients(received.samples())?;
    let gains = estimator.reconstruct(&coefficients);
    Ok((
        coefficients,
        CirEstimate {
            gains,
            delay_grid: delay_grid.to_vec(),
            source: CirSource::BemLs,
        },
    ))
}

/// Settings for estimating long frames window by window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub window_len: usize,
    /// Maximum Doppler in cycles per sample; sets the Slepian bandwidth and
    /// the basis size.
    pub doppler: f64,
    /// Basis size override; `None` applies [`basis_dimension`].
    pub basis_count: Option<usize>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 512,
            doppler: 0.004,
            basis_count: None,
        }
    }
}

impl WindowConfig {
    pub fn basis_for(&self, len: usize) -> Result<std::sync::Arc<DpssBasis>> {
        let count = self
            .basis_count
            .unwrap_or_else(|| basis_dimension(self.doppler, len))
            .min(len);
        // A zero-Doppler channel still needs a positive band for the
        // Slepian problem; the leading sequence is then nearly constant.
        let w = self.doppler.max(1e-6);
        dpss_cached(len, w, count)
    }
}

/// Estimates the taps of a long frame with independent BEM-LS fits over
/// consecutive windows, reusing the solver while the pilot block repeats.
pub fn estimate_windowed(
    received: &ComplexSignal,
    pilots: &PilotFrame,
    delay_grid: &[usize],
    config: &WindowConfig,
) -> Result<CirEstimate> {
    let n = received.len();
    if config.window_len == 0 {
        return Err(Error::InvalidArgument("window_len must be >= 1".into()));
    }
    let max_delay = delay_grid.iter().copied().max().unwrap_or(0);
    let mut gains = vec![Vec::with_capacity(n); delay_grid.len()];
    let mut cached: Option<(PilotFrame, BemLsEstimator)> = None;
    let mut start = 0;
    while start < n {
        let len = config.window_len.min(n - start);
        let frame = pilots.window(start, len, max_delay);
        let reuse = matches!(&cached, Some((f, e)) if *f == frame && e.window_len() == len);
        if !reuse {
            let estimator = BemLsEstimator::new(&frame, delay_grid, config.basis_for(len)?)
                .map_err(|e| e.context(format!("window at sample {start}")))?;
            cached = Some((frame, estimator));
        }
        let estimator = &cached.as_ref().expect("estimator set").1;
        let coefficients = estimator.coefficients(&received.samples()[start..start + len])?;
        for (row, part) in gains.iter_mut().zip(estimator.reconstruct(&coefficients)) {
            row.extend(part);
        }
        start += len;
    }
    Ok(CirEstimate {
        gains,
        delay_grid: delay_grid.to_vec(),
        source: CirSource::BemLs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_est::generate_dpss;
    use crate::seed;
    use rand::Rng;
    use std::sync::Arc;

    fn random_qpsk(n: usize, s: u64) -> Vec<C64> {
        let mut rng = seed::rng(s);
        (0..n)
            .map(|_| crate::scenario_sim::qpsk_symbol(rng.random(), rng.random()))
            .collect()
    }

    #[test]
    fn in_span_single_tap_is_recovered() {
        let n = 64;
        let x = random_qpsk(n, 1);
        let basis = Arc::new(generate_dpss(n, 0.004, 2).unwrap());
        let (c0, c1) = (C64::new(0.7, -0.2), C64::new(-0.1, 0.05));
        let mu: Vec<C64> = (0..n)
            .map(|i| c0 * basis.sequences[0][i] + c1 * basis.sequences[1][i])
            .collect();
        let y: Vec<C64> = x.iter().zip(&mu).map(|(s, m)| s * m).collect();
        let rx = ComplexSignal::new(y, 1e-5).unwrap();
        let (coef, est) = bem_ls_estimate(&rx, &PilotFrame::all_known(&x, 0), &[0], basis).unwrap();
        assert!((coef.coefficients[0][0] - c0).norm() < 1e-12);
        assert!((coef.coefficients[0][1] - c1).norm() < 1e-12);
        for (g, m) in est.gains[0].iter().zip(&mu) {
            assert!((g - m).norm() < 1e-12);
        }
    }

    #[test]
    fn unknown_data_symbols_are_unidentifiable() {
        let n = 64;
        let frame = PilotFrame {
            symbols: (0..n)
                .map(|i| (i % 4 == 0).then_some(C64::new(1.0, 0.0)))
                .collect(),
            offset: 0,
        };
        let basis = Arc::new(generate_dpss(n, 0.004, 2).unwrap());
        let err = BemLsEstimator::new(&frame, &[0, 1], basis).unwrap_err();
        assert!(matches!(err, Error::Identifiability(_)), "{err}");
    }

    #[test]
    fn dependent_columns_are_reported() {
        // Constant pilots make every delay look alike.
        let n = 32;
        let frame = PilotFrame::all_known(&vec![C64::new(1.0, 0.0); n + 2], 2);
        let basis = Arc::new(generate_dpss(n, 0.01, 2).unwrap());
        let err = BemLsEstimator::new(&frame, &[0, 1], basis).unwrap_err();
        assert!(err.to_string().contains("rank-deficient"), "{err}");
    }

    #[test]
    fn window_view_keeps_alignment() {
        let symbols: Vec<C64> = (0..20).map(|i| C64::new(i as f64, 0.0)).collect();
        let frame = PilotFrame::all_known(&symbols, 3);
        let w = frame.window(5, 4, 2);
        for i in 0..4 {
            for tau in 0..=2 {
                assert_eq!(w.symbol_at(i, tau), frame.symbol_at(5 + i, tau));
            }
        }
    }

    #[test]
    fn windowed_matches_single_window_on_one_window() {
        let n = 128;
        let config = WindowConfig {
            window_len: n,
            doppler: 0.004,
            basis_count: None,
        };
        let basis = config.basis_for(n).unwrap();
        let x = random_qpsk(n + 3, 2);
        let taps = |k: usize, c: C64| -> Vec<C64> { basis.sequences[k].iter().map(|u| c * u).collect() };
        let g0 = taps(0, C64::new(0.5, 0.1));
        let g2 = taps(1, C64::new(-0.2, 0.3));
        let rx: Vec<C64> = (0..n).map(|i| x[i + 3] * g0[i] + x[i + 1] * g2[i]).collect();
        let rx = ComplexSignal::new(rx, 1e-5).unwrap();
        let frame = PilotFrame::all_known(&x, 3);
        let a = estimate_windowed(&rx, &frame, &[0, 1, 2, 3], &config).unwrap();
        let (_, b) = bem_ls_estimate(&rx, &frame, &[0, 1, 2, 3], basis.clone()).unwrap();
        assert_eq!(a.gains, b.gains);
        assert!((a.gains[2][40] - g2[40]).norm() < 1e-9);
        assert!((a.gains[0][90] - g0[90]).norm() < 1e-9);
        assert!(a.gains[1][40].norm() < 1e-9);
    }
}
