//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls the code under test for the
//! quantity being checked.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use scenid::classifier::{gradients, loss, MlpParams};
use scenid::scenario_sim::{ComplexSignal, DopplerSpectrum, ScenarioProfile};
use scenid::sounding::MSequence;
use scenid::C64;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt` by composite Simpson.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

/// One 0 dB tap with the given spectrum.
pub fn single_tap_profile(spectrum: DopplerSpectrum) -> ScenarioProfile {
    ScenarioProfile {
        label: 1,
        name: "single".into(),
        description: "single tap".into(),
        tap_delays_us: vec![0.0],
        tap_gains_db: vec![0.0],
        doppler_spectra: vec![spectrum],
        reference_delays_us: vec![0.0],
    }
}

/// Pearson chi-squared statistic of unit-power Rayleigh envelopes against
/// `F(r) = 1 - exp(-r^2)` over `bins` equiprobable cells, with the 1%
/// critical value.
pub fn rayleigh_chi2(envelopes: &[f64], bins: usize) -> (f64, f64) {
    let edges: Vec<f64> = (1..bins)
        .map(|i| (-(1.0 - i as f64 / bins as f64).ln()).sqrt())
        .collect();
    let mut counts = vec![0usize; bins];
    for &r in envelopes {
        counts[edges.partition_point(|&e| e <= r)] += 1;
    }
    let expected = envelopes.len() as f64 / bins as f64;
    let stat = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    (stat, critical)
}

/// Chips of `m` as complex values.
pub fn chips(m: &MSequence) -> Vec<C64> {
    m.chips.iter().map(|&c| C64::new(c as f64, 0.0)).collect()
}

/// One period of the steady-state probe through static paths:
/// `r[n] = sum_l mu_l m[(n - tau_l) mod N]`.
pub fn circular_probe(m: &MSequence, paths: &[(usize, C64)]) -> Vec<C64> {
    let c = chips(m);
    let n = c.len();
    (0..n)
        .map(|i| paths.iter().map(|&(d, mu)| mu * c[(i + n - d % n) % n]).sum())
        .collect()
}

pub fn signal(samples: Vec<C64>) -> ComplexSignal {
    ComplexSignal::new(samples, 1e-5).unwrap()
}

/// Least-squares amplitudes and residual energy of `received` on the
/// circularly shifted chips at `delays`, in the time domain.
pub fn ls_fit(received: &[C64], m: &MSequence, delays: &[usize]) -> (Vec<C64>, f64) {
    let c = chips(m);
    let n = c.len();
    let a = DMatrix::from_fn(n, delays.len(), |i, j| c[(i + n - delays[j]) % n]);
    let y = DVector::from_column_slice(received);
    let ah = a.adjoint();
    let x = (&ah * &a).lu().solve(&(&ah * &y)).expect("full rank");
    let r = &y - &a * &x;
    (x.iter().copied().collect(), r.norm_squared())
}

/// Exhaustive search over all sets of `order` distinct delays in
/// `0..max_delay`, each fitted by least squares.
pub fn brute_force_paths(received: &[C64], m: &MSequence, order: usize, max_delay: usize) -> (Vec<usize>, Vec<C64>, f64) {
    fn combos(k: usize, start: usize, end: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for d in start..end {
            cur.push(d);
            combos(k, d + 1, end, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    combos(order, 0, max_delay, &mut Vec::new(), &mut all);
    let mut best: Option<(Vec<usize>, Vec<C64>, f64)> = None;
    for delays in all {
        let (amps, cost) = ls_fit(received, m, &delays);
        if best.as_ref().is_none_or(|b| cost < b.2) {
            best = Some((delays, amps, cost));
        }
    }
    best.expect("at least one delay set")
}

/// The `count` most concentrated eigenvectors of the dense sinc kernel
/// `K[i][j] = sin(2 pi W (i - j)) / (pi (i - j))`, `K[i][i] = 2W`, with
/// their eigenvalues.
pub fn dense_dpss(n: usize, w: f64, count: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * w
        } else {
            let d = i as f64 - j as f64;
            (2.0 * PI * w * d).sin() / (PI * d)
        }
    });
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vecs = order[..count]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    let vals = order[..count].iter().map(|&c| eig.eigenvalues[c]).collect();
    (vecs, vals)
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences with step `h`, over every weight and bias. Components whose
/// magnitudes are both below `floor` are compared against `floor`.
pub fn gradient_check(params: &MlpParams, batch: &[(&[f64], &[f64])], h: f64, floor: f64) -> f64 {
    let g = gradients(params, batch).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    let mut check = |analytic: f64, numeric: f64| {
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
        worst = worst.max(err);
    };
    for layer in 0..params.weights.len() {
        for i in 0..params.weights[layer].len() {
            let w0 = params.weights[layer][i];
            probe.weights[layer][i] = w0 + h;
            let up = loss(&probe, batch).unwrap();
            probe.weights[layer][i] = w0 - h;
            let down = loss(&probe, batch).unwrap();
            probe.weights[layer][i] = w0;
            check(g.weights[layer][i], (up - down) / (2.0 * h));
        }
        for i in 0..params.biases[layer].len() {
            let b0 = params.biases[layer][i];
            probe.biases[layer][i] = b0 + h;
            let up = loss(&probe, batch).unwrap();
            probe.biases[layer][i] = b0 - h;
            let down = loss(&probe, batch).unwrap();
            probe.biases[layer][i] = b0;
            check(g.biases[layer][i], (up - down) / (2.0 * h));
        }
    }
    worst
}
