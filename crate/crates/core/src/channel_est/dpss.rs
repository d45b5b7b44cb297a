//! Discrete prolate spheroidal (Slepian) sequences.
//!
//! The sequences are the eigenvectors of the symmetric tridiagonal matrix
//! that commutes with the time-and-band limiting operator:
//!
//! ```text
//! diag[i]   = ((N - 1) / 2 - i)^2 cos(2 pi W)
//! off[i]    = (i + 1)(N - 1 - i) / 2
//! ```
//!
//! Its largest eigenvalues belong to the most concentrated sequences. They
//! are located by Sturm-count bisection and the vectors follow by inverse
//! iteration, which costs O(N) per step instead of a dense O(N^3) solve.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DpssBasis {
    pub length: usize,
    /// Half bandwidth in cycles per sample.
    pub half_bandwidth: f64,
    /// `count` rows of `length` samples, most concentrated first.
    pub sequences: Vec<Vec<f64>>,
    /// Fraction of each sequence's energy inside `[-W, W]`.
    pub concentrations: Vec<f64>,
}

impl DpssBasis {
    pub fn count(&self) -> usize {
        self.sequences.len()
    }
}

/// Basis size for a fading process of normalized Doppler `doppler` observed
/// over `length` samples: `ceil(2 nu N) + 3`.
pub fn basis_dimension(doppler: f64, length: usize) -> usize {
    let span = 2.0 * doppler.max(0.0) * length as f64;
    // absorb rounding when 2 nu N is an exact integer
    (span - 1e-9).ceil().max(0.0) as usize + 3
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn slepian(n: usize, w: f64) -> Self {
        let c = (2.0 * std::f64::consts::PI * w).cos();
        let half = (n as f64 - 1.0) / 2.0;
        Tridiagonal {
            diag: (0..n).map(|i| (half - i as f64).powi(2) * c).collect(),
            off: (1..n).map(|i| i as f64 * (n - i) as f64 / 2.0).collect(),
        }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of the
    /// LDL^T factorization of `T - x I`).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift I) x = b` by Gaussian elimination with partial
    /// pivoting; the factor has one extra superdiagonal.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
        let mut u = vec![[0.0f64; 3]; n];
        let mut rhs = b.to_vec();
        let mut cur = [self.diag[0] - shift, if n > 1 { self.off[0] } else { 0.0 }, 0.0];
        for i in 0..n {
            if i + 1 == n {
                if cur[0].abs() < tiny {
                    cur[0] = tiny;
                }
                u[i] = cur;
                break;
            }
            let below = [
                self.off[i],
                self.diag[i + 1] - shift,
                if i + 2 < n { self.off[i + 1] } else { 0.0 },
            ];
            // Candidate pivot rows: `cur` (columns i..i+2) and `below`
            // (columns i..i+2).
            let (pivot, other, swapped) = if below[0].abs() > cur[0].abs() {
                (below, cur, true)
            } else {
                (cur, below, false)
            };
            if swapped {
                rhs.swap(i, i + 1);
            }
            let mut p = pivot;
            if p[0].abs() < tiny {
                p[0] = tiny;
            }
            let factor = other[0] / p[0];
            rhs[i + 1] -= factor * rhs[i];
            u[i] = p;
            cur = [other[1] - factor * p[1], other[2] - factor * p[2], 0.0];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u[i][1] * x[i + 1];
            }
            if i + 2 < n {
                s -= u[i][2] * x[i + 2];
            }
            x[i] = s / u[i][0];
        }
        x
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Energy fraction inside `[-w, w]`: `u^T K u` with the sinc kernel
/// `K[m, n] = sin(2 pi w (m - n)) / (pi (m - n))`.
pub fn concentration(u: &[f64], w: f64) -> f64 {
    let n = u.len();
    let mut total = 2.0 * w * u.iter().map(|x| x * x).sum::<f64>();
    for lag in 1..n {
        let r: f64 = (0..n - lag).map(|i| u[i] * u[i + lag]).sum();
        let kernel = (2.0 * std::f64::consts::PI * w * lag as f64).sin()
            / (std::f64::consts::PI * lag as f64);
        total += 2.0 * r * kernel;
    }
    total
}

/// The `count` most concentrated Slepian sequences of `length` samples for
/// half bandwidth `half_bandwidth` (cycles per sample). Each sequence has
/// unit norm and its first nonzero sample positive.
pub fn generate_dpss(length: usize, half_bandwidth: f64, count: usize) -> Result<DpssBasis> {
    if !(half_bandwidth > 0.0 && half_bandwidth < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "half bandwidth must lie in (0, 0.5), got {half_bandwidth}"
        )));
    }
    if count == 0 || count > length {
        return Err(Error::InvalidArgument(format!(
            "sequence count {count} outside 1..={length}"
        )));
    }
    let t = Tridiagonal::slepian(length, half_bandwidth);
    let mut sequences: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut concentrations: Vec<f64> = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = t.eigenvalue(length - 1 - k);
        let mut v: Vec<f64> = (0..length)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract())
            .collect();
        for _ in 0..3 {
            v = t.solve_shifted(lambda, &v);
            // Deflate against the vectors already found.
            for prev in &sequences {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            normalize(&mut v);
        }
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let mut c = concentration(&v, half_bandwidth).clamp(f64::MIN_POSITIVE, 1.0);
        // Leading concentrations agree with 1 to rounding; keep the order.
        if let Some(&prev) = concentrations.last() {
            c = c.min(prev);
        }
        concentrations.push(c);
        sequences.push(v);
    }
    Ok(DpssBasis {
        length,
        half_bandwidth,
        sequences,
        concentrations,
    })
}

/// Shared, lazily built bases keyed by `(length, W, count)`.
pub fn dpss_cached(length: usize, half_bandwidth: f64, count: usize) -> Result<Arc<DpssBasis>> {
    type Cache = RwLock<HashMap<(usize, u64, usize), Arc<DpssBasis>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (length, half_bandwidth.to_bits(), count);
    if let Some(hit) = cache.read().expect("dpss cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let basis = Arc::new(generate_dpss(length, half_bandwidth, count)?);
    Ok(cache
        .write()
        .expect("dpss cache poisoned")
        .entry(key)
        .or_insert(basis)
        .clone())
}
