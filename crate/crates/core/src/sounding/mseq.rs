use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Feedback polynomial over GF(2). Bit `i` holds the coefficient of `x^i`;
/// both the leading term and the constant term must be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polynomial(pub u32);

impl Polynomial {
    pub fn from_exponents(exponents: &[u32]) -> Self {
        Polynomial(exponents.iter().fold(1, |acc, &e| acc | (1 << e)))
    }

    pub fn degree(&self) -> u32 {
        31 - self.0.leading_zeros()
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = (0..=self.degree())
            .rev()
            .filter(|&i| self.0 & (1 << i) != 0)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join("+"))
    }
}

/// Primitive polynomials for register lengths 2 through 20.
pub fn default_polynomial(register_length: u32) -> Option<Polynomial> {
    let exps: &[u32] = match register_length {
        2 => &[2, 1],
        3 => &[3, 1],
        4 => &[4, 1],
        5 => &[5, 2],
        6 => &[6, 1],
        7 => &[7, 1],
        8 => &[8, 4, 3, 2],
        9 => &[9, 4],
        10 => &[10, 3],
        11 => &[11, 2],
        12 => &[12, 6, 4, 1],
        13 => &[13, 4, 3, 1],
        14 => &[14, 10, 6, 1],
        15 => &[15, 1],
        16 => &[16, 12, 3, 1],
        17 => &[17, 3],
        18 => &[18, 7],
        19 => &[19, 5, 2, 1],
        20 => &[20, 3],
        _ => return None,
    };
    Some(Polynomial::from_exponents(exps))
}

/// Maximal-length sequence of +/-1 chips. Bit 0 maps to +1, bit 1 to -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSequence {
    pub register_length: u32,
    pub polynomial: Polynomial,
    pub initial_state: u32,
    pub chips: Vec<i8>,
    pub chip_period_s: f64,
}

impl MSequence {
    /// Sequence period `2^p - 1`.
    pub fn period(&self) -> usize {
        self.chips.len()
    }

    /// Chips as floating-point values.
    pub fn chips_f64(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| c as f64).collect()
    }

    /// Periodic autocorrelation in exact integer arithmetic.
    pub fn periodic_autocorrelation(&self) -> Vec<i64> {
        let n = self.period();
        (0..n)
            .map(|lag| {
                (0..n)
                    .map(|i| self.chips[i] as i64 * self.chips[(i + lag) % n] as i64)
                    .sum()
            })
            .collect()
    }

    pub fn with_chip_period(mut self, chip_period_s: f64) -> Self {
        self.chip_period_s = chip_period_s;
        self
    }
}

/// Runs the Fibonacci LFSR of `polynomial` from `initial_state`.
///
/// With characteristic polynomial `f(x) = sum_i c_i x^i` of degree `p`, the
/// bit stream obeys `a[n + p] = sum_{i < p} c_i a[n + i]` (mod 2) and the
/// first `p` bits are the initial state, least significant bit first.
pub fn generate_mseq(register_length: u32, polynomial: Polynomial, initial_state: u32) -> Result<MSequence> {
    if !(2..=24).contains(&register_length) {
        return Err(Error::InvalidArgument(format!(
            "register length {register_length} outside 2..=24"
        )));
    }
    if polynomial.degree() != register_length || polynomial.0 & 1 == 0 {
        return Err(Error::InvalidArgument(format!(
            "polynomial {polynomial} is not a degree-{register_length} polynomial with constant term"
        )));
    }
    let mask = (1u32 << register_length) - 1;
    let state0 = initial_state & mask;
    if state0 == 0 || initial_state & !mask != 0 {
        return Err(Error::InvalidState(format!(
            "initial state {initial_state:#x} must be a nonzero {register_length}-bit pattern"
        )));
    }
    let feedback = polynomial.0 & mask;
    let period = (1usize << register_length) - 1;
    let mut state = state0;
    let mut chips = Vec::with_capacity(period);
    for n in 0..period {
        if n > 0 && state == state0 {
            return Err(Error::InvalidArgument(format!(
                "polynomial {polynomial} is not primitive (period {n})"
            )));
        }
        let bit = state & 1;
        chips.push(if bit == 0 { 1 } else { -1 });
        let next = (state & feedback).count_ones() & 1;
        state = (state >> 1) | (next << (register_length - 1));
    }
    if state != state0 {
        return Err(Error::InvalidArgument(format!(
            "polynomial {polynomial} is not primitive"
        )));
    }
    Ok(MSequence {
        register_length,
        polynomial,
        initial_state,
        chips,
        chip_period_s: 1.0,
    })
}
