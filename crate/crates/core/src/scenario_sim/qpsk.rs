use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::ComplexSignal;
use crate::{Error, Result, C64};

/// Gray-mapped unit-power QPSK: bit pair `(b0, b1)` maps to
/// `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`, so `(0, 0)` is `(1 + j) / sqrt(2)`.
pub fn qpsk_symbol(b0: bool, b1: bool) -> C64 {
    let axis = |b: bool| if b { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    C64::new(axis(b0), axis(b1))
}

/// Pilot insertion rule: every symbol index that is a multiple of `spacing`
/// carries `symbol`. The frame always starts with a pilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotSpec {
    pub spacing: usize,
    pub symbol: C64,
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self {
            spacing: 4,
            symbol: C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpskFrame {
    pub symbols: Vec<C64>,
    pub pilot_positions: Vec<usize>,
}

impl QpskFrame {
    /// Symbols a receiver knows in advance: pilots are `Some`, data `None`.
    pub fn known_symbols(&self) -> Vec<Option<C64>> {
        let mut known = vec![None; self.symbols.len()];
        for &p in &self.pilot_positions {
            known[p] = Some(self.symbols[p]);
        }
        known
    }

    pub fn to_signal(&self, sample_period_s: f64) -> Result<ComplexSignal> {
        ComplexSignal::new(self.symbols.clone(), sample_period_s)
    }
}

pub fn modulate_qpsk(bits: &[bool], pilots: &PilotSpec) -> Result<QpskFrame> {
    if bits.len() % 2 != 0 {
        return Err(Error::Format(format!("odd bit count {}", bits.len())));
    }
    if pilots.spacing < 2 {
        return Err(Error::InvalidArgument(format!(
            "pilot spacing must be >= 2, got {}",
            pilots.spacing
        )));
    }
    let mut data = bits.chunks_exact(2).map(|p| qpsk_symbol(p[0], p[1])).peekable();
    let mut symbols = Vec::with_capacity(bits.len() / 2 + bits.len() / 2 / (pilots.spacing - 1) + 1);
    let mut pilot_positions = Vec::new();
    loop {
        let idx = symbols.len();
        if idx % pilots.spacing == 0 {
            if idx > 0 && data.peek().is_none() {
                break;
            }
            pilot_positions.push(idx);
            symbols.push(pilots.symbol);
            if data.peek().is_none() {
                break;
            }
        } else {
            match data.next() {
                Some(s) => symbols.push(s),
                None => break,
            }
        }
    }
    Ok(QpskFrame {
        symbols,
        pilot_positions,
    })
}
