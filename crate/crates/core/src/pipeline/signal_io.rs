//! Plain-text complex signal files: a header line `sample_rate count`, then
//! one sample per line as `re im`.

use std::io::Write;

use crate::scenario_sim::ComplexSignal;
use crate::{Error, Result, C64};

pub fn write_signal<W: Write>(signal: &ComplexSignal, mut out: W) -> Result<()> {
    // 1 / (1 / r) is not always r; snap to an integer rate when that is
    // what the period came from.
    let rate = 1.0 / signal.sample_period_s();
    let rate = if (rate - rate.round()).abs() <= 1e-9 * rate { rate.round() } else { rate };
    writeln!(out, "{rate} {}", signal.len())?;
    for s in signal.samples() {
        writeln!(out, "{} {}", s.re, s.im)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_error(line: usize, offset: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: format!("byte offset {offset}: {message}"),
    }
}

fn two_numbers(text: &str, line: usize, offset: usize) -> Result<(f64, f64)> {
    let mut fields = text.split_whitespace();
    let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(parse_error(line, offset, format!("expected two numbers, got {text:?}")));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| parse_error(line, offset, format!("{s:?}: {e}")))
    };
    Ok((num(a)?, num(b)?))
}

pub fn parse_signal(text: &str) -> Result<ComplexSignal> {
    let mut offset = 0;
    let mut lines = text.split_inclusive('\n').enumerate().map(|(i, l)| {
        let start = offset;
        offset += l.len();
        (i + 1, start, l.trim_end_matches(['\n', '\r']))
    });
    let (_, _, header) = lines.next().ok_or_else(|| parse_error(1, 0, "empty signal file"))?;
    let (rate, count) = two_numbers(header, 1, 0)?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(parse_error(1, 0, format!("sample rate {rate} must be positive")));
    }
    if count < 0.0 || count.fract() != 0.0 {
        return Err(parse_error(1, 0, format!("sample count {count} is not a whole number")));
    }
    let count = count as usize;
    let mut samples = Vec::with_capacity(count);
    for (line, start, body) in lines {
        if body.trim().is_empty() {
            continue;
        }
        if samples.len() == count {
            return Err(parse_error(line, start, format!("more than the declared {count} samples")));
        }
        let (re, im) = two_numbers(body, line, start)?;
        samples.push(C64::new(re, im));
    }
    if samples.len() != count {
        return Err(parse_error(
            text.lines().count() + 1,
            text.len(),
            format!("truncated: {} of {count} samples", samples.len()),
        ));
    }
    ComplexSignal::new(samples, 1.0 / rate)
}

pub fn load_signal(path: &std::path::Path) -> Result<ComplexSignal> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    parse_signal(&text).map_err(|e| e.context(path.display().to_string()))
}

pub fn save_signal(signal: &ComplexSignal, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
    write_signal(signal, std::io::BufWriter::new(file))
}
