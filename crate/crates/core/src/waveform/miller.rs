use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BasebandWave;
use crate::error::{arg, Result};

pub const PREAMBLE_BITS: [bool; 6] = [false, true, false, true, true, true];

/// Miller uplink preamble: a plain-subcarrier pilot (4 symbols, or 16 with
/// TRext) followed by `010111`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct MillerPreamble {
    pub trext: bool,
}

impl MillerPreamble {
    pub fn pilot_symbols(&self) -> usize {
        if self.trext {
            16
        } else {
            4
        }
    }

    pub fn symbols(&self) -> usize {
        self.pilot_symbols() + PREAMBLE_BITS.len()
    }
}

fn check_m(m: usize) -> Result<()> {
    if matches!(m, 2 | 4 | 8) {
        Ok(())
    } else {
        arg(format!("Miller M must be 2, 4 or 8, got {m}"))
    }
}

struct Encoder {
    m: usize,
    level: f64,
    prev: Option<bool>,
    out: Vec<f64>,
}

impl Encoder {
    fn pilot(&mut self, symbols: usize) {
        for _ in 0..symbols {
            for h in 0..2 * self.m {
                self.out.push(if h % 2 == 0 { self.level } else { -self.level });
            }
        }
    }

    fn symbol(&mut self, bit: bool) {
        if !bit && self.prev == Some(false) {
            self.level = -self.level;
        }
        let start = self.level;
        for h in 0..2 * self.m {
            let lvl = if bit && h >= self.m { -start } else { start };
            self.out.push(if h % 2 == 0 { lvl } else { -lvl });
        }
        if bit {
            self.level = -start;
        }
        self.prev = Some(bit);
    }
}

/// Half-cycle values of one complete reply: preamble, `bits`, dummy 1.
/// Entry `j` covers subcarrier cycles `[j / 2, (j + 1) / 2)`.
pub fn miller_halves(bits: &[bool], m: usize, preamble: &MillerPreamble) -> Result<Vec<f64>> {
    check_m(m)?;
    if bits.is_empty() {
        return arg("empty bit list");
    }
    let mut e = Encoder { m, level: 1.0, prev: None, out: Vec::new() };
    e.pilot(preamble.pilot_symbols());
    for &b in PREAMBLE_BITS.iter().chain(bits).chain(&[true]) {
        e.symbol(b);
    }
    Ok(e.out)
}

pub fn miller_encode(bits: &[bool], blf_hz: f64, m: usize, rate_hz: f64) -> Result<BasebandWave> {
    miller_encode_with(bits, blf_hz, m, rate_hz, &MillerPreamble::default())
}

pub fn miller_encode_with(
    bits: &[bool],
    blf_hz: f64,
    m: usize,
    rate_hz: f64,
    preamble: &MillerPreamble,
) -> Result<BasebandWave> {
    if !(blf_hz > 0.0) || rate_hz < 8.0 * blf_hz {
        return arg("rate must be at least 8x the BLF");
    }
    let halves = miller_halves(bits, m, preamble)?;
    let cycles = halves.len() as f64 / 2.0;
    let n = (cycles / blf_hz * rate_hz).round() as usize;
    let samples = (0..n)
        .map(|i| {
            let j = ((2.0 * i as f64 * blf_hz / rate_hz).floor() as usize).min(halves.len() - 1);
            Complex64::new(halves[j], 0.0)
        })
        .collect();
    Ok(BasebandWave { samples, rate_hz, start_s: 0.0 })
}

/// Hard-decision Miller slicer for a nominally clocked reply starting at
/// the wave's first sample. A data-1 flips the baseband level mid-symbol,
/// so each symbol is decided by the sign agreement of its two halves.
pub fn miller_slice(
    wave: &BasebandWave,
    blf_hz: f64,
    m: usize,
    preamble: &MillerPreamble,
    n_bits: usize,
) -> Result<Vec<bool>> {
    check_m(m)?;
    let first = preamble.symbols();
    if (first + n_bits) as f64 > wave.duration_s() * blf_hz / m as f64 + 1e-9 {
        return arg("wave shorter than the requested bit count");
    }
    let mut acc = vec![[0.0f64; 2]; first + n_bits];
    for (i, x) in wave.samples.iter().enumerate() {
        let u = (i as f64 + 0.5) * blf_hz / wave.rate_hz;
        let sym = (u / m as f64).floor() as usize;
        if sym >= acc.len() {
            break;
        }
        let half_sym = ((u / m as f64 - sym as f64) * 2.0).floor() as usize;
        let sub = if (2.0 * u).floor() as i64 % 2 == 0 { 1.0 } else { -1.0 };
        acc[sym][half_sym.min(1)] += x.re * sub;
    }
    Ok(acc[first..].iter().map(|a| a[0] * a[1] < 0.0).collect())
}
