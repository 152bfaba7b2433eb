use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::waveform::{MillerPreamble, PREAMBLE_BITS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViterbiResult {
    pub bits: Vec<bool>,
    /// Correlation coefficient between the stream and the decoded waveform.
    pub metric: f64,
}

/// Miller level rule: returns (start level, end level) of a symbol.
fn step(level: f64, prev: Option<bool>, bit: bool) -> (f64, f64) {
    let start = if !bit && prev == Some(false) { -level } else { level };
    (start, if bit { -start } else { start })
}

/// Subcarrier-demodulated sums over the first and second half of each
/// symbol, plus the stream energy and sample count they cover.
struct SymbolSums {
    halves: Vec<[f64; 2]>,
    energy: f64,
}

fn symbol_sums(
    x: &[f64],
    rate_hz: f64,
    blf_hz: f64,
    m: usize,
    first_cycle: f64,
    symbols: usize,
) -> Result<SymbolSums> {
    let mf = m as f64;
    let end_cycle = first_cycle + symbols as f64 * mf;
    let j0 = (first_cycle * rate_hz / blf_hz).ceil().max(0.0) as usize;
    let j1 = (end_cycle * rate_hz / blf_hz).ceil() as usize;
    if j1 > x.len() {
        return arg("stream ends before the reply");
    }
    let mut halves = vec![[0.0; 2]; symbols];
    let mut energy = 0.0;
    for (j, v) in x.iter().enumerate().take(j1).skip(j0) {
        let u = j as f64 * blf_hz / rate_hz - first_cycle;
        let s = ((u / mf).floor() as usize).min(symbols - 1);
        let within = u - s as f64 * mf;
        let h = (2.0 * within).floor() as usize;
        let sub = if h % 2 == 0 { 1.0 } else { -1.0 };
        halves[s][usize::from(h >= m)] += v * sub;
        energy += v * v;
    }
    Ok(SymbolSums { halves, energy })
}

/// Level and last bit after the preamble; the pilot never inverts.
fn preamble_state() -> (f64, Option<bool>) {
    let mut level = 1.0;
    let mut prev = None;
    for &b in &PREAMBLE_BITS {
        level = step(level, prev, b).1;
        prev = Some(b);
    }
    (level, prev)
}

/// Correlation of the stream with the reply carrying `bits` (plus the
/// trailing dummy 1), summed over the payload symbols.
pub fn reply_metric(
    x: &[f64],
    rate_hz: f64,
    blf_hz: f64,
    m: usize,
    reply_start_cycle: f64,
    bits: &[bool],
    preamble: &MillerPreamble,
) -> Result<f64> {
    let first = reply_start_cycle + (preamble.symbols() * m) as f64;
    let sums = symbol_sums(x, rate_hz, blf_hz, m, first, bits.len() + 1)?;
    let (mut level, mut prev) = preamble_state();
    let mut total = 0.0;
    for (s, &b) in bits.iter().chain(&[true]).enumerate() {
        let (start, end) = step(level, prev, b);
        let second = if b { -start } else { start };
        total += start * sums.halves[s][0] + second * sums.halves[s][1];
        level = end;
        prev = Some(b);
    }
    Ok(total)
}

/// Maximum-likelihood Miller sequence decode over a 4-state trellis
/// (baseband level x previous bit) with correlation branch metrics.
pub fn viterbi_decode(
    x: &[f64],
    rate_hz: f64,
    blf_hz: f64,
    m: usize,
    reply_start_cycle: f64,
    n_bits: usize,
    preamble: &MillerPreamble,
    threshold: f64,
) -> Result<ViterbiResult> {
    if n_bits == 0 {
        return arg("nothing to decode");
    }
    let first = reply_start_cycle + (preamble.symbols() * m) as f64;
    let sums = symbol_sums(x, rate_hz, blf_hz, m, first, n_bits + 1)?;
    let state_of = |level: f64, bit: bool| usize::from(level < 0.0) * 2 + usize::from(bit);
    let (l0, p0) = preamble_state();
    let mut metric = [f64::NEG_INFINITY; 4];
    metric[state_of(l0, p0.unwrap_or(true))] = 0.0;
    let mut back: Vec<[(usize, bool); 4]> = Vec::with_capacity(n_bits + 1);
    for s in 0..=n_bits {
        let mut next = [f64::NEG_INFINITY; 4];
        let mut bp = [(usize::MAX, false); 4];
        for st in 0..4 {
            if metric[st] == f64::NEG_INFINITY {
                continue;
            }
            let level = if st >= 2 { -1.0 } else { 1.0 };
            let prev = st % 2 == 1;
            let choices: &[bool] = if s == n_bits { &[true] } else { &[false, true] };
            for &b in choices {
                let (start, end) = step(level, Some(prev), b);
                let second = if b { -start } else { start };
                let branch = start * sums.halves[s][0] + second * sums.halves[s][1];
                let ns = state_of(end, b);
                let cand = metric[st] + branch;
                if cand > next[ns] {
                    next[ns] = cand;
                    bp[ns] = (st, b);
                }
            }
        }
        metric = next;
        back.push(bp);
    }
    let mut st = 0;
    for i in 1..4 {
        if metric[i] > metric[st] {
            st = i;
        }
    }
    let best = metric[st];
    let mut bits = vec![false; n_bits + 1];
    for s in (0..=n_bits).rev() {
        let (prev_st, b) = back[s][st];
        bits[s] = b;
        st = prev_st;
    }
    bits.pop();
    let count = ((n_bits + 1) * m) as f64 / blf_hz * rate_hz;
    let norm = (sums.energy * count).sqrt();
    let metric = if norm > 0.0 { best / norm } else { 0.0 };
    if !(metric >= threshold) {
        return Err(Error::DecodeFailure { stage: "viterbi", reason: format!("normalized metric {metric:.3}") });
    }
    Ok(ViterbiResult { bits, metric })
}
