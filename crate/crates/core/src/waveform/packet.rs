use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::clock::{apply_clock_offset, ClockDrift};
use super::miller::{miller_halves, MillerPreamble};
use super::BasebandWave;
use crate::error::{arg, Result};

/// CRC-16 as used on the uplink: polynomial 0x1021, preset 0xFFFF, MSB
/// first, result complemented.
pub fn crc16_gen2(bits: &[bool]) -> u16 {
    let mut reg: u16 = 0xFFFF;
    for &b in bits {
        let top = (reg >> 15) & 1 == 1;
        reg <<= 1;
        if top ^ b {
            reg ^= 0x1021;
        }
    }
    !reg
}

fn u16_bits(v: u16) -> impl Iterator<Item = bool> {
    (0..16).rev().map(move |i| (v >> i) & 1 == 1)
}

/// One tag uplink: an RN16 reply and an EPC reply separated by a fixed
/// idle gap, both driven by the same impaired clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagPacket {
    pub rn16_bits: Vec<bool>,
    pub epc_bits: Vec<bool>,
    pub blf_hz: f64,
    pub miller_m: usize,
    /// Start of frame, relative to the start of the timeline it is rendered on.
    pub t0_s: f64,
    /// Positive values slow the tag clock.
    pub alpha0_hz: f64,
    pub drift: ClockDrift,
    pub gap_s: f64,
    pub preamble: MillerPreamble,
}

impl TagPacket {
    pub fn new(rn16_bits: Vec<bool>, epc_bits: Vec<bool>) -> Self {
        Self {
            rn16_bits,
            epc_bits,
            blf_hz: 250e3,
            miller_m: 4,
            t0_s: 0.0,
            alpha0_hz: 0.0,
            drift: ClockDrift::none(),
            gap_s: 200e-6,
            preamble: MillerPreamble::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rn16_bits.len() != 16 {
            return arg("RN16 must have 16 bits");
        }
        if self.epc_bits.is_empty() || self.epc_bits.len() % 16 != 0 || self.epc_bits.len() > 31 * 16 {
            return arg("EPC length must be a positive multiple of 16 bits, at most 496");
        }
        if !matches!(self.miller_m, 2 | 4 | 8) {
            return arg("Miller M must be 2, 4 or 8");
        }
        if !(self.blf_hz > 0.0) || !(self.gap_s >= 0.0) || !self.t0_s.is_finite() {
            return arg("invalid BLF, gap or t0");
        }
        if self.alpha0_hz.abs() > 0.10 * self.blf_hz * (1.0 + 1e-12) {
            return arg("initial clock offset exceeds 10% of BLF");
        }
        if self.drift.max_abs_hz() > 0.025 * self.blf_hz * (1.0 + 1e-12) {
            return arg("clock fluctuation exceeds 2.5% of BLF");
        }
        if !(self.drift.knot_interval_s > 0.0) || self.drift.knots_hz.is_empty() {
            return arg("invalid drift description");
        }
        Ok(())
    }

    /// PC word, EPC and CRC-16, the payload of the second reply.
    pub fn epc_reply_bits(&self) -> Vec<bool> {
        let words = (self.epc_bits.len() / 16) as u16;
        let pc = words << 11;
        let mut bits: Vec<bool> = u16_bits(pc).chain(self.epc_bits.iter().copied()).collect();
        let crc = crc16_gen2(&bits);
        bits.extend(u16_bits(crc));
        bits
    }

    pub fn layout(&self) -> Result<PacketLayout> {
        self.validate()?;
        let rn16 = miller_halves(&self.rn16_bits, self.miller_m, &self.preamble)?;
        let epc = miller_halves(&self.epc_reply_bits(), self.miller_m, &self.preamble)?;
        let gap = (2.0 * self.gap_s * self.blf_hz).round() as usize;
        let mut halves = rn16.clone();
        halves.extend(std::iter::repeat(0.0).take(gap));
        let epc_start = halves.len();
        halves.extend(&epc);
        Ok(PacketLayout {
            rn16_end: rn16.len(),
            epc_start,
            halves,
            miller_m: self.miller_m,
            preamble_symbols: self.preamble.symbols(),
        })
    }

    /// Subcarrier cycles elapsed since start of frame at time `t`.
    pub fn cycles_at(&self, t: f64) -> f64 {
        let tau = t - self.t0_s;
        (self.blf_hz - self.alpha0_hz) * tau - self.drift.integral(tau)
    }

    pub fn frequency_at(&self, t: f64) -> f64 {
        self.blf_hz - self.alpha0_hz - self.drift.alpha_at(t - self.t0_s)
    }

    /// Inverse of [`cycles_at`](Self::cycles_at).
    pub fn time_at_cycles(&self, u: f64) -> f64 {
        let (slow, fast) = (0.8 * self.blf_hz, 1.2 * self.blf_hz);
        let (mut lo, mut hi) = if u >= 0.0 {
            (self.t0_s + u / fast, self.t0_s + u / slow)
        } else {
            (self.t0_s + u / slow, self.t0_s + u / fast)
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cycles_at(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn timing(&self) -> Result<PacketTiming> {
        let l = self.layout()?;
        let sym = self.miller_m as f64 / self.blf_hz;
        let rn16 = l.rn16_end as f64 / 2.0 / self.blf_hz;
        let epc = (l.halves.len() - l.epc_start) as f64 / 2.0 / self.blf_hz;
        let payload = (self.rn16_bits.len() + self.epc_reply_bits().len()) as f64 * sym;
        Ok(PacketTiming {
            rn16_active_s: rn16,
            epc_active_s: epc,
            active_s: rn16 + epc,
            payload_s: payload,
            total_s: l.halves.len() as f64 / 2.0 / self.blf_hz,
        })
    }
}

/// Nominal durations of a packet at its BLF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketTiming {
    pub rn16_active_s: f64,
    pub epc_active_s: f64,
    /// Both replies, gap excluded.
    pub active_s: f64,
    /// RN16 plus PC, EPC and CRC symbols.
    pub payload_s: f64,
    /// Replies plus gap.
    pub total_s: f64,
}

/// Half-cycle template of a whole packet on the tag's own cycle axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketLayout {
    pub halves: Vec<f64>,
    pub rn16_end: usize,
    pub epc_start: usize,
    pub miller_m: usize,
    pub preamble_symbols: usize,
}

impl PacketLayout {
    pub fn total_cycles(&self) -> f64 {
        self.halves.len() as f64 / 2.0
    }

    pub fn value_at(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        self.halves.get((2.0 * u).floor() as usize).copied().unwrap_or(0.0)
    }

    /// True where the tag is actively replying.
    pub fn active_at(&self, u: f64) -> bool {
        let j = (2.0 * u).floor();
        j >= 0.0 && {
            let j = j as usize;
            j < self.rn16_end || (j >= self.epc_start && j < self.halves.len())
        }
    }

    /// Cycle index where the payload of the reply starting at half `start` begins.
    pub fn payload_cycle(&self, start_half: usize) -> f64 {
        start_half as f64 / 2.0 + (self.preamble_symbols * self.miller_m) as f64
    }
}

/// Template at the nominal clock, then warped by the packet's impairments.
pub fn build_packet_baseband(pkt: &TagPacket, rate_hz: f64) -> Result<BasebandWave> {
    let layout = pkt.layout()?;
    if rate_hz < 8.0 * pkt.blf_hz {
        return arg("rate must be at least 8x the BLF");
    }
    let n = (layout.total_cycles() / pkt.blf_hz * rate_hz).round() as usize;
    let nominal = BasebandWave {
        samples: (0..n)
            .map(|i| Complex64::new(layout.value_at(i as f64 * pkt.blf_hz / rate_hz), 0.0))
            .collect(),
        rate_hz,
        start_s: 0.0,
    };
    apply_clock_offset(&nominal, pkt)
}

/// Render the impaired packet directly on an arbitrary timeline: sample `n`
/// is at `start_s + n / rate_hz`, with the packet's `t0_s` on the same axis.
pub fn render_packet(pkt: &TagPacket, rate_hz: f64, start_s: f64, n: usize) -> Result<BasebandWave> {
    let layout = pkt.layout()?;
    let samples = (0..n)
        .map(|i| {
            let t = start_s + i as f64 / rate_hz;
            if t < pkt.t0_s {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(layout.value_at(pkt.cycles_at(t)), 0.0)
            }
        })
        .collect();
    Ok(BasebandWave { samples, rate_hz, start_s })
}
