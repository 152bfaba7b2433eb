//! Packet recovery from per-carrier streams: preamble search, clock
//! tracking, diversity combining, Viterbi decoding and full-packet channel
//! estimation.

mod combine;
mod compensate;
mod estimate;
mod pipeline;
mod pll;
mod sync;
mod viterbi;

use serde::{Deserialize, Serialize};

pub use combine::{msnr_combine, mrc_combine, MsnrResult};
pub use compensate::compensate_clock;
pub use estimate::{full_packet_channel_estimate, segment_channel_estimate, EstimateSegment};
pub use pipeline::{bits_to_hex, decode_pipeline, hex_to_bits, DecodedPacket};
pub use pll::{pll_track, ClockTrack, PllConfig};
pub use sync::{preamble_search, preamble_search_around, SearchWindow, SyncEstimate};
pub use viterbi::{reply_metric, viterbi_decode, ViterbiResult};

use crate::channelizer::NotchConfig;
use crate::error::Result;
use crate::waveform::{miller_halves, MillerPreamble, PacketLayout};

/// Uplink format and tuning shared by every decoder stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub blf_hz: f64,
    pub miller_m: usize,
    pub gap_s: f64,
    pub preamble: MillerPreamble,
    pub epc_len_bits: usize,
    pub detection_threshold: f64,
    /// Half-width of the clock-offset search grid as a fraction of BLF;
    /// covers the initial offset plus the drift bound.
    pub alpha_range: f64,
    /// Clock-offset grid step as a fraction of BLF.
    pub alpha_step: f64,
    /// Half-width of the EPC re-acquisition grid around the tracked
    /// offset, as a fraction of BLF.
    pub reacquire_range: f64,
    pub pll: PllConfig,
    /// Templates are low-passed to this bandwidth before matched filtering.
    pub template_bandwidth_hz: Option<f64>,
    pub notch: Option<NotchConfig>,
    pub viterbi_threshold: f64,
    /// Samples before the detected start used for noise statistics.
    pub noise_window_s: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            blf_hz: 250e3,
            miller_m: 4,
            gap_s: 200e-6,
            preamble: MillerPreamble::default(),
            epc_len_bits: 96,
            detection_threshold: 0.3,
            alpha_range: 0.125,
            alpha_step: 0.005,
            reacquire_range: 0.025,
            pll: PllConfig::default(),
            template_bandwidth_hz: Some(300e3),
            notch: Some(NotchConfig::default()),
            viterbi_threshold: 0.2,
            noise_window_s: 1e-3,
        }
    }
}

impl DecoderConfig {
    pub fn epc_reply_len(&self) -> usize {
        self.epc_len_bits + 32
    }

    /// Layout holding only one reply preamble.
    pub fn preamble_layout(&self) -> Result<PacketLayout> {
        let blank = self.layout(None, None)?;
        let n = 2 * self.miller_m * self.preamble.symbols();
        Ok(PacketLayout {
            halves: blank.halves[..n].to_vec(),
            rn16_end: n,
            epc_start: n,
            miller_m: self.miller_m,
            preamble_symbols: self.preamble.symbols(),
        })
    }

    /// Packet layout with the given payloads; `None` leaves that payload
    /// (and its trailing dummy bit) blank, keeping only the preamble.
    pub fn layout(&self, rn16: Option<&[bool]>, epc_reply: Option<&[bool]>) -> Result<PacketLayout> {
        let m = self.miller_m;
        let pre = self.preamble.symbols();
        let reply = |bits: Option<&[bool]>, n: usize| -> Result<Vec<f64>> {
            match bits {
                Some(b) => miller_halves(b, m, &self.preamble),
                None => {
                    let mut h = miller_halves(&vec![false; n], m, &self.preamble)?;
                    for v in &mut h[2 * m * pre..] {
                        *v = 0.0;
                    }
                    Ok(h)
                }
            }
        };
        let rn = reply(rn16, 16)?;
        let ep = reply(epc_reply, self.epc_reply_len())?;
        let gap = (2.0 * self.gap_s * self.blf_hz).round() as usize;
        let mut halves = rn.clone();
        halves.extend(std::iter::repeat(0.0).take(gap));
        let epc_start = halves.len();
        halves.extend(ep);
        Ok(PacketLayout {
            halves,
            rn16_end: rn.len(),
            epc_start,
            miller_m: m,
            preamble_symbols: pre,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::TagPacket;

    #[test]
    fn layout_matches_packet() {
        let rn: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
        let epc: Vec<bool> = (0..96).map(|i| i % 5 < 2).collect();
        let pkt = TagPacket::new(rn.clone(), epc);
        let cfg = DecoderConfig::default();
        let a = pkt.layout().unwrap();
        let b = cfg.layout(Some(&rn), Some(&pkt.epc_reply_bits())).unwrap();
        assert_eq!(a, b);
        let blank = cfg.layout(None, None).unwrap();
        assert_eq!(blank.halves.len(), a.halves.len());
        let known = blank.halves.iter().filter(|v| **v != 0.0).count();
        assert_eq!(known, 2 * 2 * 4 * cfg.preamble.symbols());
    }
}
