//! Multisine excitation, Miller-coded tag replies, clock impairments and
//! backscatter mixing.

mod clock;
mod io;
mod miller;
mod mix;
mod multisine;
mod packet;

use serde::{Deserialize, Serialize};
use num_complex::Complex64;

pub use clock::{apply_clock_offset, ClockDrift};
pub use io::{read_wave, write_wave};
pub use miller::{
    miller_encode, miller_encode_with, miller_halves, miller_slice, MillerPreamble, PREAMBLE_BITS,
};
pub use mix::{backscatter_mix, band_limit};
pub use multisine::{
    crest_factor, newman_phases, optimize_crest_phases, optimize_crest_phases_for_bins,
    periodic_crest_factor, synth_multisine, tone_phase, CrestFactor, MultisineSpec,
};
pub use packet::{
    build_packet_baseband, crc16_gen2, render_packet, PacketLayout, PacketTiming, TagPacket,
};

/// Uniformly sampled complex signal; sample `n` sits at `start_s + n / rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasebandWave {
    pub samples: Vec<Complex64>,
    pub rate_hz: f64,
    pub start_s: f64,
}

impl BasebandWave {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    pub fn time_of(&self, n: usize) -> f64 {
        self.start_s + n as f64 / self.rate_hz
    }
}
