use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::ChannelBank;
use crate::error::{arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchConfig {
    pub half_width_hz: f64,
    pub blf_hz: f64,
}

impl Default for NotchConfig {
    fn default() -> Self {
        Self { half_width_hz: 10e3, blf_hz: 250e3 }
    }
}

/// Remove every DFT bin within `half_width_hz` of DC from each stream.
pub fn notch_dc(bank: &ChannelBank, cfg: &NotchConfig) -> Result<ChannelBank> {
    if bank.rate_hz <= 2.0 * cfg.blf_hz {
        return arg("channel rate must exceed twice the BLF");
    }
    if !(cfg.half_width_hz > 0.0) || 2.0 * cfg.half_width_hz >= cfg.blf_hz {
        return arg("notch must be narrower than the BLF spacing");
    }
    let n = bank.len();
    let mut out = bank.clone();
    if n == 0 {
        return Ok(out);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let df = bank.rate_hz / n as f64;
    let scale = 1.0 / n as f64;
    for s in &mut out.streams {
        fwd.process(s);
        for (i, v) in s.iter_mut().enumerate() {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            if (k * df).abs() <= cfg.half_width_hz {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        inv.process(s);
        for v in s.iter_mut() {
            *v *= scale;
        }
    }
    Ok(out)
}

/// Ideal N-bit quantizer dynamic range in dB.
pub fn dynamic_range_required(bits: u32) -> f64 {
    6.02 * bits as f64 + 1.76
}
