use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::sync::SyncEstimate;
use crate::error::{arg, Result};
use crate::waveform::PacketLayout;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllConfig {
    /// Loop noise bandwidth as a fraction of BLF.
    pub bandwidth_fraction: f64,
    pub damping: f64,
    /// Lock requires the RMS phase error (cycles) over the settled part of
    /// each reply to stay below this.
    pub lock_rms_cycles: f64,
}

impl Default for PllConfig {
    fn default() -> Self {
        Self { bandwidth_fraction: 0.02, damping: 0.707, lock_rms_cycles: 0.08 }
    }
}

impl PllConfig {
    /// Proportional and integral gains per update for a unit-gain detector.
    pub fn gains(&self) -> (f64, f64) {
        let z = self.damping;
        let theta = self.bandwidth_fraction / (z + 1.0 / (4.0 * z));
        let d = 1.0 + 2.0 * z * theta + theta * theta;
        (4.0 * z * theta / d, 4.0 * theta * theta / d)
    }
}

/// Tracked clock of one packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockTrack {
    /// Cycles since the detected start of frame, one per stream sample.
    pub cycles: Vec<f64>,
    /// (time since start of frame, alpha estimate) once per symbol.
    pub alpha_t: Vec<(f64, f64)>,
    pub loop_bandwidth_hz: f64,
    pub lock_flag: bool,
    /// RMS detector output per reply over its settled half.
    pub rms_error_cycles: Vec<f64>,
}

impl ClockTrack {
    /// Alpha estimate at time `tau` after the start of frame.
    pub fn alpha_at(&self, tau: f64) -> f64 {
        match self.alpha_t.iter().position(|(t, _)| *t > tau) {
            Some(0) => self.alpha_t[0].1,
            Some(i) => self.alpha_t[i - 1].1,
            None => self.alpha_t.last().map_or(0.0, |a| a.1),
        }
    }
}

/// Second-order Costas loop on the Miller subcarrier of a real stream.
/// Integrate-and-dump over each NCO cycle; the arctangent detector is
/// insensitive to the data-dependent sign of the baseband level. The loop
/// coasts where `layout` marks the tag silent.
pub fn pll_track(
    stream: &[f64],
    rate_hz: f64,
    start_s: f64,
    sync: &SyncEstimate,
    layout: &PacketLayout,
    blf_hz: f64,
    cfg: &PllConfig,
) -> Result<ClockTrack> {
    if stream.is_empty() || !(rate_hz > 0.0) {
        return arg("empty stream");
    }
    let (k1, k2) = cfg.gains();
    let nominal = (blf_hz - sync.alpha0_hat_hz) / rate_hz;
    let t0 = sync.t0_hat_s;
    let first = ((t0 - start_s) * rate_hz).ceil().max(0.0) as usize;
    let mut cycles = vec![0.0; stream.len()];
    for (n, c) in cycles.iter_mut().enumerate().take(first.min(stream.len())) {
        *c = (start_s + n as f64 / rate_hz - t0) * nominal * rate_hz;
    }
    let mut u = (start_s + first as f64 / rate_hz - t0) * nominal * rate_hz;
    let mut freq = 0.0;
    let (mut i_acc, mut q_acc) = (0.0, 0.0);
    let mut cycle_idx = u.floor();
    let mut errors: Vec<(f64, f64)> = Vec::new();
    let mut alpha_t = Vec::new();
    let symbol = layout.miller_m as f64;
    let mut next_symbol = 0.0;
    let total = layout.total_cycles();
    for n in first..stream.len() {
        cycles[n] = u;
        let x = stream[n];
        let (sn, cs) = (2.0 * PI * u).sin_cos();
        i_acc += x * sn;
        q_acc += x * cs;
        let step = nominal + freq;
        let next = u + step;
        if next.floor() > cycle_idx {
            let active = layout.active_at(cycle_idx + 0.5);
            if active && i_acc != 0.0 {
                let e = (q_acc / i_acc).atan() / (2.0 * PI);
                freq += k2 * e * step;
                u += k1 * e;
                errors.push((cycle_idx, e));
            }
            i_acc = 0.0;
            q_acc = 0.0;
            cycle_idx = next.floor();
        }
        while u >= next_symbol && next_symbol <= total {
            let f_hz = (nominal + freq) * rate_hz;
            alpha_t.push((next_symbol / blf_hz, blf_hz - f_hz));
            next_symbol += symbol;
        }
        u += step;
    }
    let mut rms = Vec::new();
    for (lo, hi) in [(0.0, layout.rn16_end as f64 / 2.0), (layout.epc_start as f64 / 2.0, total)] {
        let mid = 0.5 * (lo + hi);
        let settled: Vec<f64> = errors.iter().filter(|(c, _)| *c >= mid && *c < hi).map(|e| e.1).collect();
        if !settled.is_empty() {
            rms.push((settled.iter().map(|e| e * e).sum::<f64>() / settled.len() as f64).sqrt());
        }
    }
    let lock_flag = rms.len() == 2 && rms.iter().all(|r| *r < cfg.lock_rms_cycles);
    Ok(ClockTrack {
        cycles,
        alpha_t,
        loop_bandwidth_hz: cfg.bandwidth_fraction * blf_hz,
        lock_flag,
        rms_error_cycles: rms,
    })
}
