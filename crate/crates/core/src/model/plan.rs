use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

pub const PAPER_CARRIERS_MHZ: [f64; 16] = [
    787.1, 798.2, 809.3, 820.4, 831.5, 842.6, 853.7, 864.8, 875.9, 887.0, 898.1, 942.5, 953.6,
    964.7, 975.8, 986.9,
];
pub const FULL_CAPTURE_RATE_HZ: f64 = 245.76e6;
pub const DESK_CAPTURE_RATE_HZ: f64 = 15.36e6;
pub const CHANNEL_OUT_RATE_HZ: f64 = 1.92e6;
const TAG_SIGNAL_BANDWIDTH_HZ: f64 = 250e3;
const MAX_TONE_DBM: f64 = -15.0;

fn one() -> f64 {
    1.0
}

/// Multisine tone set and capture parameters.
///
/// RF frequencies in `carriers_hz` drive every phase computation. Baseband
/// offsets inside the capture are `(f - capture_center_hz) * frequency_scale`,
/// which lets a reduced-rate capture keep the true RF phase model while
/// compressing the tone layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierPlan {
    pub carriers_hz: Vec<f64>,
    pub tone_phases_rad: Vec<f64>,
    pub per_tone_power_dbm: f64,
    /// Per-tone deviation from `per_tone_power_dbm`; empty means all zero.
    #[serde(default)]
    pub power_trim_db: Vec<f64>,
    pub capture_rate_hz: f64,
    pub channel_out_rate_hz: f64,
    pub capture_center_hz: f64,
    #[serde(default = "one")]
    pub frequency_scale: f64,
}

impl CarrierPlan {
    /// The 16-tone plan captured at 245.76 MS/s.
    pub fn paper_default() -> Self {
        let carriers_hz: Vec<f64> = PAPER_CARRIERS_MHZ.iter().map(|m| m * 1e6).collect();
        let mut plan = Self {
            tone_phases_rad: vec![0.0; carriers_hz.len()],
            carriers_hz,
            per_tone_power_dbm: MAX_TONE_DBM,
            power_trim_db: Vec::new(),
            capture_rate_hz: FULL_CAPTURE_RATE_HZ,
            channel_out_rate_hz: CHANNEL_OUT_RATE_HZ,
            capture_center_hz: 887.0e6,
            frequency_scale: 1.0,
        };
        plan.optimize_phases(200);
        plan
    }

    /// Same tones and phases, captured at 15.36 MS/s with the tone layout
    /// compressed by 1/16.
    pub fn desk_default() -> Self {
        let mut plan = Self::paper_default();
        plan.capture_rate_hz = DESK_CAPTURE_RATE_HZ;
        plan.frequency_scale = DESK_CAPTURE_RATE_HZ / FULL_CAPTURE_RATE_HZ;
        plan
    }

    /// `n` tones evenly spaced across `span_hz` starting at `f_low_hz`.
    pub fn uniform(n: usize, f_low_hz: f64, span_hz: f64) -> Result<Self> {
        if n < 2 || span_hz <= 0.0 {
            return arg("uniform plan needs at least two tones and a positive span");
        }
        let step = span_hz / (n - 1) as f64;
        let carriers_hz: Vec<f64> = (0..n).map(|i| f_low_hz + step * i as f64).collect();
        let center = f_low_hz + span_hz / 2.0;
        let mut plan = Self {
            tone_phases_rad: vec![0.0; n],
            carriers_hz,
            per_tone_power_dbm: MAX_TONE_DBM,
            power_trim_db: Vec::new(),
            capture_rate_hz: FULL_CAPTURE_RATE_HZ,
            channel_out_rate_hz: CHANNEL_OUT_RATE_HZ,
            capture_center_hz: center,
            frequency_scale: 1.0,
        };
        plan.optimize_phases(200);
        Ok(plan)
    }

    pub fn num_carriers(&self) -> usize {
        self.carriers_hz.len()
    }

    pub fn bandwidth_hz(&self) -> f64 {
        match (self.carriers_hz.first(), self.carriers_hz.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn baseband_offset_hz(&self, l: usize) -> f64 {
        (self.carriers_hz[l] - self.capture_center_hz) * self.frequency_scale
    }

    pub fn tone_power_dbm(&self, l: usize) -> f64 {
        self.per_tone_power_dbm + self.power_trim_db.get(l).copied().unwrap_or(0.0)
    }

    /// Linear tone amplitude with 0 dBm mapped to 1.
    pub fn tone_amplitude(&self, l: usize) -> f64 {
        10f64.powf(self.tone_power_dbm(l) / 20.0)
    }

    /// Integer tone positions on the common frequency grid, if the carriers
    /// sit on one.
    pub fn tone_grid(&self) -> Option<Vec<i64>> {
        let n = self.carriers_hz.len();
        if n < 2 {
            return Some(vec![0; n]);
        }
        let step = self
            .carriers_hz
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if step <= 0.0 {
            return None;
        }
        let f0 = self.carriers_hz[0];
        let mut bins = Vec::with_capacity(n);
        for f in &self.carriers_hz {
            let b = (f - f0) / step;
            if (b - b.round()).abs() > 1e-6 || b.round() > 4096.0 {
                return None;
            }
            bins.push(b.round() as i64);
        }
        Some(bins)
    }

    /// Replace the tone phases with a low crest-factor set.
    pub fn optimize_phases(&mut self, iterations: usize) {
        let bins = self
            .tone_grid()
            .unwrap_or_else(|| (0..self.carriers_hz.len() as i64).collect());
        self.tone_phases_rad = crate::waveform::optimize_crest_phases_for_bins(&bins, iterations);
    }

    /// Decimation factor from the capture rate to the channel rate.
    pub fn decimation(&self) -> Result<usize> {
        let d = self.capture_rate_hz / self.channel_out_rate_hz;
        if (d - d.round()).abs() > 1e-9 || d < 1.0 {
            return arg("capture rate must be an integer multiple of the channel rate");
        }
        Ok(d.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.carriers_hz.len();
        if n == 0 {
            return arg("carrier plan is empty");
        }
        if self.tone_phases_rad.len() != n {
            return arg("tone phase count differs from carrier count");
        }
        if !self.power_trim_db.is_empty() && self.power_trim_db.len() != n {
            return arg("power trim count differs from carrier count");
        }
        if !(self.capture_rate_hz > 0.0 && self.channel_out_rate_hz > 0.0) {
            return arg("sample rates must be positive");
        }
        if !(self.frequency_scale > 0.0 && self.frequency_scale.is_finite()) {
            return arg("frequency scale must be positive");
        }
        for w in self.carriers_hz.windows(2) {
            if w[1] <= w[0] {
                return arg("carriers must be strictly increasing");
            }
            let spacing = (w[1] - w[0]) * self.frequency_scale;
            if spacing <= 2.0 * TAG_SIGNAL_BANDWIDTH_HZ {
                return arg(format!(
                    "carrier spacing {spacing} Hz does not exceed twice the tag bandwidth"
                ));
            }
        }
        for l in 0..n {
            if self.baseband_offset_hz(l).abs() > self.capture_rate_hz / 2.0 {
                return arg(format!(
                    "carrier {} Hz falls outside the capture band",
                    self.carriers_hz[l]
                ));
            }
            if self.tone_power_dbm(l) > MAX_TONE_DBM + 1e-12 {
                return arg(format!(
                    "carrier {} Hz exceeds {MAX_TONE_DBM} dBm",
                    self.carriers_hz[l]
                ));
            }
        }
        Ok(())
    }

    pub fn subset(&self, carriers: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.carriers_hz.clear();
        out.tone_phases_rad.clear();
        out.power_trim_db.clear();
        for &l in carriers {
            if l >= self.carriers_hz.len() {
                return arg(format!("carrier {l} out of range"));
            }
            out.carriers_hz.push(self.carriers_hz[l]);
            out.tone_phases_rad.push(self.tone_phases_rad[l]);
            if !self.power_trim_db.is_empty() {
                out.power_trim_db.push(self.power_trim_db[l]);
            }
        }
        Ok(out)
    }
}
